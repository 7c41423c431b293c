"""Ontology model: class/property hierarchies, domain/range, disjointness.

Properties that sit on a subproperty cycle are equivalent; after
canonicalization each cycle is represented by its lexicographically smallest
IRI and the property graph is a DAG.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Literal as Lit

import networkx as nx

from .rdf import (
    DISJOINT_WITH,
    DOMAIN,
    RANGE,
    RDF_TYPE,
    RDFS,
    SUBCLASS_OF,
    SUBPROPERTY_OF,
    XSD,
    Dataset,
    Triple,
)

Kind = Lit["class", "property"]
Direction = Lit["sub", "super"]


class CanonicalMap(dict):
    """property IRI -> canonical property IRI; unknown IRIs map to themselves."""

    def resolve(self, iri: str) -> str:
        return self.get(iri, iri)


@dataclass
class Ontology:
    subclass_edges: set[tuple[str, str]] = field(default_factory=set)
    subproperty_edges: set[tuple[str, str]] = field(default_factory=set)
    domain_of: dict[str, list[str]] = field(default_factory=dict)
    range_of: dict[str, list[str]] = field(default_factory=dict)
    disjoint_pairs: set[frozenset[str]] = field(default_factory=set)
    # None until canonicalize_property_cycles has run
    canonical: CanonicalMap | None = None

    @property
    def is_canonical(self) -> bool:
        return self.canonical is not None

    @cached_property
    def _adjacency(self) -> dict[tuple[str, str], dict[str, list[str]]]:
        adj: dict[tuple[str, str], dict[str, list[str]]] = {}
        for kind, edges in (("class", self.subclass_edges), ("property", self.subproperty_edges)):
            down: dict[str, list[str]] = {}
            up: dict[str, list[str]] = {}
            for child, parent in edges:
                down.setdefault(parent, []).append(child)
                up.setdefault(child, []).append(parent)
            for table in (down, up):
                for k in table:
                    table[k].sort()
            adj[(kind, "sub")] = down
            adj[(kind, "super")] = up
        return adj

    def neighbours(self, kind: Kind, direction: Direction, iri: str) -> list[str]:
        return self._adjacency[(kind, direction)].get(iri, [])

    def properties(self) -> set[str]:
        props = {p for edge in self.subproperty_edges for p in edge}
        props.update(self.domain_of)
        props.update(self.range_of)
        props.discard(RDF_TYPE)
        return props

    def classes(self) -> set[str]:
        classes = {c for edge in self.subclass_edges for c in edge}
        for values in (*self.domain_of.values(), *self.range_of.values()):
            classes.update(values)
        for pair in self.disjoint_pairs:
            classes.update(pair)
        return classes

    def resolve(self, prop: str) -> str:
        return self.canonical.resolve(prop) if self.canonical is not None else prop


def extract_ontology(schema: Dataset) -> Ontology:
    o = Ontology()
    for t in schema.sorted():
        p = t.predicate.lexical
        if not t.object.is_iri:
            continue
        s, obj = t.subject.lexical, t.object.lexical
        if p == SUBCLASS_OF:
            o.subclass_edges.add((s, obj))
        elif p == SUBPROPERTY_OF:
            o.subproperty_edges.add((s, obj))
        elif p == DOMAIN:
            o.domain_of.setdefault(s, [])
            if obj not in o.domain_of[s]:
                o.domain_of[s].append(obj)
        elif p == RANGE:
            o.range_of.setdefault(s, [])
            if obj not in o.range_of[s]:
                o.range_of[s].append(obj)
        elif p == DISJOINT_WITH:
            o.disjoint_pairs.add(frozenset((s, obj)))
    return o


def ontology_to_dataset(o: Ontology) -> Dataset:
    data = Dataset()
    for child, parent in o.subclass_edges:
        data.add(Triple.of(child, SUBCLASS_OF, parent))
    for child, parent in o.subproperty_edges:
        data.add(Triple.of(child, SUBPROPERTY_OF, parent))
    for prop, classes in o.domain_of.items():
        data.update(Triple.of(prop, DOMAIN, c) for c in classes)
    for prop, classes in o.range_of.items():
        data.update(Triple.of(prop, RANGE, c) for c in classes)
    for pair in o.disjoint_pairs:
        a, b = sorted(pair) if len(pair) == 2 else (next(iter(pair)),) * 2
        data.add(Triple.of(a, DISJOINT_WITH, b))
    return data


def canonicalize_property_cycles(o: Ontology) -> tuple[Ontology, CanonicalMap]:
    graph = nx.DiGraph()
    graph.add_nodes_from(o.properties())
    graph.add_edges_from(o.subproperty_edges)
    cmap = CanonicalMap()
    if o.canonical is not None:
        cmap.update(o.canonical)
    for component in nx.strongly_connected_components(graph):
        rep = min(component)
        for p in component:
            cmap[p] = rep
    # earlier rounds may have pointed at a property that was merged again now
    for p, c in list(cmap.items()):
        cmap[p] = cmap.get(c, c)

    edges = {(cmap.resolve(a), cmap.resolve(b)) for a, b in o.subproperty_edges}
    edges = {(a, b) for a, b in edges if a != b}

    def merge(table: dict[str, list[str]]) -> dict[str, list[str]]:
        merged: dict[str, list[str]] = {}
        for prop in sorted(table):
            target = merged.setdefault(cmap.resolve(prop), [])
            target.extend(c for c in table[prop] if c not in target)
        return merged

    result = replace(
        o,
        subclass_edges=set(o.subclass_edges),
        subproperty_edges=edges,
        domain_of=merge(o.domain_of),
        range_of=merge(o.range_of),
        disjoint_pairs=set(o.disjoint_pairs),
        canonical=cmap,
    )
    return result, cmap


def ensure_canonical(o: Ontology) -> Ontology:
    return o if o.is_canonical else canonicalize_property_cycles(o)[0]


def subsumption_closure(o: Ontology, kind: Kind, start: str, direction: Direction) -> tuple[str, ...]:
    """Reflexive-transitive closure in discovery order.

    Breadth-first from ``start``; siblings are visited in lexicographic order,
    so the result is deterministic and begins with ``start``.
    """
    if kind == "property":
        start = o.resolve(start)
    seen = {start}
    order = [start]
    queue = deque([start])
    while queue:
        node = queue.popleft()
        for nxt in o.neighbours(kind, direction, node):
            if nxt not in seen:
                seen.add(nxt)
                order.append(nxt)
                queue.append(nxt)
    return tuple(order)


def top_properties(o: Ontology, data_properties: Iterable[str] = ()) -> set[str]:
    o = ensure_canonical(o)
    props = o.properties() | {o.resolve(p) for p in data_properties}
    props.discard(RDF_TYPE)
    return {p for p in props if not o.neighbours("property", "super", p)}


def top_assignment(o: Ontology, properties: Iterable[str]) -> dict[str, str]:
    """Map each property to the top-property whose relation stores it.

    A property under several top-properties goes to the lexicographically
    smallest one.
    """
    o = ensure_canonical(o)
    assignment = {}
    for p in properties:
        cp = o.resolve(p)
        supers = subsumption_closure(o, "property", cp, "super")
        tops = [s for s in supers if not o.neighbours("property", "super", s)]
        assignment[p] = min(tops)
    return assignment


def classes_disjoint(o: Ontology, a: str, b: str) -> bool:
    supers_a = set(subsumption_closure(o, "class", a, "super"))
    supers_b = set(subsumption_closure(o, "class", b, "super"))
    for pair in o.disjoint_pairs:
        if len(pair) == 1:
            (x,) = pair
            if x in supers_a and x in supers_b:
                return True
            continue
        x, y = pair
        if (x in supers_a and y in supers_b) or (y in supers_a and x in supers_b):
            return True
    return False


def is_datatype(iri: str) -> bool:
    return iri.startswith(XSD) or iri == RDFS + "Literal"


@dataclass(frozen=True)
class Violation:
    triple: Triple
    kind: str  # "domain", "range" or "disjoint"
    expected: str


@dataclass
class ConformanceReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def conforms(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.conforms


def check_conformance(data: Dataset, o: Ontology) -> ConformanceReport:
    """Check that data carries the types its properties' domain/range demand.

    Constraints are inherited from super-properties. Individuals typed with
    two disjoint classes are reported too.
    """
    o = ensure_canonical(o)
    types: dict[str, set[str]] = {}
    type_triples: dict[str, list[Triple]] = {}
    for t in data:
        if t.predicate.lexical == RDF_TYPE and t.object.is_iri:
            types.setdefault(t.subject.lexical, set()).add(t.object.lexical)
            type_triples.setdefault(t.subject.lexical, []).append(t)

    super_cache: dict[str, set[str]] = {}

    def supers_of(individual: str) -> set[str]:
        if individual not in super_cache:
            acc: set[str] = set()
            for c in types.get(individual, ()):
                acc.update(subsumption_closure(o, "class", c, "super"))
            super_cache[individual] = acc
        return super_cache[individual]

    constraint_cache: dict[str, tuple[list[str], list[str]]] = {}

    def constraints(prop: str) -> tuple[list[str], list[str]]:
        if prop not in constraint_cache:
            domains, ranges = [], []
            for anc in subsumption_closure(o, "property", prop, "super"):
                if len(o.domain_of.get(anc, ())) == 1:
                    domains.append(o.domain_of[anc][0])
                if len(o.range_of.get(anc, ())) == 1:
                    ranges.append(o.range_of[anc][0])
            constraint_cache[prop] = (domains, ranges)
        return constraint_cache[prop]

    report = ConformanceReport()
    for t in data.sorted():
        p = t.predicate.lexical
        if p == RDF_TYPE:
            continue
        domains, ranges = constraints(o.resolve(p))
        for d in domains:
            if d not in supers_of(t.subject.lexical):
                report.violations.append(Violation(t, "domain", d))
        for r in ranges:
            if not t.object.is_iri:
                if not is_datatype(r):
                    report.violations.append(Violation(t, "range", r))
            elif is_datatype(r) or r not in supers_of(t.object.lexical):
                report.violations.append(Violation(t, "range", r))

    for individual in sorted(types):
        sup = supers_of(individual)
        for pair in sorted(o.disjoint_pairs, key=sorted):
            members = sorted(pair)
            x, y = (members * 2)[:2]
            if x in sup and y in sup:
                clash = next(
                    t for t in sorted(type_triples[individual], key=Triple.sort_key)
                    if y in subsumption_closure(o, "class", t.object.lexical, "super")
                )
                report.violations.append(Violation(clash, "disjoint", x))
    return report
