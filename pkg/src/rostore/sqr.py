"""Semantic query rewriting driven by the ontology.

Two rule sets are applied. ``property_check`` compares the types queried for
a property's subject/object against its declared domain/range: a disjoint
type makes the query unsatisfiable, and a type implied by the declaration
makes the rdf:type pattern redundant (only on conformant data). Then
``subsume_expand`` widens every property and class to its sub-closure so the
stores, which hold no entailed triples, still return complete answers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Union

from .ontology import Ontology, classes_disjoint, ensure_canonical, subsumption_closure
from .query import SelectQuery, TriplePattern, Variable, emit_sql
from .rdf import Term, TermKind


class Rule(str, enum.Enum):
    SUBSUME_PROPERTY = "SUBSUME_PROPERTY"
    SUBSUME_CLASS = "SUBSUME_CLASS"
    ELIMINATE_TYPE_JOIN = "ELIMINATE_TYPE_JOIN"


@dataclass(frozen=True)
class ExpandedQuery:
    base: SelectQuery
    property_expansion: dict[int, tuple[str, ...]] = field(default_factory=dict, hash=False)
    class_expansion: dict[int, tuple[str, ...]] = field(default_factory=dict, hash=False)

    def sql(self, descriptor) -> str:
        return emit_sql(self.base, self.property_expansion, self.class_expansion, descriptor)


@dataclass(frozen=True)
class Unsatisfiable:
    pattern_index: int
    property: str
    constraint: str  # "domain" or "range"
    declared: str
    queried: str

    def explain(self) -> str:
        return (
            f"UNSAT: pattern #{self.pattern_index}: {self.property} {self.constraint} "
            f"is {self.declared}, disjoint with queried {self.queried}"
        )


@dataclass(frozen=True)
class Rewritten:
    query: ExpandedQuery
    applied: tuple[Rule, ...] = ()


RewriteOutcome = Union[Unsatisfiable, Rewritten]


@dataclass(frozen=True)
class RewriteFlags:
    conformant: bool = False
    subsume: bool = True
    property_check: bool = True
    # only consulted when subsume is on; False keeps class expansion alone
    subsume_properties: bool = True

    def label(self) -> str:
        parts = []
        if not self.subsume:
            parts.append("no-subsume")
        elif not self.subsume_properties:
            parts.append("no-property-subsume")
        if not self.property_check:
            parts.append("no-property-check")
        if self.conformant:
            parts.append("assume-conformant")
        return "+".join(parts) or "default"


def canonicalize_query(q: SelectQuery, o: Ontology) -> SelectQuery:
    patterns = []
    for tp in q.patterns:
        p = o.resolve(tp.predicate.lexical)
        if p != tp.predicate.lexical:
            tp = TriplePattern(tp.subject, Term(TermKind.IRI, p), tp.object)
        patterns.append(tp)
    return q.with_patterns(patterns)


def identity_expansion(q: SelectQuery) -> ExpandedQuery:
    props, classes = {}, {}
    for i, tp in enumerate(q.patterns):
        if not tp.is_type:
            props[i] = (tp.predicate.lexical,)
        elif isinstance(tp.object, Term) and tp.object.is_iri:
            classes[i] = (tp.object.lexical,)
    return ExpandedQuery(q, props, classes)


def subsume_expand(q: SelectQuery, o: Ontology, properties: bool = True, classes: bool = True) -> ExpandedQuery:
    o = ensure_canonical(o)
    q = canonicalize_query(q, o)
    expanded = identity_expansion(q)
    if properties:
        for i in expanded.property_expansion:
            expanded.property_expansion[i] = subsumption_closure(o, "property", q.patterns[i].predicate.lexical, "sub")
    if classes:
        for i in expanded.class_expansion:
            expanded.class_expansion[i] = subsumption_closure(o, "class", q.patterns[i].object.lexical, "sub")
    return expanded


def _typed_variables(q: SelectQuery) -> list[tuple[int, Variable, str]]:
    return [
        (j, tp.subject, tp.object.lexical)
        for j, tp in enumerate(q.patterns)
        if tp.is_type and isinstance(tp.subject, Variable) and isinstance(tp.object, Term) and tp.object.is_iri
    ]


def _constraint_pairs(q: SelectQuery, o: Ontology):
    """Yield (pattern, property, kind, declared class, type pattern, queried class)
    for every property pattern whose typed variable meets a single-valued
    domain or range declaration."""
    typed = _typed_variables(q)
    for i, tp in enumerate(q.patterns):
        if tp.is_type:
            continue
        p = tp.predicate.lexical
        for kind, term, table in (("domain", tp.subject, o.domain_of), ("range", tp.object, o.range_of)):
            declared = table.get(p, [])
            if not isinstance(term, Variable) or len(declared) != 1:
                continue
            for j, var, queried in typed:
                if var == term:
                    yield i, p, kind, declared[0], j, queried


def property_check(q: SelectQuery, o: Ontology, conformant: bool) -> RewriteOutcome:
    o = ensure_canonical(o)
    q = canonicalize_query(q, o)
    pairs = list(_constraint_pairs(q, o))
    for i, p, kind, declared, _, queried in pairs:
        if classes_disjoint(o, declared, queried):
            return Unsatisfiable(i, p, kind, declared, queried)

    redundant: list[int] = []
    if conformant:
        for _, _, _, declared, j, queried in pairs:
            if j not in redundant and queried in subsumption_closure(o, "class", declared, "super"):
                redundant.append(j)
    survivors = [tp for j, tp in enumerate(q.patterns) if j not in redundant]
    applied = (Rule.ELIMINATE_TYPE_JOIN,) * len(redundant)
    return Rewritten(identity_expansion(q.with_patterns(survivors)), applied)


def rewrite(q: SelectQuery, o: Ontology, flags: RewriteFlags = RewriteFlags()) -> RewriteOutcome:
    o = ensure_canonical(o)
    q = canonicalize_query(q, o)
    applied: list[Rule] = []
    if flags.property_check:
        outcome = property_check(q, o, flags.conformant)
        if isinstance(outcome, Unsatisfiable):
            return outcome
        q = outcome.query.base
        applied.extend(outcome.applied)
    if not flags.subsume:
        return Rewritten(identity_expansion(q), tuple(applied))
    expanded = subsume_expand(q, o, properties=flags.subsume_properties)
    for i in sorted(expanded.property_expansion):
        if len(expanded.property_expansion[i]) > 1:
            applied.append(Rule.SUBSUME_PROPERTY)
    for i in sorted(expanded.class_expansion):
        if len(expanded.class_expansion[i]) > 1:
            applied.append(Rule.SUBSUME_CLASS)
    return Rewritten(expanded, tuple(applied))
