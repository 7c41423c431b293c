"""Query planning and execution over a loaded store, plus a reference evaluator.

Plans are left-deep in pattern order. A pattern whose expansion spans several
relations becomes a Union of Scans; properties sharing a merged relation
collapse into one Scan with a property filter. Joins use merge join when both
inputs are known to arrive sorted on the join variable, hash join otherwise.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable, Union as TUnion

from .ontology import Ontology
from .query import PatternTerm, SelectQuery, TriplePattern, Variable
from .rdf import RDF_TYPE, Dataset, Term, TermKind
from .sqr import Rewritten, RewriteOutcome, Unsatisfiable
from .storage import (
    LayoutDescriptor,
    LayoutKind,
    Orientation,
    StoreInstance,
    UnknownPredicate,
    scan_order,
    scan_relation,
)


class PlanError(Exception):
    pass


class UnknownRelation(PlanError):
    pass


@dataclass
class Scan:
    relation: str
    arity: int
    pattern_index: int
    subject: PatternTerm
    object: PatternTerm
    property_filter: tuple[str, ...] | None = None
    object_in: tuple[Term, ...] | None = None
    bound: tuple[str, Term] | None = None
    sorted_on: Variable | None = None

    @property
    def schema(self) -> tuple[Variable, ...]:
        out: list[Variable] = []
        for t in (self.subject, self.object):
            if isinstance(t, Variable) and t not in out:
                out.append(t)
        return tuple(out)


@dataclass
class Union:
    children: list[Scan]

    @property
    def schema(self) -> tuple[Variable, ...]:
        return self.children[0].schema

    sorted_on = None


@dataclass
class Join:
    left: "Node"
    right: "Node"
    on: tuple[Variable, ...]
    algorithm: str  # "merge" or "hash"

    @property
    def schema(self) -> tuple[Variable, ...]:
        return self.left.schema + tuple(v for v in self.right.schema if v not in self.left.schema)

    @property
    def sorted_on(self) -> Variable | None:
        return self.on[0] if self.algorithm == "merge" else self.left.sorted_on


@dataclass
class Project:
    child: "Node"
    variables: tuple[Variable, ...]


Node = TUnion[Scan, Union, Join]


@dataclass
class PhysicalPlan:
    root: Project
    kind: LayoutKind
    orientation: Orientation


@dataclass(frozen=True)
class PlanMetrics:
    relations_scanned: int = 0
    joins: int = 0
    unions: int = 0

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.relations_scanned, self.joins, self.unions)

    def __str__(self) -> str:
        return f"scans={self.relations_scanned} joins={self.joins} unions={self.unions}"


@dataclass(frozen=True)
class ResultSet:
    variables: tuple[str, ...]
    rows: frozenset[tuple[Term, ...]] = field(default_factory=frozenset)

    def __len__(self) -> int:
        return len(self.rows)

    def sorted_rows(self) -> list[tuple[Term, ...]]:
        return sorted(self.rows, key=lambda row: tuple(t.sort_key() for t in row))

    def to_text(self) -> str:
        lines = ["\t".join("?" + v for v in self.variables)]
        lines.extend("\t".join(t.n3() for t in row) for row in self.sorted_rows())
        return "\n".join(lines) + "\n"


# -- planning ------------------------------------------------------------------

def _var_at(scan: Scan, position: str | None) -> Variable | None:
    if position is None:
        return None
    term = scan.subject if position == "subject" else scan.object
    return term if isinstance(term, Variable) else None


def _make_scan(i, tp, relation, arity, property_filter, object_in, orientation) -> Scan:
    bound = None
    if isinstance(tp.subject, Term):
        bound = ("subject", tp.subject)
        if isinstance(tp.object, Term) and object_in is None:
            object_in = (tp.object,)
    elif isinstance(tp.object, Term) and object_in is None:
        bound = ("object", tp.object)
    scan = Scan(relation, arity, i, tp.subject, tp.object, property_filter, object_in, bound)
    order = scan_order(
        arity,
        orientation,
        None if property_filter is None else len(property_filter),
        bound[0] if bound else None,
        None if object_in is None else len(object_in),
    )
    scan.sorted_on = _var_at(scan, order)
    return scan


def _pattern_access(i: int, tp: TriplePattern, rewritten: Rewritten, d: LayoutDescriptor, orientation) -> Node:
    expanded = rewritten.query
    try:
        if tp.is_type:
            relation, arity = d.relation_for(RDF_TYPE)
            object_in = None
            if isinstance(tp.object, Term):
                classes = expanded.class_expansion.get(i, (tp.object.lexical,))
                object_in = tuple(Term(TermKind.IRI, c) for c in classes)
            pfilter = (RDF_TYPE,) if arity == 3 else None
            return _make_scan(i, tp, relation, arity, pfilter, object_in, orientation)

        props = expanded.property_expansion.get(i, (tp.predicate.lexical,))
        grouped: dict[str, list[str]] = {}
        for p in props:
            grouped.setdefault(d.relation_for(p)[0], []).append(p)
    except UnknownPredicate as exc:
        raise UnknownRelation(str(exc)) from exc

    scans = []
    for relation, members in grouped.items():
        arity = d.relations[relation]
        pfilter = None
        if arity == 3 and not set(d.members[relation]) <= set(members):
            pfilter = tuple(members)
        scans.append(_make_scan(i, tp, relation, arity, pfilter, None, orientation))
    return scans[0] if len(scans) == 1 else Union(scans)


def plan_query(outcome: RewriteOutcome, d: LayoutDescriptor, orientation: Orientation) -> PhysicalPlan:
    if not isinstance(outcome, Rewritten):
        raise PlanError("cannot plan an unsatisfiable query")
    q = outcome.query.base
    node: Node | None = None
    for i, tp in enumerate(q.patterns):
        access = _pattern_access(i, tp, outcome, d, orientation)
        if node is None:
            node = access
            continue
        on = tuple(v for v in access.schema if v in node.schema)
        merge = len(on) == 1 and node.sorted_on == on[0] and access.sorted_on == on[0]
        node = Join(node, access, on, "merge" if merge else "hash")
    return PhysicalPlan(Project(node, q.projection), d.kind, orientation)


def _walk(node) -> Iterable:
    yield node
    if isinstance(node, Project):
        yield from _walk(node.child)
    elif isinstance(node, Join):
        yield from _walk(node.left)
        yield from _walk(node.right)
    elif isinstance(node, Union):
        for child in node.children:
            yield from _walk(child)


def plan_metrics(plan: PhysicalPlan | None) -> PlanMetrics:
    if plan is None:
        return PlanMetrics()
    scans = joins = unions = 0
    for node in _walk(plan.root):
        if isinstance(node, Scan):
            scans += 1
        elif isinstance(node, Join):
            joins += 1
        elif isinstance(node, Union):
            unions += len(node.children) - 1
    return PlanMetrics(scans, joins, unions)


def _describe(node) -> str:
    if isinstance(node, Project):
        return "Project " + " ".join(str(v) for v in node.variables)
    if isinstance(node, Join):
        return f"Join {node.algorithm} on " + " ".join(str(v) for v in node.on) if node.on else "Join hash (cross product)"
    if isinstance(node, Union):
        return f"Union ({len(node.children)} inputs)"
    parts = [f"Scan {node.relation}", f"pattern#{node.pattern_index}"]
    if node.property_filter is not None:
        parts.append("property IN {" + ", ".join(node.property_filter) + "}")
    if node.bound is not None:
        parts.append(f"{node.bound[0]}={node.bound[1].n3()}")
    if node.object_in is not None:
        parts.append("object IN {" + ", ".join(t.lexical for t in node.object_in) + "}")
    if node.sorted_on is not None:
        parts.append(f"sorted on {node.sorted_on}")
    return " ".join(parts)


def explain(plan: PhysicalPlan) -> str:
    lines = []

    def visit(node, depth):
        lines.append("  " * depth + _describe(node))
        if isinstance(node, Project):
            visit(node.child, depth + 1)
        elif isinstance(node, Join):
            visit(node.left, depth + 1)
            visit(node.right, depth + 1)
        elif isinstance(node, Union):
            for child in node.children:
                visit(child, depth + 1)

    visit(plan.root, 0)
    lines.append(str(plan_metrics(plan)))
    return "\n".join(lines) + "\n"


def force_hash_joins(plan: PhysicalPlan) -> PhysicalPlan:
    """Copy of ``plan`` with every join executed as a hash join."""

    def copy(node):
        if isinstance(node, Join):
            return Join(copy(node.left), copy(node.right), node.on, "hash")
        return node

    return PhysicalPlan(Project(copy(plan.root.child), plan.root.variables), plan.kind, plan.orientation)


# -- execution -----------------------------------------------------------------

Rows = list[tuple[int, ...]]


def _run_scan(scan: Scan, store: StoreInstance) -> Rows:
    encode = store.dictionary.encode
    bound = None
    if scan.bound is not None:
        tid = encode(scan.bound[1])
        if tid is None:
            return []
        bound = (scan.bound[0], tid)
    cursor = scan_relation(store, scan.relation, scan.property_filter, bound, scan.object_in)
    rows = cursor.gather()
    s, o = scan.subject, scan.object
    s_var, o_var = isinstance(s, Variable), isinstance(o, Variable)
    if s_var and o_var:
        if s == o:
            return [(r[0],) for r in rows if r[0] == r[1]]
        return [(r[0], r[1]) for r in rows]
    if s_var:
        return [(r[0],) for r in rows]
    if o_var:
        return [(r[1],) for r in rows]
    return [()] if rows else []


def _hash_join(left: Rows, right: Rows, lkeys: list[int], rkeys: list[int], rextra: list[int]) -> Rows:
    table: dict[tuple, list[tuple]] = {}
    for r in right:
        table.setdefault(tuple(r[k] for k in rkeys), []).append(tuple(r[k] for k in rextra))
    out = []
    for l in left:
        for extra in table.get(tuple(l[k] for k in lkeys), ()):
            out.append(l + extra)
    return out


def _merge_join(left: Rows, right: Rows, lk: int, rk: int, rextra: list[int]) -> Rows:
    out = []
    i = j = 0
    nl, nr = len(left), len(right)
    prev_l = prev_r = -1
    while i < nl and j < nr:
        a, b = left[i][lk], right[j][rk]
        if a < prev_l or b < prev_r:
            raise AssertionError("merge join input is not sorted on the join key")
        prev_l, prev_r = a, b
        if a < b:
            i += 1
        elif a > b:
            j += 1
        else:
            i2 = i
            while i2 < nl and left[i2][lk] == a:
                i2 += 1
            j2 = j
            while j2 < nr and right[j2][rk] == a:
                j2 += 1
            for l in left[i:i2]:
                for r in right[j:j2]:
                    out.append(l + tuple(r[k] for k in rextra))
            i, j = i2, j2
    return out


def _execute(node, store: StoreInstance) -> Rows:
    if isinstance(node, Scan):
        return _run_scan(node, store)
    if isinstance(node, Union):
        rows: Rows = []
        for child in node.children:
            rows.extend(_run_scan(child, store))
        return rows
    left = _execute(node.left, store)
    right = _execute(node.right, store)
    ls, rs = node.left.schema, node.right.schema
    lkeys = [ls.index(v) for v in node.on]
    rkeys = [rs.index(v) for v in node.on]
    rextra = [k for k, v in enumerate(rs) if v not in node.on]
    if node.algorithm == "merge":
        return _merge_join(left, right, lkeys[0], rkeys[0], rextra)
    return _hash_join(left, right, lkeys, rkeys, rextra)


def execute_plan(plan: PhysicalPlan, store: StoreInstance) -> ResultSet:
    if plan.kind is not store.descriptor.kind or plan.orientation is not store.orientation:
        raise PlanError("plan was built for a different layout or orientation")
    project = plan.root
    rows = _execute(project.child, store)
    schema = project.child.schema
    positions = [schema.index(v) for v in project.variables]
    decode = store.dictionary.decode
    ids = {tuple(r[k] for k in positions) for r in rows}
    return ResultSet(
        tuple(v.name for v in project.variables),
        frozenset(tuple(decode(t) for t in row) for row in ids),
    )


@dataclass
class QueryRun:
    outcome: RewriteOutcome
    plan: PhysicalPlan | None
    result: ResultSet
    metrics: PlanMetrics
    seconds: float


def run_query(q: SelectQuery, store: StoreInstance, o: Ontology, flags) -> QueryRun:
    """Rewrite, plan and execute one query, timing the whole pipeline."""
    from .sqr import rewrite

    start = time.perf_counter()
    outcome = rewrite(q, o, flags)
    if isinstance(outcome, Unsatisfiable):
        elapsed = time.perf_counter() - start
        empty = ResultSet(tuple(v.name for v in q.projection))
        return QueryRun(outcome, None, empty, PlanMetrics(), elapsed)
    plan = plan_query(outcome, store.descriptor, store.orientation)
    result = execute_plan(plan, store)
    elapsed = time.perf_counter() - start
    return QueryRun(outcome, plan, result, plan_metrics(plan), elapsed)


# -- reference evaluator -------------------------------------------------------

def _entailed(data: Dataset, o: Ontology) -> set[tuple[Term, Term, Term]]:
    """Fixpoint of the subproperty and subclass propagation rules."""
    prop_up: dict[str, set[str]] = {}
    for child, parent in o.subproperty_edges:
        prop_up.setdefault(child, set()).add(parent)
    if o.canonical is not None:
        for p, c in o.canonical.items():
            if p != c:
                prop_up.setdefault(p, set()).add(c)
                prop_up.setdefault(c, set()).add(p)
    class_up: dict[str, set[str]] = {}
    for child, parent in o.subclass_edges:
        class_up.setdefault(child, set()).add(parent)

    facts = {(t.subject, t.predicate, t.object) for t in data}
    frontier = set(facts)
    while frontier:
        fresh = set()
        for s, p, obj in frontier:
            if p.lexical == RDF_TYPE:
                if obj.is_iri:
                    for d in class_up.get(obj.lexical, ()):
                        fresh.add((s, p, Term(TermKind.IRI, d)))
            else:
                for q in prop_up.get(p.lexical, ()):
                    fresh.add((s, Term(TermKind.IRI, q), obj))
        frontier = fresh - facts
        facts |= frontier
    return facts


def evaluate_oracle(q: SelectQuery, data: Dataset, o: Ontology) -> ResultSet:
    """Answer ``q`` by naive matching over the entailment closure of ``data``."""
    facts = _entailed(data, o)
    by_predicate: dict[Term, list[tuple[Term, Term]]] = {}
    for s, p, obj in facts:
        by_predicate.setdefault(p, []).append((s, obj))

    bindings: list[dict[Variable, Term]] = [{}]
    for tp in q.patterns:
        nxt = []
        for b in bindings:
            for s, obj in by_predicate.get(tp.predicate, ()):
                new = dict(b)
                ok = True
                for pattern_term, value in ((tp.subject, s), (tp.object, obj)):
                    if isinstance(pattern_term, Variable):
                        if new.setdefault(pattern_term, value) != value:
                            ok = False
                    elif pattern_term != value:
                        ok = False
                if ok:
                    nxt.append(new)
        bindings = nxt
    rows = frozenset(tuple(b[v] for v in q.projection) for b in bindings)
    return ResultSet(tuple(v.name for v in q.projection), rows)
