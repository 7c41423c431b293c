import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rostore import datagen
from rostore.engine import (
    Join,
    PlanError,
    PlanMetrics,
    Scan,
    UnknownRelation,
    Union,
    evaluate_oracle,
    execute_plan,
    explain,
    force_hash_joins,
    plan_metrics,
    plan_query,
    run_query,
    _walk,
)
from rostore.ontology import canonicalize_property_cycles, subsumption_closure, top_properties
from rostore.query import SelectQuery, TriplePattern, Variable, parse_query
from rostore.rdf import RDF_TYPE, Dataset, IRI, Triple
from rostore.sqr import RewriteFlags, Unsatisfiable, rewrite
from rostore.storage import LayoutKind, Orientation, build_layout, load_store
from randcases import random_case
from samples import MED_PREFIX

UB = datagen.UB
EX1 = "SELECT ?o WHERE { ?s :pa ?o . }"
FIG2_PREDICATES = {"pa", "pb", "pc", "pd", "pe", "pf"}
LAYOUTS = list(LayoutKind)
ORIENTATIONS = list(Orientation)


def store_for(o, data, kind, orientation, extra=()):
    return load_store(data, build_layout(o, data.predicates() | set(extra), kind), orientation)


def lexicals(result):
    return {tuple(t.lexical for t in row) for row in result.rows}


def test_example1_metrics(fig2_ontology):
    out = rewrite(parse_query(EX1), fig2_ontology)
    vp = build_layout(fig2_ontology, FIG2_PREDICATES, LayoutKind.VERTICAL_PARTITION)
    ro = build_layout(fig2_ontology, FIG2_PREDICATES, LayoutKind.RO_STORE)
    assert plan_metrics(plan_query(out, vp, Orientation.ROW)).as_tuple() == (5, 0, 4)
    assert plan_metrics(plan_query(out, ro, Orientation.ROW)).as_tuple() == (1, 0, 0)


@pytest.mark.parametrize("kind", LAYOUTS, ids=lambda k: k.value)
@pytest.mark.parametrize("orientation", ORIENTATIONS, ids=lambda o: o.value)
def test_example1_results(fig2_ontology, fig2_data, kind, orientation):
    store = store_for(fig2_ontology, fig2_data, kind, orientation, FIG2_PREDICATES)
    run = run_query(parse_query(EX1), store, fig2_ontology, RewriteFlags())
    assert lexicals(run.result) == {("b",), ("d",), ("f",), ("h",)}


def test_example3_without_rewriting_is_empty(med_ontology, med_data):
    q = parse_query(MED_PREFIX + "SELECT ?s ?o WHERE {?s :diseaseContraIndication ?o. ?o rdf:type :Molecule.}")
    store = store_for(med_ontology, med_data, LayoutKind.RO_STORE, Orientation.ROW)
    flags = RewriteFlags(subsume=False, property_check=False)
    assert len(run_query(q, store, med_ontology, flags).result) == 0
    assert len(evaluate_oracle(q, med_data, med_ontology)) == 0


def test_empty_store(fig2_ontology):
    store = store_for(fig2_ontology, Dataset(), LayoutKind.RO_STORE, Orientation.COLUMN, FIG2_PREDICATES)
    assert len(run_query(parse_query(EX1), store, fig2_ontology, RewriteFlags()).result) == 0


def test_oracle_examples(fig2_ontology, fig2_data, ex2_ontology):
    assert lexicals(evaluate_oracle(parse_query(EX1), fig2_data, fig2_ontology)) == {("b",), ("d",), ("f",), ("h",)}
    data = Dataset([Triple.of("x", RDF_TYPE, IRI("ClassC"))])
    got = evaluate_oracle(parse_query("SELECT ?s WHERE { ?s a :ClassA . }"), data, ex2_ontology)
    assert lexicals(got) == {("x",)}


def test_metric_shapes(ex2_ontology, univ_ontology):
    ro = build_layout(ex2_ontology, FIG2_PREDICATES, LayoutKind.RO_STORE)
    q = parse_query("SELECT ?s ?o WHERE { ?s :pb ?o . ?s rdf:type :ClassA . }")
    plan = plan_query(rewrite(q, ex2_ontology), ro, Orientation.ROW)
    assert plan_metrics(plan).as_tuple() == (2, 1, 0)
    single = Scan("pf", 2, 0, Variable("s"), Variable("o"))
    plan.root.child = single
    assert plan_metrics(plan).as_tuple() == (1, 0, 0)
    q15 = parse_query(f"PREFIX ub: <{UB}>\nSELECT ?x WHERE {{ ?x ub:memberOf ?y . }}")
    vp = build_layout(univ_ontology, univ_ontology.properties(), LayoutKind.VERTICAL_PARTITION)
    assert plan_metrics(plan_query(rewrite(q15, univ_ontology), vp, Orientation.ROW)).as_tuple() == (3, 0, 2)


def test_unknown_relation(fig2_ontology):
    d = build_layout(fig2_ontology, FIG2_PREDICATES, LayoutKind.VERTICAL_PARTITION)
    with pytest.raises(UnknownRelation):
        plan_query(rewrite(parse_query("SELECT ?s WHERE { ?s :zz ?o }"), fig2_ontology), d, Orientation.ROW)


def test_unsat_cannot_be_planned(fig2_ontology):
    d = build_layout(fig2_ontology, FIG2_PREDICATES, LayoutKind.VERTICAL_PARTITION)
    with pytest.raises(PlanError):
        plan_query(Unsatisfiable(0, "p", "range", "A", "B"), d, Orientation.ROW)


def test_plan_store_mismatch(fig2_ontology, fig2_data):
    row = store_for(fig2_ontology, fig2_data, LayoutKind.RO_STORE, Orientation.ROW)
    plan = plan_query(rewrite(parse_query(EX1), fig2_ontology), row.descriptor, Orientation.COLUMN)
    with pytest.raises(PlanError):
        execute_plan(plan, row)


def test_explain_format(fig2_ontology):
    d = build_layout(fig2_ontology, FIG2_PREDICATES, LayoutKind.VERTICAL_PARTITION)
    text = explain(plan_query(rewrite(parse_query(EX1), fig2_ontology), d, Orientation.ROW))
    lines = text.splitlines()
    assert lines[0] == "Project ?o"
    assert lines[1] == "  Union (5 inputs)"
    assert lines[2].startswith("    Scan pa")
    assert lines[-1] == "scans=5 joins=0 unions=4"


def test_metrics_are_execution_free(fig2_ontology, fig2_data):
    store = store_for(fig2_ontology, fig2_data, LayoutKind.RO_STORE, Orientation.ROW)
    plan = plan_query(rewrite(parse_query(EX1), fig2_ontology), store.descriptor, store.orientation)
    plan_metrics(plan)
    explain(plan)
    assert (store.scans, store.touched_rows) == (0, 0)
    execute_plan(plan, store)
    assert store.scans == 1


def test_merge_join_chosen_on_sorted_inputs(fig2_ontology, fig2_data):
    q = parse_query("SELECT ?s WHERE { ?s :pf ?o . ?s :pb ?z . }")
    vp = build_layout(fig2_ontology, FIG2_PREDICATES, LayoutKind.VERTICAL_PARTITION)
    plan = plan_query(rewrite(q, fig2_ontology), vp, Orientation.ROW)
    assert plan.root.child.algorithm == "merge"
    q2 = parse_query("SELECT ?s WHERE { ?s :pf ?o . ?o :pb ?z . }")
    plan2 = plan_query(rewrite(q2, fig2_ontology), vp, Orientation.ROW)
    assert plan2.root.child.algorithm == "hash"


def _cases(n):
    for seed in range(n):
        c = random_case(seed)
        o, _ = canonicalize_property_cycles(c.ontology)
        yield seed, c, o


def test_merge_join_admissible_and_equivalent():
    merges = 0
    for seed, c, o in _cases(150):
        out = rewrite(c.query, o, RewriteFlags(property_check=False))
        for kind in LAYOUTS:
            for orientation in ORIENTATIONS:
                store = store_for(o, c.data, kind, orientation, c.properties)
                plan = plan_query(out, store.descriptor, orientation)
                merges += sum(isinstance(n, Join) and n.algorithm == "merge" for n in _walk(plan.root))
                # execute_plan asserts sortedness inside merge joins
                assert execute_plan(plan, store) == execute_plan(force_hash_joins(plan), store), seed
    assert merges > 0


def test_ro_dominates_vp_on_hierarchies():
    checked = 0
    for seed, c, o in _cases(150):
        preds = c.data.predicates() | set(c.properties)
        vp = build_layout(o, preds, LayoutKind.VERTICAL_PARTITION)
        ro = build_layout(o, preds, LayoutKind.RO_STORE)
        assign = {p: ro.relation_for(p)[0] for p in preds}
        for top in top_properties(o, preds):
            closure = subsumption_closure(o, "property", top, "sub")
            if len(closure) < 2 or any(assign[p] != assign[top] for p in closure):
                continue
            q = SelectQuery((Variable("s"),), (TriplePattern(Variable("s"), IRI(top), Variable("o")),))
            out = rewrite(q, o)
            m_vp = plan_metrics(plan_query(out, vp, Orientation.ROW))
            m_ro = plan_metrics(plan_query(out, ro, Orientation.ROW))
            assert m_ro.unions == 0
            assert m_ro.relations_scanned < m_vp.relations_scanned
            checked += 1
    assert checked > 20


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_layout_equivalence_property(seed):
    c = random_case(seed)
    o, _ = canonicalize_property_cycles(c.ontology)
    want = evaluate_oracle(c.query, c.data, o)
    flags = RewriteFlags(property_check=False)
    for kind in LAYOUTS:
        for orientation in ORIENTATIONS:
            store = store_for(o, c.data, kind, orientation, c.properties)
            assert run_query(c.query, store, o, flags).result == want


def test_result_text_is_canonical(fig2_ontology, fig2_data):
    store = store_for(fig2_ontology, fig2_data, LayoutKind.VERTICAL_PARTITION, Orientation.COLUMN, FIG2_PREDICATES)
    run = run_query(parse_query("SELECT ?s ?o WHERE { ?s :pa ?o . }"), store, fig2_ontology, RewriteFlags())
    assert run.result.to_text() == "?s\t?o\n<a>\t<b>\n<c>\t<d>\n<e>\t<f>\n<g>\t<h>\n"


def test_unsat_run_has_zero_metrics(med_ontology, med_data):
    q = parse_query(MED_PREFIX + "SELECT ?s ?o WHERE {?s :diseaseContraIndication ?o. ?o rdf:type :Molecule.}")
    store = store_for(med_ontology, med_data, LayoutKind.RO_STORE, Orientation.ROW)
    run = run_query(q, store, med_ontology, RewriteFlags())
    assert run.plan is None and run.metrics == PlanMetrics()
    assert store.scans == 0 and len(run.result) == 0


def test_union_node_schema(fig2_ontology):
    d = build_layout(fig2_ontology, FIG2_PREDICATES, LayoutKind.VERTICAL_PARTITION)
    plan = plan_query(rewrite(parse_query(EX1), fig2_ontology), d, Orientation.ROW)
    union = plan.root.child
    assert isinstance(union, Union)
    assert all(child.schema == union.schema for child in union.children)
