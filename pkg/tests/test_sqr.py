import random

import pytest

from rostore import datagen
from rostore.ontology import Ontology, canonicalize_property_cycles, extract_ontology
from rostore.query import parse_query
from rostore.rdf import parse_ntriples
from rostore.sqr import (
    Rewritten,
    RewriteFlags,
    Rule,
    Unsatisfiable,
    canonicalize_query,
    identity_expansion,
    property_check,
    rewrite,
    subsume_expand,
)
from randcases import random_query, random_schema
from samples import FIG2_SCHEMA, MED, MED_PREFIX, RANGE, SUBC, SUBP

UB = datagen.UB
PFX = f"PREFIX ub: <{UB}>\n"
EX3 = MED_PREFIX + "SELECT ?s ?o WHERE {?s :diseaseContraIndication ?o. ?o rdf:type :Molecule.}"
EX4 = MED_PREFIX + "SELECT ?s ?o WHERE {?s :diseaseContraIndication ?o. ?o rdf:type :Disease.}"
Q16 = PFX + "SELECT ?x ?y WHERE { ?x ub:teacherOf ?y . ?x a ub:AdministrativeStaff . }"
Q17 = PFX + "SELECT ?x ?y WHERE { ?x ub:teacherOf ?y . ?x a ub:Faculty . }"


def test_subsume_property(fig2_ontology):
    e = subsume_expand(parse_query("SELECT ?o WHERE { ?s :pa ?o }"), fig2_ontology)
    assert e.property_expansion == {0: ("pa", "pb", "pc", "pd", "pe")}


def test_subsume_class(ex2_ontology):
    e = subsume_expand(parse_query("SELECT ?s WHERE { ?s a :ClassA }"), ex2_ontology)
    assert e.class_expansion == {0: ("ClassA", "ClassB", "ClassC")}
    assert e.property_expansion == {}


def test_subsume_leaf_is_reflexive(fig2_ontology):
    e = subsume_expand(parse_query("SELECT ?s WHERE { ?s :pf ?o }"), fig2_ontology)
    assert e.property_expansion == {0: ("pf",)}


def test_variable_class_not_expanded(ex2_ontology):
    e = subsume_expand(parse_query("SELECT ?s WHERE { ?s a ?c }"), ex2_ontology)
    assert e.class_expansion == {} and e.property_expansion == {}


def test_query_predicate_canonicalized():
    o, _ = canonicalize_property_cycles(extract_ontology(parse_ntriples(
        f"<q> <{SUBP}> <p> .\n<p> <{SUBP}> <q> .\n<r> <{SUBP}> <q> .\n")))
    e = subsume_expand(parse_query("SELECT ?s WHERE { ?s :q ?o }"), o)
    assert e.base.patterns[0].predicate.lexical == "p"
    assert e.property_expansion == {0: ("p", "r")}


def test_example3_unsat(med_ontology):
    out = rewrite(parse_query(EX3), med_ontology)
    assert isinstance(out, Unsatisfiable)
    assert (out.constraint, out.declared, out.queried) == ("range", MED + "Disease", MED + "Molecule")
    assert out.pattern_index == 0 and out.property == MED + "diseaseContraIndication"
    assert out.explain() == (f"UNSAT: pattern #0: {MED}diseaseContraIndication range is {MED}Disease, "
                             f"disjoint with queried {MED}Molecule")


def test_example4_elimination(med_ontology):
    out = rewrite(parse_query(EX4), med_ontology, RewriteFlags(conformant=True))
    assert isinstance(out, Rewritten)
    assert out.query.base == parse_query(MED_PREFIX + "SELECT ?s ?o WHERE {?s :diseaseContraIndication ?o.}")
    assert out.applied == (Rule.ELIMINATE_TYPE_JOIN,)
    kept = rewrite(parse_query(EX4), med_ontology, RewriteFlags(conformant=False))
    assert len(kept.query.base.patterns) == 2 and Rule.ELIMINATE_TYPE_JOIN not in kept.applied


def test_elimination_for_superclass_of_range(med_ontology):
    q = parse_query(MED_PREFIX + "SELECT ?s ?o WHERE {?s :diseaseContraIndication ?o. ?o a :Top.}")
    out = property_check(q, med_ontology, conformant=True)
    assert len(out.query.base.patterns) == 1


def test_no_elimination_for_subclass_of_range():
    o = extract_ontology(parse_ntriples(f"<p> <{RANGE}> <A> .\n<B> <{SUBC}> <A> .\n"))
    q = parse_query("SELECT ?s WHERE { ?s :p ?o . ?o a :B . }")
    out = property_check(q, o, conformant=True)
    assert len(out.query.base.patterns) == 2


def test_multi_range_skipped():
    o = extract_ontology(parse_ntriples(
        f"<p> <{RANGE}> <A> .\n<p> <{RANGE}> <B> .\n"
        "<A> <http://www.w3.org/2002/07/owl#disjointWith> <C> .\n"))
    for cls in ("A", "C"):
        q = parse_query(f"SELECT ?s WHERE {{ ?s :p ?o . ?o a :{cls} . }}")
        out = property_check(q, o, conformant=True)
        assert isinstance(out, Rewritten) and out.applied == ()
        assert out.query.base == q


def test_q16_q17_q18(univ_ontology):
    q16 = rewrite(parse_query(Q16), univ_ontology)
    assert isinstance(q16, Unsatisfiable)
    assert (q16.constraint, q16.declared, q16.queried) == ("domain", UB + "Faculty", UB + "AdministrativeStaff")
    q17 = rewrite(parse_query(Q17), univ_ontology, RewriteFlags(conformant=False))
    assert len(q17.query.base.patterns) == 2
    q18 = rewrite(parse_query(Q17), univ_ontology, RewriteFlags(conformant=True))
    assert len(q18.query.base.patterns) == 1
    assert Rule.ELIMINATE_TYPE_JOIN in q18.applied


def test_trace_order(ex2_ontology):
    q = parse_query("SELECT ?s ?o WHERE { ?s :pa ?o . ?s a :ClassA . ?o :pf ?z . }")
    out = rewrite(q, ex2_ontology)
    assert out.applied == (Rule.SUBSUME_PROPERTY, Rule.SUBSUME_CLASS)


def test_flags_disable_everything(med_ontology):
    q = parse_query(EX3)
    out = rewrite(q, med_ontology, RewriteFlags(subsume=False, property_check=False))
    assert isinstance(out, Rewritten) and out.applied == ()
    assert out.query == identity_expansion(q)


def test_no_property_subsume_keeps_classes(ex2_ontology):
    q = parse_query("SELECT ?s WHERE { ?s :pa ?o . ?s a :ClassA . }")
    out = rewrite(q, ex2_ontology, RewriteFlags(subsume_properties=False))
    assert out.query.property_expansion == {0: ("pa",)}
    assert out.query.class_expansion == {1: ("ClassA", "ClassB", "ClassC")}


def test_flag_labels():
    assert RewriteFlags().label() == "default"
    assert RewriteFlags(subsume=False, conformant=True).label() == "no-subsume+assume-conformant"


@pytest.mark.parametrize("seed", range(60))
def test_property_check_without_typed_pairs_is_identity(seed):
    rng = random.Random(seed)
    schema, classes, props = random_schema(rng)
    o = extract_ontology(schema)
    q = random_query(rng, classes, props, ["http://r.test/i0"])
    out = property_check(q, o, conformant=True)
    typed = {tp.subject for tp in q.patterns if tp.is_type}
    used = {t for tp in q.patterns if not tp.is_type for t in (tp.subject, tp.object)}
    if not typed & used:
        assert isinstance(out, Rewritten) and out.applied == ()
        assert out.query.base.patterns == canonicalize_query(q, canonicalize_property_cycles(o)[0]).patterns


@pytest.mark.parametrize("seed", range(60))
def test_expansion_monotone(seed):
    rng = random.Random(seed)
    schema, classes, props = random_schema(rng)
    small = extract_ontology(schema)
    extra = Ontology(subclass_edges=set(small.subclass_edges), subproperty_edges=set(small.subproperty_edges))
    if len(classes) > 1:
        extra.subclass_edges.add(tuple(rng.sample(classes, 2)))
    if len(props) > 1:
        extra.subproperty_edges.add(tuple(rng.sample(props, 2)))
    q = random_query(rng, classes, props, ["http://r.test/i0"])
    a = subsume_expand(q, small)
    b = subsume_expand(q, extra)
    for i, props_a in a.property_expansion.items():
        # the added edge may merge a cycle; compare after resolving
        canon = canonicalize_property_cycles(extra)[1]
        assert {canon.resolve(p) for p in props_a} <= set(b.property_expansion[i])
    for i, classes_a in a.class_expansion.items():
        assert set(classes_a) <= set(b.class_expansion[i])


def test_fig2_unaffected_by_property_check(fig2_ontology):
    o = extract_ontology(parse_ntriples(FIG2_SCHEMA))
    q = parse_query("SELECT ?o WHERE { ?s :pa ?o . ?o a :Thing . }")
    out = rewrite(q, o)
    assert isinstance(out, Rewritten)
