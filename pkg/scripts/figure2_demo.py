#!/usr/bin/env python3
"""Load the five-triple property hierarchy example under each layout, then
show the stored relations and the SQL and plan for ``?s :pa ?o``."""

from __future__ import annotations

from rostore.engine import explain, run_query
from rostore.ontology import canonicalize_property_cycles, extract_ontology
from rostore.query import parse_query
from rostore.rdf import SUBPROPERTY_OF, parse_ntriples
from rostore.sqr import RewriteFlags
from rostore.storage import LayoutKind, Orientation, build_layout, load_store

SCHEMA = "".join(f"<{c}> <{SUBPROPERTY_OF}> <{p}> .\n"
                 for c, p in [("pb", "pa"), ("pc", "pa"), ("pd", "pc"), ("pe", "pc")])
DATA = "<a> <pa> <b> .\n<c> <pc> <d> .\n<e> <pb> <f> .\n<g> <pe> <h> .\n<a> <pf> <d> .\n"
QUERY = "SELECT ?o WHERE { ?s :pa ?o . }"


def main() -> None:
    o, _ = canonicalize_property_cycles(extract_ontology(parse_ntriples(SCHEMA)))
    data = parse_ntriples(DATA)
    q = parse_query(QUERY)
    for kind in LayoutKind:
        store = load_store(data, build_layout(o, data.predicates(), kind), Orientation.ROW)
        print(f"== {kind.value}")
        decode = store.dictionary.decode
        for name, rel in sorted(store.relations.items()):
            rows = sorted(tuple(decode(int(x)).lexical for x in row) for row in rel.rows)
            print(f"  {name}({rel.arity}): {rows}")
        run = run_query(q, store, o, RewriteFlags())
        if kind is not LayoutKind.TRIPLE_TABLE:
            print("  sql:", run.outcome.query.sql(store.descriptor))
        print("  plan:", explain(run.plan).strip().replace("\n", "\n        "))
        print("  answers:", sorted(row[0].lexical for row in run.result.rows))


if __name__ == "__main__":
    main()
