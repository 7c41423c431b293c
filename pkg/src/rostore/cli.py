"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data or query error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import datagen
from .bench import (
    ManifestError,
    ResultMismatch,
    build_stores,
    flags_from_names,
    load_query_set,
    run_bench,
    write_report,
)
from .engine import PlanError, explain, run_query
from .ontology import canonicalize_property_cycles, check_conformance, extract_ontology, is_datatype, top_properties
from .query import QueryError, parse_query
from .rdf import MalformedLine, Dataset, parse_ntriples, serialize_ntriples
from .sqr import Unsatisfiable
from .storage import LayoutKind, Orientation, StorageError, build_layout, load_store, open_store, save_store

log = logging.getLogger("rostore")

SCHEMA_FILE = "schema.nt"


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _read_ntriples(path: str) -> Dataset:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from exc
    try:
        return parse_ntriples(text)
    except MalformedLine as exc:
        raise DataError(f"{path}: {exc}") from exc


def _write_text(path: str, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from exc


def cmd_generate(args) -> int:
    if args.universities < 1:
        raise UsageError("--universities must be >= 1")
    data = datagen.generate(datagen.GenConfig(args.universities, args.seed))
    _write_text(args.out, serialize_ntriples(data))
    log.info("wrote %d triples to %s", len(data), args.out)
    return 0


def cmd_load(args) -> int:
    data = _read_ntriples(args.data)
    schema = _read_ntriples(args.schema)
    o, _ = canonicalize_property_cycles(extract_ontology(schema))
    kind = LayoutKind(args.layout)
    descriptor = build_layout(o, data.predicates(), kind)
    store = load_store(data, descriptor, Orientation(args.orientation))
    try:
        save_store(store, args.out)
        (Path(args.out) / SCHEMA_FILE).write_text(serialize_ntriples(schema), encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{args.out}: {exc.strerror or exc}") from exc
    log.info("loaded %d triples into %d relations at %s", len(data), len(store.relations), args.out)
    return 0


def _open(path: str):
    try:
        store = open_store(path)
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from exc
    schema = _read_ntriples(str(Path(path) / SCHEMA_FILE))
    o, _ = canonicalize_property_cycles(extract_ontology(schema))
    return store, o


def cmd_query(args) -> int:
    store, o = _open(args.store)
    try:
        q = parse_query(Path(args.query).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"{args.query}: {exc.strerror or exc}") from exc
    except QueryError as exc:
        raise DataError(f"{args.query}: {exc}") from exc
    names = [n for n, on in (("no-subsume", args.no_subsume), ("no-property-subsume", args.no_property_subsume),
                             ("no-property-check", args.no_property_check),
                             ("assume-conformant", args.assume_conformant)) if on]
    run = run_query(q, store, o, flags_from_names(names))
    if isinstance(run.outcome, Unsatisfiable):
        print(run.outcome.explain())
        if args.explain:
            print(run.metrics)
        return 0
    if args.explain:
        print(explain(run.plan), end="")
    if args.emit_sql:
        print(run.outcome.query.sql(store.descriptor))
    print(run.result.to_text(), end="")
    return 0


def cmd_validate(args) -> int:
    data = _read_ntriples(args.data)
    o = extract_ontology(_read_ntriples(args.schema))
    report = check_conformance(data, o)
    for v in report.violations:
        print(f"{v.kind}\t{v.expected}\t{v.triple.n3()}")
    print(f"{len(report.violations)} violation(s) in {len(data)} triples")
    return 0 if report.conforms else 2


def cmd_bench(args) -> int:
    if args.repeat < 1:
        raise UsageError("--repeat must be >= 1")
    schema = _read_ntriples(args.schema)
    data = _read_ntriples(args.data)
    try:
        query_set = load_query_set(args.queries, args.manifest)
    except OSError as exc:
        raise DataError(f"{exc.filename}: {exc.strerror or exc}") from exc
    o, stores = build_stores(schema, data)
    rows = run_bench(o, stores, query_set, repeat=args.repeat, parallel=args.parallel)
    try:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_report(rows, args.format, fh, parallel=args.parallel)
    except OSError as exc:
        raise DataError(f"{args.out}: {exc.strerror or exc}") from exc
    if args.parallel:
        log.warning("cells ran concurrently; timings are not comparable")
    log.info("wrote %d report rows to %s", len(rows), args.out)
    return 0


def cmd_stats(args) -> int:
    store, o = _open(args.store)
    d = store.descriptor
    print(f"layout\t{d.kind.value}")
    print(f"orientation\t{store.orientation.value}")
    print(f"terms\t{len(store.dictionary)}")
    total = 0
    for name in sorted(store.relations):
        rel = store.relations[name]
        total += len(rel)
        print(f"relation\t{name}\tarity={rel.arity}\trows={len(rel)}\tpredicates={len(d.members[name])}")
    print(f"tuples\t{total}")
    props = o.properties()
    datatype_props = {p for p in props if any(is_datatype(r) for r in o.range_of.get(p, ()))}
    classes = {c for c in o.classes() if not is_datatype(c)}
    print(f"ontology\tclasses={len(classes)}\tobject_properties={len(props - datatype_props)}"
          f"\tdatatype_properties={len(datatype_props)}\ttop_properties={len(top_properties(o))}")
    return 0


def cmd_export_ontology(args) -> int:
    _write_text(args.out, datagen.bundled_ontology_text())
    return 0


def cmd_export_queries(args) -> int:
    from importlib import resources

    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        for entry in resources.files("rostore").joinpath("data/queries").iterdir():
            if entry.name.endswith((".rq", ".txt")):
                (out / entry.name).write_text(entry.read_text(encoding="utf-8"), encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{out}: {exc.strerror or exc}") from exc
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rostore", description="RDF storage layouts and semantic query rewriting")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="generate LUBM-like data")
    p.add_argument("--universities", type=int, required=True)
    p.add_argument("--seed", type=int, default=datagen.DEFAULT_SEED)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("load", help="build a store directory")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--layout", choices=[k.value for k in LayoutKind], required=True)
    p.add_argument("--orientation", choices=[o.value for o in Orientation], required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_load)

    p = sub.add_parser("query", help="run one query against a store")
    p.add_argument("--store", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--no-subsume", action="store_true")
    p.add_argument("--no-property-subsume", action="store_true")
    p.add_argument("--no-property-check", action="store_true")
    p.add_argument("--assume-conformant", action="store_true")
    p.add_argument("--explain", action="store_true")
    p.add_argument("--emit-sql", action="store_true")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("validate", help="check data against domain/range and disjointness")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bench", help="run the query x layout x orientation matrix")
    p.add_argument("--schema", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--parallel", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("stats", help="describe a store")
    p.add_argument("--store", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("export-ontology", help="write the bundled ontology")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_ontology)

    p = sub.add_parser("export-queries", help="write the bundled query set and manifest")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_queries)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"rostore: error: {exc}", file=sys.stderr)
        return 1
    except (DataError, StorageError, ManifestError, ResultMismatch, PlanError, QueryError) as exc:
        print(f"rostore: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
