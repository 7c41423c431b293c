"""Benchmark matrix: every query of a query set on every layout and orientation."""

from __future__ import annotations

import csv
import io
import json
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, TextIO

from .engine import ResultSet, run_query
from .ontology import Ontology, canonicalize_property_cycles, extract_ontology
from .query import SelectQuery, parse_query
from .rdf import Dataset
from .sqr import RewriteFlags, Unsatisfiable
from .storage import LayoutKind, Orientation, StoreInstance, build_layout, load_store

FLAG_NAMES = ("no-subsume", "no-property-subsume", "no-property-check", "assume-conformant")


class ManifestError(ValueError):
    pass


class ResultMismatch(RuntimeError):
    pass


@dataclass(frozen=True)
class ManifestEntry:
    query_id: str
    file: str
    flags: RewriteFlags


def flags_from_names(names: Iterable[str]) -> RewriteFlags:
    names = set(names)
    return RewriteFlags(
        conformant="assume-conformant" in names,
        subsume="no-subsume" not in names,
        property_check="no-property-check" not in names,
        subsume_properties="no-property-subsume" not in names,
    )


def parse_manifest(text: str, source: str = "<manifest>") -> list[ManifestEntry]:
    entries = []
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 2:
            raise ManifestError(f"{source}:{n}: expected '<id> <file> [flags...]'")
        unknown = [f for f in parts[2:] if f not in FLAG_NAMES]
        if unknown:
            raise ManifestError(f"{source}:{n}: unknown flag(s) {', '.join(unknown)}")
        entries.append(ManifestEntry(parts[0], parts[1], flags_from_names(parts[2:])))
    return entries


def load_query_set(queries_dir: str | Path, manifest_path: str | Path) -> list[tuple[ManifestEntry, SelectQuery]]:
    manifest_path = Path(manifest_path)
    entries = parse_manifest(manifest_path.read_text(encoding="utf-8"), str(manifest_path))
    out = []
    for entry in entries:
        path = Path(queries_dir) / entry.file
        try:
            out.append((entry, parse_query(path.read_text(encoding="utf-8"))))
        except ValueError as exc:
            raise ManifestError(f"{path}: {exc}") from exc
    return out


@dataclass
class BenchReportRow:
    query_id: str
    layout: str
    orientation: str
    rewrite_flags: str
    runs: int
    mean_ms: float
    rows: int
    relations_scanned: int
    joins: int
    unions: int
    unsat: bool


REPORT_FIELDS = [f.name for f in fields(BenchReportRow)]


def build_stores(
    schema: Dataset,
    data: Dataset,
    layouts: Iterable[LayoutKind] = tuple(LayoutKind),
    orientations: Iterable[Orientation] = tuple(Orientation),
) -> tuple[Ontology, dict[tuple[LayoutKind, Orientation], StoreInstance]]:
    o, _ = canonicalize_property_cycles(extract_ontology(schema))
    predicates = data.predicates()
    stores = {}
    for kind in layouts:
        descriptor = build_layout(o, predicates, kind)
        for orientation in orientations:
            stores[(kind, orientation)] = load_store(data, descriptor, orientation)
    return o, stores


def _cell(query_id, q, flags, o, store, repeat) -> tuple[BenchReportRow, ResultSet]:
    run_query(q, store, o, flags)  # warm-up
    times = []
    run = None
    for _ in range(repeat):
        run = run_query(q, store, o, flags)
        times.append(run.seconds * 1000.0)
    unsat = isinstance(run.outcome, Unsatisfiable)
    row = BenchReportRow(
        query_id=query_id,
        layout=store.descriptor.kind.value,
        orientation=store.orientation.value,
        rewrite_flags=flags.label(),
        runs=repeat,
        mean_ms=round(statistics.fmean(times), 4),
        rows=len(run.result),
        relations_scanned=run.metrics.relations_scanned,
        joins=run.metrics.joins,
        unions=run.metrics.unions,
        unsat=unsat,
    )
    return row, run.result


def run_bench(
    o: Ontology,
    stores: dict[tuple[LayoutKind, Orientation], StoreInstance],
    query_set: list[tuple[ManifestEntry, SelectQuery]],
    repeat: int = 5,
    parallel: bool = False,
) -> list[BenchReportRow]:
    """Run the full matrix and cross-check answers between cells.

    Raises ResultMismatch when two cells of the same query disagree.
    """
    if repeat < 1:
        raise ValueError("repeat must be >= 1")
    cells = [(entry, q, store) for entry, q in query_set for store in stores.values()]

    def work(cell):
        entry, q, store = cell
        return _cell(entry.query_id, q, entry.flags, o, store, repeat)

    if parallel:
        with ThreadPoolExecutor() as pool:
            results = list(pool.map(work, cells))
    else:
        results = [work(c) for c in cells]

    reference: dict[str, tuple[BenchReportRow, ResultSet]] = {}
    for row, result in results:
        ref = reference.setdefault(row.query_id, (row, result))
        if ref[1] != result:
            raise ResultMismatch(
                f"{row.query_id}: {row.layout}/{row.orientation} returned {row.rows} rows, "
                f"{ref[0].layout}/{ref[0].orientation} returned {ref[0].rows}"
            )
    return [row for row, _ in results]


def write_report(rows: list[BenchReportRow], fmt: str, out: TextIO, parallel: bool = False) -> None:
    if fmt == "csv":
        writer = csv.DictWriter(out, fieldnames=REPORT_FIELDS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(asdict(row))
        if parallel:
            out.write("# cells ran concurrently; mean_ms values are not comparable\n")
    elif fmt == "json":
        json.dump([asdict(r) for r in rows], out, indent=2)
        out.write("\n")
    else:
        raise ValueError(f"unknown report format {fmt!r}")


def report_text(rows: list[BenchReportRow], fmt: str) -> str:
    buf = io.StringIO()
    write_report(rows, fmt, buf)
    return buf.getvalue()
