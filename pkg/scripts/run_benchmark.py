#!/usr/bin/env python3
"""Generate data, run the bundled query set on every store and print a summary.

    python3 scripts/run_benchmark.py --universities 1 --out results.csv
"""

from __future__ import annotations

import argparse
import csv
import sys
import tempfile
from pathlib import Path

from rostore.cli import main as rostore


def parse_args(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--universities", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--out", default="results.csv")
    return p.parse_args(argv)


def run(argv=None) -> int:
    args = parse_args(argv)
    with tempfile.TemporaryDirectory() as tmp:
        work = Path(tmp)
        gen = ["generate", "--universities", str(args.universities), "--out", str(work / "data.nt")]
        if args.seed is not None:
            gen += ["--seed", str(args.seed)]
        steps = [
            gen,
            ["export-ontology", "--out", str(work / "schema.nt")],
            ["export-queries", "--out", str(work / "queries")],
            ["bench", "--schema", str(work / "schema.nt"), "--data", str(work / "data.nt"),
             "--queries", str(work / "queries"), "--manifest", str(work / "queries" / "manifest.txt"),
             "--repeat", str(args.repeat), "--out", args.out],
        ]
        for step in steps:
            rc = rostore(step)
            if rc:
                return rc

    with open(args.out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    stores = sorted({(r["layout"], r["orientation"]) for r in rows})
    print(f"{'query':<6} {'rows':>5} " + "".join(f"{l + '/' + o:>16}" for l, o in stores))
    print("(each cell: mean ms, then scans/joins/unions)")
    for qid in dict.fromkeys(r["query_id"] for r in rows):
        cells = {(r["layout"], r["orientation"]): r for r in rows if r["query_id"] == qid}
        first = next(iter(cells.values()))
        line = f"{qid:<6} {first['rows']:>5} "
        for key in stores:
            r = cells[key]
            line += f"{float(r['mean_ms']):9.2f} {r['relations_scanned'] + '/' + r['joins'] + '/' + r['unions']:<6}"
        print(line + ("  UNSAT" if first["unsat"] == "True" else ""))
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
