#!/usr/bin/env python3
"""Explore benchmarks under every execution model and print a comparison table.

Usage: python scripts/run_comparisons.py [--json out.json] [--time-budget S] [bench ...]

Without benchmark ids the two-philosopher programs, the litmus programs and
the other fixed-size benchmarks are run.  Philosopher programs are checked
for deadlock, stuck handlers and overlapping ``eat`` blocks; the rest for
deadlock and stuck handlers.
"""

from __future__ import annotations

import argparse
import json
import sys

from scoopw.benchmarks import benchmark_source
from scoopw.explorer import ExploreLimits, verdict_str
from scoopw.frontend import compile_source
from scoopw.properties import compare_semantics

DEFAULT = (
    "colours",
    "stack",
    "local_only",
    "bank_transfer",
    "dp_eager_2",
    "dp_lazy_2",
    "dp_eager_nocmd_2",
    "dp_lazy_nocmd_2",
    "producer_consumer_5",
    "barbershop",
    "dining_savages",
)
MODELS = ["rq", "qoq", "dscoop"]


def rules_for(bench: str) -> str:
    return "deadlock,stuck,mutex:eat" if bench.startswith("dp_") and "nocmd" not in bench else "deadlock,stuck"


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("benchmarks", nargs="*", default=list(DEFAULT))
    ap.add_argument("--time-budget", type=float, default=None, help="seconds per model")
    ap.add_argument("--json", help="also write the raw reports to this file")
    args = ap.parse_args(argv)

    rows, raw = [], {}
    for bench in args.benchmarks:
        cfgs = compile_source(benchmark_source(bench))
        rep = compare_semantics(cfgs, MODELS, rules_for(bench), ExploreLimits(time_budget=args.time_budget),
                                program=f"bench:{bench}")
        raw[bench] = rep.to_json()
        counts = " ".join(f"{m}={rep.spaces[m].stats['configurations']}" for m in MODELS)
        verdicts = "; ".join(
            f"{r}: " + " ".join(f"{m}={verdict_str(v)}" for m, v in per.items()) for r, per in rep.verdicts().items()
        )
        flag = " DISCREPANCY" if rep.discrepancies() else ""
        rows.append(f"{bench:22} {counts:40} {verdicts}{flag}")
        print(rows[-1], flush=True)

    if args.json:
        with open(args.json, "w") as f:
            json.dump(raw, f, indent=2, sort_keys=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
