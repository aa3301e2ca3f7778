#!/usr/bin/env python3
"""Regenerate the golden files under tests/goldens from exhaustive runs.

Run after an intentional change to the semantics or to the debug dump
format, then review the diff before committing.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from scoopw.benchmarks import benchmark_source
from scoopw.engine import Engine
from scoopw.explorer import ExploreLimits, explore
from scoopw.frontend import compile_source
from scoopw.models import get_model
from scoopw.state import dump

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "goldens"

# benchmarks whose full state spaces are recorded for every model
COUNTED = (
    "colours",
    "stack",
    "dp_eager_2",
    "dp_lazy_2",
    "dp_eager_nocmd_2",
    "dp_lazy_nocmd_2",
    "producer_consumer_5",
    "bank_transfer",
    "barbershop",
    "dining_savages",
    "local_only",
)
MODELS = ("rq", "qoq", "dscoop")


def _engine(bench: str, model: str) -> Engine:
    return Engine(compile_source(benchmark_source(bench)), get_model(model))


def write_dumps() -> None:
    for bench in ("colours", "stack"):
        (GOLDEN / f"{bench}_initial.txt").write_text(dump(_engine(bench, "qoq").initial()))
    eng = _engine("stack", "dscoop")
    text = "".join(f"== {label}\n{dump(c)}" for label, c in eng.successors(eng.initial()))
    (GOLDEN / "stack_dscoop_step1.txt").write_text(text)


def write_counts(benches) -> None:
    counts = {}
    for bench in benches:
        counts[bench] = {}
        for model in MODELS:
            t = time.monotonic()
            space = explore(_engine(bench, model), ExploreLimits(), [])
            st = space.stats
            counts[bench][model] = {k: st[k] for k in ("configurations", "transitions", "finals", "terminal_nonfinal")}
            print(f"{bench:22s} {model:7s} {st['configurations']:7d} {time.monotonic() - t:6.1f}s", file=sys.stderr)
    (GOLDEN / "state_counts.json").write_text(json.dumps(counts, indent=2, sort_keys=True) + "\n")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--skip-counts", action="store_true", help="only rewrite the configuration dumps")
    args = ap.parse_args()
    GOLDEN.mkdir(parents=True, exist_ok=True)
    write_dumps()
    if not args.skip_counts:
        write_counts(COUNTED)


if __name__ == "__main__":
    main()
