#!/usr/bin/env python3
"""Check the request-order guarantee over all traces, with and without the
injected reordering fault.

Usage: python scripts/order_guarantee.py [--depth N] [bench ...]
"""

from __future__ import annotations

import argparse
import sys
import time

from scoopw.benchmarks import benchmark_source
from scoopw.engine import Engine
from scoopw.frontend import compile_source
from scoopw.models import get_model
from scoopw.properties import trace_check

DEFAULT = ("colours", "stack", "dp_eager_2", "producer_consumer_5")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("benchmarks", nargs="*", default=list(DEFAULT))
    ap.add_argument("--depth", type=int, default=500)
    args = ap.parse_args(argv)

    clean = True
    for bench in args.benchmarks:
        cfgs = compile_source(benchmark_source(bench))
        for model in ("rq", "qoq", "dscoop"):
            for fault in (False, True):
                t = time.monotonic()
                res = trace_check(Engine(cfgs, get_model(model, fault_reorder=fault)), args.depth)
                tag = "fault " if fault else "normal"
                state = "ok" if res.ok else f"{len(res.violations)} violation(s)"
                bound = " truncated" if res.truncated else ""
                print(f"{bench:20} {model:6} {tag} {state:16} product_states={res.product_states}{bound}"
                      f" {time.monotonic() - t:.1f}s", flush=True)
                if not fault:
                    clean &= res.ok
    return 0 if clean else 2


if __name__ == "__main__":
    sys.exit(main())
