#!/usr/bin/env python3
"""Explore the bank transfer benchmark under D-SCOOP with each prelock order.

Usage: python scripts/prelock_orders.py
"""

from __future__ import annotations

import sys

from scoopw.benchmarks import benchmark_source
from scoopw.engine import Engine
from scoopw.explorer import ExploreLimits, explore, verdict_str
from scoopw.frontend import compile_source
from scoopw.models import get_model
from scoopw.models.dscoop import PRELOCK_ORDERS
from scoopw.properties import parse_rule_list


def main() -> int:
    cfgs = compile_source(benchmark_source("bank_transfer"))
    for order in PRELOCK_ORDERS:
        space = explore(Engine(cfgs, get_model("dscoop", prelock_order=order)), ExploreLimits(),
                        parse_rule_list("deadlock,stuck"))
        line = f"{order:10} states={space.stats['configurations']:6} deadlock={verdict_str(space.verdict('deadlock'))}" \
               f" stuck={verdict_str(space.verdict('stuck'))}"
        errs = space.errors_of("deadlock")
        if errs:
            line += f" witness={list(errs[0][1].witness)}"
        print(line, flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
