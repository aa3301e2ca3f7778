"""Embedded benchmark corpus.

Parameterized programs are stored as ``string.Template`` sources; each
benchmark id fixes the parameters.
"""

from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources
from string import Template

_EAT_CALLS = {
    "eager": "eat (left_fork, right_fork)",
    "lazy": "bad_eat",
    "eager_nocmd": "eat_no_statements (left_fork, right_fork)",
    "lazy_nocmd": "bad_eat_no_statements",
}

# fixed parameters of the non-indexed parameterized benchmarks
BARBERSHOP = {"customers": 2, "chairs": 1}
DINING_SAVAGES = {"savages": 2, "meals": 1, "portions": 1, "refills": 2}
PC_CAPACITY = 2
DP_ROUNDS = 1


def _resource(name: str) -> str:
    return resources.files(__name__).joinpath(name).read_text(encoding="utf-8")


def philosophers(variant: str, n: int, rounds: int = DP_ROUNDS) -> str:
    call = _EAT_CALLS[variant]
    return Template(_resource("philosophers.scoop")).substitute(n=n, rounds=rounds, eat_call=call, eat_feature=call.split()[0])


def producer_consumer(k: int, capacity: int = PC_CAPACITY) -> str:
    return Template(_resource("producer_consumer.scoop")).substitute(k=k, capacity=capacity)


def _plain(name: str) -> str:
    return _resource(f"{name}.scoop")


BENCHMARK_IDS = (
    "colours",
    "stack",
    "dp_eager_2",
    "dp_eager_3",
    "dp_lazy_2",
    "dp_lazy_3",
    "dp_eager_nocmd_2",
    "dp_eager_nocmd_3",
    "dp_lazy_nocmd_2",
    "dp_lazy_nocmd_3",
    "producer_consumer_5",
    "producer_consumer_20",
    "barbershop",
    "dining_savages",
    "bank_transfer",
    "local_only",
)

_DP = re.compile(r"dp_(eager|lazy|eager_nocmd|lazy_nocmd)_(\d+)(?:_r(\d+))?$")
_PC = re.compile(r"producer_consumer_(\d+)(?:_c(\d+))?$")


@lru_cache(maxsize=None)
def benchmark_source(bench_id: str) -> str:
    """Source text of a benchmark.  Besides the listed ids, ``dp_<variant>_<N>``
    accepts any N >= 2 and an optional ``_r<rounds>`` suffix, and
    ``producer_consumer_<K>`` an optional ``_c<capacity>`` suffix."""
    m = _DP.match(bench_id)
    if m:
        n = int(m.group(2))
        if n < 2:
            raise KeyError(bench_id)
        return philosophers(m.group(1), n, int(m.group(3) or DP_ROUNDS))
    m = _PC.match(bench_id)
    if m:
        return producer_consumer(int(m.group(1)), int(m.group(2) or PC_CAPACITY))
    if bench_id == "barbershop":
        return Template(_plain("barbershop")).substitute(BARBERSHOP)
    if bench_id == "dining_savages":
        return Template(_plain("dining_savages")).substitute(DINING_SAVAGES)
    if bench_id in ("colours", "stack", "bank_transfer", "local_only"):
        return _plain(bench_id)
    raise KeyError(bench_id)


def list_benchmarks() -> list[str]:
    return list(BENCHMARK_IDS)
