from __future__ import annotations

from functools import lru_cache

import pytest

from scoopw.benchmarks import benchmark_source
from scoopw.engine import Engine
from scoopw.explorer import ExploreLimits, StateSpace, explore
from scoopw.frontend import compile_source
from scoopw.models import get_model
from scoopw.properties import resolve_rules


@lru_cache(maxsize=None)
def bench_cfgs(bench_id: str):
    return compile_source(benchmark_source(bench_id))


def engine_for(source_or_bench: str, model: str, **options) -> Engine:
    if "class" in source_or_bench:
        cfgs = compile_source(source_or_bench)
    else:
        cfgs = bench_cfgs(source_or_bench)
    return Engine(cfgs, get_model(model, **options))


@lru_cache(maxsize=None)
def bench_space(bench_id: str, model: str, rules: str = "") -> StateSpace:
    """Full exploration of a benchmark, shared across test modules."""
    return explore(Engine(bench_cfgs(bench_id), get_model(model)), ExploreLimits(), resolve_rules(rules or None))


@pytest.fixture
def space():
    return bench_space


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
