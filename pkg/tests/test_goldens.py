from __future__ import annotations

import json
from pathlib import Path

import pytest

from conftest import bench_space

COUNTS = json.loads((Path(__file__).parent / "goldens" / "state_counts.json").read_text())

# the cheap part of the recorded corpus; scripts/regen_goldens.py covers the rest
FAST = ("colours", "stack", "dp_eager_2", "dp_lazy_2", "producer_consumer_5", "bank_transfer", "local_only")


@pytest.mark.parametrize("model", ["rq", "qoq", "dscoop"])
@pytest.mark.parametrize("bench", FAST)
def test_state_counts_match_goldens(bench, model):
    st = bench_space(bench, model).stats
    assert {k: st[k] for k in COUNTS[bench][model]} == COUNTS[bench][model]


@pytest.mark.parametrize("bench", sorted(COUNTS))
def test_goldens_keep_the_directional_pattern(bench):
    c = {m: COUNTS[bench][m]["configurations"] for m in ("rq", "qoq", "dscoop")}
    assert c["dscoop"] >= c["qoq"] >= c["rq"]
