from __future__ import annotations

import json

import pytest

from conftest import bench_cfgs, bench_space, engine_for
from scoopw.engine import Engine
from scoopw.explorer import ExploreLimits, dumps, explore, report_json, stats_diff, terminal_scc_report, to_dot
from scoopw.models import get_model
from scoopw.properties import DeadlockRule, StuckRule
from scoopw.state import canonical_key, normalize

CONSUMER_ONLY = """
class BUFFER
  count: INTEGER
  make do end
  is_empty: BOOLEAN do Result := count = 0 end
  remove do count := count - 1 end
end
class CONSUMER
  make do end
  take (b: separate BUFFER)
    require
      not b.is_empty
    do
      b.remove
    end
end
class APPLICATION
  buffer: separate BUFFER
  consumer: separate CONSUMER
  make
    do
      create buffer.make
      create consumer.make
      launch (consumer)
    end
  launch (c: separate CONSUMER) do c.take (buffer) end
end
"""

STRAIGHT = "class APPLICATION make local x: INTEGER do x := 1  x := x + 1 end end"


def _brute_force(eng: Engine):
    """Independent reachability: plain BFS over successors keyed by value."""
    init = eng.initial()
    seen = {canonical_key(init): init}
    edges = set()
    work = [init]
    while work:
        cfg = work.pop()
        k = canonical_key(cfg)
        for _, nxt in eng.successors(cfg):
            nk = canonical_key(nxt)
            edges.add((k, nk))
            if nk not in seen:
                seen[nk] = nxt
                work.append(nxt)
    return seen, edges


def test_lazy_rq_deadlock_witness_is_a_two_cycle():
    space = bench_space("dp_lazy_2", "rq", "deadlock")
    (_, marker), *_ = space.errors_of("deadlock")
    assert marker.kind == "Deadlock" and len(marker.witness) == 2
    (a, ra, b), (b2, rb, a2) = marker.witness
    assert (a, b) == (a2, b2) and ra.startswith("lock(") and rb.startswith("lock(")


def test_lazy_qoq_has_no_errors_and_idle_finals():
    space = bench_space("dp_lazy_2", "qoq", "deadlock")
    assert space.errors == {} and space.verdict("deadlock") is False
    assert all(not h.stack for s in space.finals for h in space.configs[s].handlers)


def test_max_states_one_truncates():
    space = explore(engine_for("colours", "qoq"), ExploreLimits(max_states=1), [DeadlockRule()])
    assert space.truncated and space.truncation_reason == "max_states"
    assert len(space.keys) == 1 and space.verdict("deadlock") is None
    with pytest.raises(ValueError):
        terminal_scc_report(space)


def test_depth_and_time_limits_truncate():
    assert explore(engine_for("colours", "qoq"), ExploreLimits(max_depth=3), []).truncated
    assert explore(engine_for("colours", "qoq"), ExploreLimits(time_budget=0.0), []).truncated


def test_consumer_without_producer_is_a_terminal_scc():
    eng = engine_for(CONSUMER_ONLY, "qoq")
    space = explore(eng, ExploreLimits(), [])
    assert len(space.keys) < 100  # small enough for the quadratic check below
    (scc,) = terminal_scc_report(space)
    assert "wait_retry" in scc.rules
    # brute force: the component is exactly the set of states that can reach
    # each other and cannot leave
    seen, edges = _brute_force(eng)
    assert set(seen) == set(space.keys)
    succ = {k: {d for s, d in edges if s == k} for k in seen}

    def reach(k):
        out, work = {k}, [k]
        while work:
            for n in succ[work.pop()]:
                if n not in out:
                    out.add(n)
                    work.append(n)
        return out

    closed = {k for k in seen if succ[k] and all(k in reach(n) for n in reach(k))}
    assert {space.keys[i] for i in scc.states} == closed


def test_no_terminal_scc_for_deadlock_free_eager_or_straight_line():
    assert terminal_scc_report(bench_space("dp_eager_2", "rq")) == []
    assert terminal_scc_report(explore(engine_for(STRAIGHT, "rq"), ExploreLimits(), [])) == []


def test_stats_diff():
    d = stats_diff(bench_space("dp_lazy_2", "rq", "deadlock"), bench_space("dp_lazy_2", "qoq", "deadlock"))
    assert d.verdicts["deadlock"] == (True, False) and d.discrepancies == ["deadlock"]
    same = stats_diff(bench_space("colours", "qoq"), bench_space("colours", "qoq"))
    assert all(v == 0 for v in same.deltas.values())
    assert stats_diff(bench_space("dp_eager_2", "qoq"), bench_space("dp_eager_2", "dscoop")).deltas["configurations"] > 0


@pytest.mark.parametrize("bench,model", [("producer_consumer_5", "qoq"), ("colours", "dscoop"), ("dp_lazy_2", "rq")])
def test_bfs_and_dfs_agree(bench, model):
    eng = engine_for(bench, model)
    rules = [DeadlockRule(), StuckRule()]
    bfs = explore(eng, ExploreLimits(), rules)
    dfs = explore(eng, ExploreLimits(), rules, order="dfs")
    assert bfs.sorted_keys() == dfs.sorted_keys()
    assert bfs.final_keys() == dfs.final_keys()
    assert bfs.error_keys() == dfs.error_keys()
    assert {r: bfs.verdict(r) for r in bfs.rules} == {r: dfs.verdict(r) for r in dfs.rules}


def test_parallel_matches_serial():
    eng = engine_for("producer_consumer_5", "dscoop")
    serial = explore(eng, ExploreLimits(), [DeadlockRule()])
    par = explore(eng, ExploreLimits(), [DeadlockRule()], workers=2)
    assert serial.sorted_keys() == par.sorted_keys()
    assert serial.final_keys() == par.final_keys()
    assert sorted((serial.keys[s], str(l), serial.keys[d]) for s, l, d in serial.transitions) == sorted(
        (par.keys[s], str(l), par.keys[d]) for s, l, d in par.transitions
    )


def test_witness_paths_replay_from_initial():
    space = bench_space("dp_lazy_2", "rq", "deadlock")
    eng = engine_for("dp_lazy_2", "rq")
    for i in list(range(0, len(space.keys), 997)) + [s for s, _ in space.errors_of("deadlock")[:3]]:
        cfg = space.configs[0]
        for step in space.witness(i):
            (cfg,) = [normalize(c)[0] for lbl, c in eng.successors(cfg) if str(lbl) == step][:1]
        assert canonical_key(cfg) == space.keys[i]


def test_no_transition_leaves_an_error_state():
    space = bench_space("dp_lazy_2", "rq", "deadlock")
    assert not any(s in space.errors for s, _, _ in space.transitions)


def test_initial_configuration_counts_as_one():
    assert len(explore(engine_for("local_only", "qoq"), ExploreLimits(), []).keys) == 2


def test_json_report_is_deterministic_modulo_wall_time():
    def run():
        space = explore(engine_for("colours", "rq"), ExploreLimits(), [DeadlockRule()])
        rep = report_json(space, program="bench:colours")
        rep["stats"].pop("wall_time")
        return dumps(rep)

    a, b = run(), run()
    assert a == b
    data = json.loads(a)
    assert data["verdicts"] == {"deadlock": "no"} and data["complete"]


def test_dot_export_and_size_limit():
    space = explore(engine_for(CONSUMER_ONLY, "qoq"), ExploreLimits(), [])
    dot = to_dot(space)
    assert dot.startswith("digraph") and dot.count("->") == len(space.transitions)
    with pytest.raises(ValueError):
        to_dot(bench_space("colours", "rq"))


def test_explore_accepts_explicit_initial_configuration():
    cfgs = bench_cfgs("colours")
    eng = Engine(cfgs, get_model("qoq"))
    (_, second), = eng.successors(eng.initial())
    space = explore(eng, ExploreLimits(), [], initial=second)
    assert len(space.keys) < len(bench_space("colours", "qoq").keys)
