from __future__ import annotations

import copy
from collections import Counter
from pathlib import Path

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import bench_cfgs, bench_space, engine_for
from scoopw.frontend import compile_source
from scoopw.frontend.cfg import Bin, Const, Local
from scoopw.models.base import append_to_subqueue, close_subqueues, open_subqueues
from scoopw.state import (
    Request,
    Subqueue,
    canonical_key,
    dump,
    eval_expr,
    gc,
    heap_refs_ok,
    load_initial,
    normalize,
)

GOLDEN = Path(__file__).parent / "goldens"

LOCALS = """
class APPLICATION
  make
    local
      n: INTEGER
      ok: BOOLEAN
      other: APPLICATION
      times_to_eat: INTEGER
    do
    end
end
"""


def test_initial_shape():
    for bench in ("colours", "dp_lazy_2", "bank_transfer"):
        cfg = load_initial(bench_cfgs(bench))
        assert len(cfg.handlers) == 1 and cfg.nodes == 1
        assert len(cfg.handlers[0].heap) == 1 and cfg.error is None
        assert cfg.locks == () and cfg.prelocks == ()


def test_initial_locals_take_type_defaults():
    cfg = load_initial(compile_source(LOCALS))
    assert cfg.handlers[0].stack[0].locs == (0, False, None, 0)


def test_initial_key_is_stable():
    a = load_initial(bench_cfgs("dp_eager_2"))
    b = load_initial(bench_cfgs("dp_eager_2"))
    assert canonical_key(a) == canonical_key(b)


def test_eval_expr_examples():
    cfg = load_initial(compile_source(LOCALS))
    assert eval_expr(cfg, 0, Bin("+", Const(1), Const(2))) == 3
    assert eval_expr(cfg, 0, Bin("<", Local(3, "times_to_eat"), Const(1))) is True


def test_attribute_read_on_void_gives_void_call_error():
    src = """
class CELL
  v: INTEGER
  make do end
end
class APPLICATION
  c: CELL
  make local n: INTEGER do n := c.v end
end
"""
    init = engine_for(src, "qoq").initial()
    assert init.error is not None and init.error.kind == "VoidCall"


def test_overflow_gives_error():
    src = "class APPLICATION make local n: INTEGER do n := 9223372036854775807  n := n + 1 end end"
    assert engine_for(src, "rq").initial().error.kind == "Overflow"


def test_key_equal_for_deep_copy_and_differs_after_assignment():
    eng = engine_for("dp_eager_2", "qoq")
    cfg = eng.initial()
    assert canonical_key(copy.deepcopy(cfg)) == canonical_key(cfg)
    h = cfg.handlers[0]
    f = h.stack[-1]
    changed = cfg.replace_handler(h._replace(stack=(f._replace(locs=(12345,) + f.locs[1:]),)))
    assert canonical_key(changed) != canonical_key(cfg)


def test_reconverging_interleavings_are_merged():
    space = bench_space("colours", "rq")
    mult = Counter((s, d) for s, _, d in space.transitions)
    g = nx.DiGraph(list(mult))
    assert nx.is_directed_acyclic_graph(g)
    paths = {0: 1}
    for n in nx.topological_sort(g):
        for m in g.successors(n):
            paths[m] = paths.get(m, 0) + paths[n] * mult[(n, m)]
    traces = sum(paths[n] for n in g if g.out_degree(n) == 0)
    assert len(space.keys) < traces


def _two_handler_cfg(model_name: str):
    eng = engine_for("colours", model_name)
    cfg = eng.initial()
    while len(cfg.handlers) < 3:
        (_, cfg), = [s for s in eng.successors(cfg) if s[0].rule == "create_separate"]
    return eng, cfg


def test_gc_drops_drained_closed_subqueue():
    eng, cfg = _two_handler_cfg("qoq")
    cfg = open_subqueues(cfg, 99, 0, (1,))
    req = Request("command", "CELL", "set_colour", 0, (1,), 0, 99, 1, None)
    cfg = cfg.replace_handler(append_to_subqueue(cfg.handlers[1], req))
    cfg = close_subqueues(cfg, 99, (1,))
    assert any(isinstance(s, Subqueue) and s.owner == 99 for s in cfg.handlers[1].inbox)
    # draining then collecting removes the subqueue
    h = cfg.handlers[1]
    drained = tuple(s._replace(reqs=()) if s.owner == 99 else s for s in h.inbox)
    cfg = gc(cfg.replace_handler(h._replace(inbox=drained)), eng.cfgs)
    assert all(s.owner != 99 for s in cfg.handlers[1].inbox)


def test_gc_keeps_unreachable_objects():
    src = "class BOX make do end end\nclass APPLICATION b: BOX make do create b.make  b := Void end end"
    eng = engine_for(src, "qoq")
    cfg = eng.initial()
    assert len(cfg.handlers[0].heap) == 2
    assert gc(cfg, eng.cfgs).handlers[0].heap == cfg.handlers[0].heap


def _reachable(bench: str, model: str):
    return bench_space(bench, model).configs


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["colours", "stack", "producer_consumer_5"]), st.sampled_from(["rq", "qoq", "dscoop"]), st.integers(min_value=0))
def test_gc_is_idempotent(bench, model, pick):
    configs = _reachable(bench, model)
    cfg = configs[pick % len(configs)]
    cfgs = bench_cfgs(bench)
    once = gc(cfg, cfgs)
    assert gc(once, cfgs) == once


@pytest.mark.parametrize("model", ["rq", "qoq", "dscoop"])
@pytest.mark.parametrize("bench", ["colours", "bank_transfer", "producer_consumer_5"])
def test_heap_ownership_and_counter_monotonicity(bench, model):
    eng = engine_for(bench, model)
    for cfg in bench_space(bench, model).configs:
        assert heap_refs_ok(cfg)
        for _, nxt in eng.successors(cfg):
            assert nxt.next_block_id >= cfg.next_block_id
            assert nxt.next_handler_id >= cfg.next_handler_id
            assert nxt.next_object_id >= cfg.next_object_id
            assert nxt.nodes >= cfg.nodes


@pytest.mark.parametrize("model", ["rq", "qoq", "dscoop"])
def test_canonical_key_injective_on_reachable_configurations(model):
    # debug mode: keep full normalized configurations and compare on key hits
    eng = engine_for("colours", model)
    store = {}
    for cfg in bench_space("colours", model).configs:
        for _, nxt in eng.successors(cfg):
            norm = normalize(nxt)[0]
            key = canonical_key(nxt)
            if key in store:
                assert store[key] == norm
            store[key] = norm


def test_error_configurations_are_absorbing():
    space = bench_space("dp_lazy_2", "rq", "deadlock")
    eng = engine_for("dp_lazy_2", "rq")
    for s, _ in space.errors_of("deadlock"):
        err = space.configs[s].with_error("Deadlock", ())
        assert eng.successors(err) == []
    assert not any(src in space.errors for src, _, _ in space.transitions)


@pytest.mark.parametrize("name", ["colours_initial", "stack_initial"])
def test_dump_golden(name):
    bench = name.split("_")[0]
    text = dump(engine_for(bench, "qoq").initial())
    assert text == (GOLDEN / f"{name}.txt").read_text()


def test_dump_of_first_sync_successors_golden():
    eng = engine_for("stack", "dscoop")
    text = "".join(f"== {label}\n{dump(c)}" for label, c in eng.successors(eng.initial()))
    assert text == (GOLDEN / "stack_dscoop_step1.txt").read_text()
