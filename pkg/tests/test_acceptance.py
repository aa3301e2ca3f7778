"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines inline;
they are also repeated in the terminal summary.
"""

from __future__ import annotations

import json
import resource
import time
from pathlib import Path

from conftest import ACCEPTANCE_LINES as LINES, bench_cfgs, engine_for
from scoopw.explorer import ExploreLimits, explore
from scoopw.properties import DeadlockRule, StuckRule, compare_semantics, parse_rule_list, trace_check
from scoopw.state import Configuration

MODELS = ("rq", "qoq", "dscoop")
COUNTS = json.loads((Path(__file__).parent / "goldens" / "state_counts.json").read_text())


def report(request, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {request.node.name}: {detail}"
    LINES.append(line)
    print("\n" + line)
    assert ok, detail


def peak_rss_mb() -> float:
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024


def attr(cfgs, cfg: Configuration, ref, name: str):
    h = next(h for h in cfg.handlers if h.id == ref[0])
    o = h.obj(ref[1])
    return o.attrs[cfgs.classes[o.cls].attr_names.index(name)]


def root_attr(cfgs, cfg: Configuration, name: str):
    root = cfg.handlers[0]
    return attr(cfgs, cfg, (root.id, root.heap[0].oid), name)


def test_criterion_1_deadlock_discrepancy(request):
    t = time.monotonic()
    rep = compare_semantics(bench_cfgs("dp_lazy_2"), list(MODELS), "deadlock", program="bench:dp_lazy_2")
    elapsed = time.monotonic() - t
    verdicts = rep.verdicts()["deadlock"]
    (_, marker), *_ = rep.spaces["rq"].errors_of("deadlock")
    (a, ra, b), (b2, rb, a2) = marker.witness
    two_cycle = (a, b) == (a2, b2) and a != b and ra.startswith("lock(") and rb.startswith("lock(")
    ok = verdicts == {"rq": True, "qoq": False, "dscoop": False} and two_cycle and elapsed < 30 and peak_rss_mb() < 1024
    report(request, ok, f"verdicts={verdicts} witness={marker.witness} time={elapsed:.1f}s peak_rss={peak_rss_mb():.0f}MB")


def test_criterion_2_mutex_discrepancy(request):
    t = time.monotonic()
    rep = compare_semantics(bench_cfgs("dp_eager_2"), list(MODELS), "deadlock,mutex:eat", program="bench:dp_eager_2")
    elapsed = time.monotonic() - t
    v = rep.verdicts()
    ok = (
        v["deadlock"] == {"rq": False, "qoq": False, "dscoop": False}
        and v["mutex:eat"] == {"rq": False, "qoq": True, "dscoop": True}
        and elapsed < 60
    )
    report(request, ok, f"verdicts={v} time={elapsed:.1f}s")


def test_criterion_3_colours_final_pairs(request):
    cfgs = bench_cfgs("colours")
    results, ok = {}, True
    for model in MODELS:
        t = time.monotonic()
        space = explore(engine_for("colours", model), ExploreLimits(), [])
        elapsed = time.monotonic() - t
        pairs = set()
        for s in space.finals:
            cfg = space.configs[s]
            x, y = root_attr(cfgs, cfg, "x"), root_attr(cfgs, cfg, "y")
            pairs.add((attr(cfgs, cfg, x, "colour"), attr(cfgs, cfg, y, "colour")))
        results[model] = (sorted(pairs), round(elapsed, 1))
        ok &= pairs == {(1, 1), (2, 2)} and space.complete and not space.terminal_nonfinal and elapsed < 10
    report(request, ok, f"final (x, y) colours per model (1=Green, 2=Indigo) and seconds: {results}")


def test_criterion_4_order_guarantee(request):
    found, ok = {}, True
    for bench in ("colours", "stack", "dp_eager_2", "producer_consumer_5"):
        for model in MODELS:
            res = trace_check(engine_for(bench, model), 500)
            found[f"{bench}/{model}"] = len(res.violations)
            ok &= res.ok and not res.truncated
    faulty = trace_check(engine_for("stack", "qoq", fault_reorder=True), 500)
    ok &= len(faulty.violations) >= 1
    report(request, ok, f"violations={found} injected_fault_violations={len(faulty.violations)}")


def test_criterion_5_wait_conditions(request):
    cfgs = bench_cfgs("producer_consumer_5")
    detail, ok = {}, True
    for model in MODELS:
        t = time.monotonic()
        space = explore(engine_for("producer_consumer_5", model), ExploreLimits(), [])
        counts = set()
        for cfg in space.configs:
            for h in cfg.handlers:
                for o in h.heap:
                    if o.cls == "BUFFER":
                        layout = cfgs.classes["BUFFER"].attr_names
                        count, cap = o.attrs[layout.index("count")], o.attrs[layout.index("capacity")]
                        counts.add(count)
                        ok &= cap == 0 or 0 <= count <= cap
        terminal_ok = not space.terminal_nonfinal and all(all(h.idle for h in space.configs[s].handlers) for s in space.finals)
        elapsed = time.monotonic() - t
        ok &= space.complete and terminal_ok and elapsed < 300
        detail[model] = f"states={len(space.keys)} counts={sorted(counts)} terminals_idle={terminal_ok} {elapsed:.1f}s"
    report(request, ok, str(detail))


def test_criterion_6_directional_pattern(request):
    detail, ok = {}, True
    for bench in ("dp_eager_2", "producer_consumer_5"):
        c = {m: len(explore(engine_for(bench, m), ExploreLimits(), []).keys) for m in MODELS}
        golden = {m: COUNTS[bench][m]["configurations"] for m in MODELS}
        ok &= c["dscoop"] > c["qoq"] >= c["rq"] and c == golden
        detail[bench] = c
    report(request, ok, f"configurations={detail} (match goldens)")


def test_criterion_7_dscoop_projection(request):
    qoq = explore(engine_for("local_only", "qoq"), ExploreLimits(), [])
    ds = explore(engine_for("local_only", "dscoop"), ExploreLimits(), [])
    a = b"\n".join(qoq.sorted_keys())
    b = b"\n".join(ds.sorted_keys())
    report(request, a == b and qoq.complete and ds.complete, f"states qoq={len(qoq.keys)} dscoop={len(ds.keys)} byte_equal={a == b}")


def test_criterion_8_exploration_determinism(request):
    eng = engine_for("dp_lazy_2", "qoq")
    rules = [DeadlockRule(), StuckRule()]
    runs = {
        "bfs": explore(eng, ExploreLimits(), rules),
        "dfs": explore(eng, ExploreLimits(), rules, order="dfs"),
        "par4": explore(eng, ExploreLimits(), rules, workers=4),
    }
    sig = {
        k: (tuple(s.sorted_keys()), tuple(s.final_keys()), tuple(sorted((r, s.verdict(r)) for r in s.rules)))
        for k, s in runs.items()
    }
    ok = sig["bfs"] == sig["dfs"] == sig["par4"]
    report(request, ok, " ".join(f"{k}: states={len(v[0])} finals={len(v[1])} verdicts={dict(v[2])}" for k, v in sig.items()))


def test_criterion_9_prelock_order_safety(request):
    rules = parse_rule_list("deadlock,stuck")
    safe = explore(engine_for("bank_transfer", "dscoop"), ExploreLimits(), rules)
    hooked = explore(engine_for("bank_transfer", "dscoop", prelock_order="descending"), ExploreLimits(), rules)
    safe_ok = safe.complete and safe.verdict("deadlock") is False and safe.verdict("stuck") is False
    hooked_cycle = hooked.verdict("deadlock") is True
    report(
        request,
        safe_ok and hooked_cycle,
        f"ascending: states={len(safe.keys)} deadlock={safe.verdict('deadlock')} stuck={safe.verdict('stuck')}; "
        f"descending hook: states={len(hooked.keys)} deadlock={hooked.verdict('deadlock')}",
    )
