"""Error rules (deadlock, stuck, mutual exclusion), the order-guarantee
monitor, and cross-model comparison."""

from __future__ import annotations

import json
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

import networkx as nx

from scoopw.engine import Engine, Label
from scoopw.explorer import ErrorRule, ExploreLimits, StateSpace, explore, stats_diff, verdict_str
from scoopw.frontend.cfg import CfgSet
from scoopw.models import get_model
from scoopw.state import Configuration, ErrorMarker, normalize

# ------------------------------------------------------------------ rules


class DeadlockRule(ErrorRule):
    """Cycle in the wait-for graph; terminal configurations with a busy
    handler are reported as Stuck (covers waits the cycle search misses)."""

    name = "deadlock"

    def check(self, engine: Engine, cfg: Configuration) -> Optional[ErrorMarker]:
        return deadlock_marker(engine, cfg)

    def check_terminal(self, engine: Engine, cfg: Configuration) -> Optional[ErrorMarker]:
        return stuck_marker(engine, cfg)


class StuckRule(ErrorRule):
    name = "stuck"

    def check_terminal(self, engine: Engine, cfg: Configuration) -> Optional[ErrorMarker]:
        return stuck_marker(engine, cfg)


def deadlock_marker(engine: Engine, cfg: Configuration) -> Optional[ErrorMarker]:
    edges = engine.wait_edges(cfg)
    if len(edges) < 1:
        return None
    g = nx.DiGraph()
    for waiter, resource, owner in edges:
        if not g.has_edge(waiter, owner):
            g.add_edge(waiter, owner, resource=resource)
    try:
        cycle = nx.find_cycle(g)
    except nx.NetworkXNoCycle:
        return None
    # rotate so the witness starts at its smallest handler
    k = min(range(len(cycle)), key=lambda i: cycle[i][0])
    cycle = cycle[k:] + cycle[:k]
    return ErrorMarker("Deadlock", tuple((u, g.edges[u, v]["resource"], v) for u, v in cycle))


def stuck_marker(engine: Engine, cfg: Configuration) -> Optional[ErrorMarker]:
    busy = tuple((h.id, engine.handler_status(cfg, h.id)) for h in cfg.handlers if h.stack)
    return ErrorMarker("Stuck", busy) if busy else None


class MutexRule(ErrorRule):
    """Two handlers are simultaneously inside the implicit block of one of
    ``methods`` and some separate formal of each refers to the same handler."""

    def __init__(self, name: str, methods: Sequence[str], overlap: str = "shared_formal_target"):
        if overlap != "shared_formal_target":
            raise ValueError(f"unknown overlap {overlap!r}")
        self.name = name
        self.methods = tuple(methods)
        self.overlap = overlap

    def inside(self, cfgs: CfgSet, cfg: Configuration) -> list[tuple[int, str, frozenset[int]]]:
        """(handler, method, target handlers) for every frame inside its block."""
        found = []
        for h in cfg.handlers:
            if not h.blocks:
                continue
            depths = {b.depth for b in h.blocks}
            for d, f in enumerate(h.stack):
                if f.method in self.methods and d in depths:
                    c = cfgs.method(f.cls, f.method)
                    targets = frozenset(
                        f.locs[i][0] for i in range(len(c.formals)) if c.local_separate[i] and f.locs[i] is not None
                    )
                    found.append((h.id, f.method, targets))
        return found

    def check(self, engine: Engine, cfg: Configuration) -> Optional[ErrorMarker]:
        frames = self.inside(engine.cfgs, cfg)
        for i in range(len(frames)):
            for j in range(i + 1, len(frames)):
                a, b = frames[i], frames[j]
                if a[0] != b[0] and a[2] & b[2]:
                    wa = (a[0], a[1], tuple(sorted(a[2])))
                    wb = (b[0], b[1], tuple(sorted(b[2])))
                    return ErrorMarker("MutexViolation", tuple(sorted((wa, wb))))
        return None

    def __repr__(self) -> str:
        return f"MutexRule({self.name!r}, {self.methods!r})"


BUILTIN_RULES = ("deadlock", "stuck")


def parse_rule_list(text: str) -> list[ErrorRule]:
    """Comma-separated built-ins: ``deadlock``, ``stuck``, ``mutex:m1|m2``."""
    rules: list[ErrorRule] = []
    for item in (t.strip() for t in text.split(",")):
        if not item:
            continue
        if item == "deadlock":
            rules.append(DeadlockRule())
        elif item == "stuck":
            rules.append(StuckRule())
        elif item.startswith("mutex:"):
            methods = [m for m in item[len("mutex:") :].split("|") if m]
            if not methods:
                raise ValueError("mutex rule needs a method name")
            rules.append(MutexRule(f"mutex:{'|'.join(methods)}", methods))
        else:
            raise ValueError(f"unknown rule {item!r}")
    return rules


def load_rule_file(path: str | Path) -> list[ErrorRule]:
    """Rules from a JSON file ``{"rules": [{"name", "kind", ...}]}``."""
    data = json.loads(Path(path).read_text())
    rules: list[ErrorRule] = []
    for r in data["rules"]:
        kind = r["kind"]
        if kind == "deadlock":
            rule: ErrorRule = DeadlockRule()
        elif kind == "stuck":
            rule = StuckRule()
        elif kind == "mutex":
            m = r["method"]
            rule = MutexRule(r.get("name", f"mutex:{m}"), [m] if isinstance(m, str) else m, r.get("overlap", "shared_formal_target"))
        else:
            raise ValueError(f"unknown rule kind {kind!r}")
        if "name" in r:
            rule.name = r["name"]
        rules.append(rule)
    return rules


def resolve_rules(spec: Optional[str]) -> list[ErrorRule]:
    if not spec:
        return []
    if spec.endswith(".json") or Path(spec).is_file():
        return load_rule_file(spec)
    return parse_rule_list(spec)


# ---------------------------------------------------------- order monitor


class SupplierLog(NamedTuple):
    last_block: Optional[int]
    last_seq: int
    finished: frozenset


@dataclass(frozen=True)
class OrderMonitor:
    """Per supplier: the block served last, its last sequence number, and
    the blocks whose run is over.  Trace-local; never part of a state key."""

    logs: tuple = ()  # sorted ((supplier, SupplierLog), ...)

    def get(self, supplier: int) -> SupplierLog:
        for s, log in self.logs:
            if s == supplier:
                return log
        return SupplierLog(None, 0, frozenset())

    def put(self, supplier: int, log: SupplierLog) -> "OrderMonitor":
        rest = tuple(x for x in self.logs if x[0] != supplier)
        return OrderMonitor(tuple(sorted(rest + ((supplier, log),), key=lambda x: x[0])))


class OrderViolation(NamedTuple):
    supplier: int
    block: int
    seq: int
    reason: str


def order_monitor_step(mon: OrderMonitor, t: Label) -> tuple[OrderMonitor, Optional[OrderViolation]]:
    """Feed one transition; only ``dequeue_execute`` labels matter."""
    if t.rule != "dequeue_execute":
        return mon, None
    supplier = t.handler
    _client, block, seq, _method = t.detail
    log = mon.get(supplier)
    violation = None
    if block == log.last_block:
        if seq != log.last_seq + 1:
            violation = OrderViolation(supplier, block, seq, f"expected seq {log.last_seq + 1}")
        log = log._replace(last_seq=seq)
    else:
        if block in log.finished:
            violation = OrderViolation(supplier, block, seq, "block resumed after another block was served")
        elif seq != 1:
            violation = OrderViolation(supplier, block, seq, "block run does not start at seq 1")
        finished = log.finished | {log.last_block} if log.last_block is not None else log.finished
        log = SupplierLog(block, seq, finished)
    return mon.put(supplier, log), violation


def _monitor_key(mon: OrderMonitor, mapping: dict[int, int]) -> tuple:
    # dead block ids can never be served again (ids are never reused along a
    # trace), so only live ids are kept, under the configuration's renaming
    out = []
    for s, log in mon.logs:
        last = mapping.get(log.last_block, -1) if log.last_block is not None else None
        fin = tuple(sorted(mapping[b] for b in log.finished if b in mapping))
        out.append((s, last, log.last_seq if last not in (None, -1) else 0, fin))
    return tuple(out)


@dataclass
class TraceCheckResult:
    model: str
    depth: int
    product_states: int
    violations: list[tuple[OrderViolation, list[str]]] = field(default_factory=list)
    truncated: bool = False
    wall_time: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "model": self.model,
            "depth": self.depth,
            "product_states": self.product_states,
            "complete": not self.truncated,
            "violations": [
                {"supplier": v.supplier, "block": v.block, "seq": v.seq, "reason": v.reason, "trace": trace}
                for v, trace in self.violations
            ],
            "wall_time": round(self.wall_time, 3),
        }


def trace_check(engine: Engine, depth: int = 500, *, max_violations: int = 1) -> TraceCheckResult:
    """Run the order monitor over every trace of at most ``depth`` transitions.

    Traces are enumerated as paths in the product of the transition system
    with the monitor; merging product states whose configuration and
    monitor state coincide loses no trace behaviour, because the future of a
    trace depends only on that pair."""
    start = time.monotonic()
    init = engine.initial()
    mon0 = OrderMonitor()

    def key(cfg: Configuration, mon: OrderMonitor) -> tuple:
        norm, mapping = normalize(cfg)
        return (repr(norm), _monitor_key(mon, mapping))

    seen = {key(init, mon0): 0}
    nodes: list[tuple[Configuration, OrderMonitor, int, Optional[tuple[int, Label]]]] = [(init, mon0, 0, None)]
    frontier = deque([0])
    result = TraceCheckResult(engine.model.name, depth, 0)
    while frontier:
        i = frontier.popleft()
        cfg, mon, d, _ = nodes[i]
        if cfg.error is not None:
            continue
        succ = engine.enumerate_sync_steps(cfg)
        if succ and d >= depth:
            result.truncated = True
            continue
        for label, nxt in succ:
            mon2, violation = order_monitor_step(mon, label)
            if violation is not None:
                trace = _trace(nodes, i) + [str(label)]
                result.violations.append((violation, trace))
                if len(result.violations) >= max_violations:
                    result.product_states = len(nodes)
                    result.wall_time = time.monotonic() - start
                    return result
                continue
            k = key(nxt, mon2)
            if k not in seen:
                seen[k] = len(nodes)
                nodes.append((nxt, mon2, d + 1, (i, label)))
                frontier.append(len(nodes) - 1)
    result.product_states = len(nodes)
    result.wall_time = time.monotonic() - start
    return result


def _trace(nodes, i: int) -> list[str]:
    out = []
    while nodes[i][3] is not None:
        i, label = nodes[i][3]
        out.append(str(label))
    return out[::-1]


# ------------------------------------------------------------- comparison


@dataclass
class ComparisonReport:
    program: str
    spaces: dict[str, StateSpace]
    rules: tuple[str, ...]

    def verdicts(self) -> dict[str, dict[str, Optional[bool]]]:
        """Per rule and model; every verdict is unknown once any space is
        truncated, since the comparison is then not like for like."""
        if self.unknown:
            return {r: {m: None for m in self.spaces} for r in self.rules}
        return {r: {m: s.verdict(r) for m, s in self.spaces.items()} for r in self.rules}

    def discrepancies(self) -> list[str]:
        """Rules whose known verdicts differ between models."""
        out = []
        for r, per_model in self.verdicts().items():
            known = {v for v in per_model.values() if v is not None}
            if len(known) > 1:
                out.append(r)
        return out

    @property
    def unknown(self) -> bool:
        return any(s.truncated for s in self.spaces.values())

    def pairwise(self) -> dict[str, dict]:
        models = list(self.spaces)
        out = {}
        for i in range(len(models)):
            for j in range(i + 1, len(models)):
                d = stats_diff(self.spaces[models[i]], self.spaces[models[j]])
                out[f"{models[i]}->{models[j]}"] = {
                    "deltas": d.deltas,
                    "verdicts": {r: [verdict_str(a), verdict_str(b)] for r, (a, b) in d.verdicts.items()},
                }
        return out

    def to_json(self) -> dict:
        return {
            "program": self.program,
            "models": list(self.spaces),
            "stats": {m: s.stats for m, s in self.spaces.items()},
            "complete": not self.unknown,
            "verdicts": {r: {m: verdict_str(v) for m, v in pm.items()} for r, pm in self.verdicts().items()},
            "discrepancies": self.discrepancies(),
            "pairwise": self.pairwise(),
        }

    def text(self) -> str:
        lines = [f"program {self.program}"]
        for m, s in self.spaces.items():
            st = s.stats
            flag = "" if s.complete else " (truncated)"
            lines.append(f"  {m}: configurations={st['configurations']} transitions={st['transitions']} finals={st['finals']}{flag}")
        for r, pm in self.verdicts().items():
            mark = "  <-- discrepancy" if r in self.discrepancies() else ""
            lines.append(f"{r}: " + " ".join(f"{m}={verdict_str(v)}" for m, v in pm.items()) + mark)
        return "\n".join(lines) + "\n"


def compare_semantics(
    cfgs: CfgSet,
    models: Sequence[str],
    rules_spec: Optional[str] | Sequence[ErrorRule],
    limits: ExploreLimits = ExploreLimits(),
    *,
    program: str = "",
    workers: int = 1,
) -> ComparisonReport:
    if len(models) < 2:
        raise ValueError("comparison needs at least two models")
    rules = resolve_rules(rules_spec) if rules_spec is None or isinstance(rules_spec, str) else list(rules_spec)
    spaces = {}
    for m in models:
        spaces[m] = explore(Engine(cfgs, get_model(m)), limits, rules, workers=workers)
    return ComparisonReport(program, spaces, tuple(r.name for r in rules))


__all__ = [
    "BUILTIN_RULES",
    "ComparisonReport",
    "DeadlockRule",
    "MutexRule",
    "OrderMonitor",
    "OrderViolation",
    "StuckRule",
    "TraceCheckResult",
    "compare_semantics",
    "deadlock_marker",
    "load_rule_file",
    "order_monitor_step",
    "parse_rule_list",
    "resolve_rules",
    "stuck_marker",
    "trace_check",
]
