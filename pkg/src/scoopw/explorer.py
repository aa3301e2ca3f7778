"""Exhaustive, deduplicated state-space exploration."""

from __future__ import annotations

import json
import time
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import networkx as nx

from scoopw.engine import Engine, Label
from scoopw.state import Configuration, ErrorMarker, canonical_key, normalize

DOT_LIMIT = 2000


@dataclass(frozen=True)
class ExploreLimits:
    """Exceeding any limit marks the result truncated."""

    max_states: Optional[int] = None
    max_depth: Optional[int] = None
    time_budget: Optional[float] = None  # seconds


class ErrorRule:
    """A pure predicate over configurations.  ``check`` runs before a
    configuration is expanded; ``check_terminal`` runs on configurations
    without successors."""

    name = "rule"

    def check(self, engine: Engine, cfg: Configuration) -> Optional[ErrorMarker]:
        return None

    def check_terminal(self, engine: Engine, cfg: Configuration) -> Optional[ErrorMarker]:
        return None


@dataclass
class StateSpace:
    """Explored states.  Stored configurations are normalized; a transition
    label names block instances as seen from its source configuration."""

    model: str
    keys: list[bytes] = field(default_factory=list)
    configs: list[Configuration] = field(default_factory=list)
    depth: list[int] = field(default_factory=list)
    parent: list[Optional[tuple[int, Label]]] = field(default_factory=list)
    transitions: list[tuple[int, Label, int]] = field(default_factory=list)
    finals: list[int] = field(default_factory=list)
    errors: dict[int, tuple[str, ErrorMarker]] = field(default_factory=dict)  # state -> (rule, marker)
    terminal_nonfinal: list[int] = field(default_factory=list)
    rules: tuple[str, ...] = ()
    truncated: bool = False
    truncation_reason: Optional[str] = None
    max_frontier: int = 0
    wall_time: float = 0.0
    index: dict[bytes, int] = field(default_factory=dict, repr=False)

    @property
    def complete(self) -> bool:
        return not self.truncated

    def add(self, key: bytes, cfg: Configuration, depth: int, parent) -> int:
        i = len(self.keys)
        self.index[key] = i
        self.keys.append(key)
        self.configs.append(cfg)
        self.depth.append(depth)
        self.parent.append(parent)
        return i

    @property
    def stats(self) -> dict:
        return {
            "configurations": len(self.keys),
            "transitions": len(self.transitions),
            "finals": len(self.finals),
            "errors": len(self.errors),
            "terminal_nonfinal": len(self.terminal_nonfinal),
            "max_frontier": self.max_frontier,
            "wall_time": round(self.wall_time, 3),
        }

    def witness(self, state: int) -> list[str]:
        """Transition labels along the recorded path from the initial state."""
        path: list[str] = []
        while self.parent[state] is not None:
            src, label = self.parent[state]
            path.append(str(label))
            state = src
        return path[::-1]

    def errors_of(self, rule: str) -> list[tuple[int, ErrorMarker]]:
        return sorted((s, m) for s, (r, m) in self.errors.items() if r == rule)

    def verdict(self, rule: str) -> Optional[bool]:
        """True if ``rule`` matched somewhere, False if not, None if unknown
        (truncated exploration without a match)."""
        if self.errors_of(rule):
            return True
        return None if self.truncated else False

    def runtime_errors(self) -> list[tuple[int, ErrorMarker]]:
        return self.errors_of("runtime")

    def sorted_keys(self) -> list[bytes]:
        return sorted(self.keys)

    def final_keys(self) -> list[bytes]:
        return sorted(self.keys[i] for i in self.finals)

    def error_keys(self) -> list[tuple[bytes, str, str]]:
        return sorted((self.keys[s], r, m.kind) for s, (r, m) in self.errors.items())

    def graph(self) -> nx.MultiDiGraph:
        g = nx.MultiDiGraph()
        g.add_nodes_from(range(len(self.keys)))
        for s, label, d in self.transitions:
            g.add_edge(s, d, label=str(label))
        return g


# --------------------------------------------------------------- expansion


def _expand(engine: Engine, rules: Sequence[ErrorRule], cfg: Configuration):
    """Classify one configuration: ("error", rule, marker), ("terminal",
    rule|None, marker|None) or ("expand", [(label, key, cfg)])."""
    if cfg.error is not None:
        return ("error", "runtime", cfg.error)
    for rule in rules:
        marker = rule.check(engine, cfg)
        if marker is not None:
            return ("error", rule.name, marker)
    succ = engine.enumerate_sync_steps(cfg)
    if not succ:
        for rule in rules:
            marker = rule.check_terminal(engine, cfg)
            if marker is not None:
                return ("error", rule.name, marker)
        return ("terminal", None, None)
    out = []
    for label, c in succ:
        norm = normalize(c)[0]
        out.append((label, repr(norm).encode(), norm))
    return ("expand", out)


def _record(space: StateSpace, i: int, outcome, depth: int, push: Callable[[int], None], limits: ExploreLimits) -> None:
    kind = outcome[0]
    cfg = space.configs[i]
    if kind == "error":
        _, rule, marker = outcome
        space.errors[i] = (rule, marker)
        if cfg.error is None:
            space.configs[i] = cfg._replace(error=marker)
        return
    if kind == "terminal":
        if all(not h.stack for h in cfg.handlers):
            space.finals.append(i)
        else:
            space.terminal_nonfinal.append(i)
        return
    for label, key, nxt in outcome[1]:
        j = space.index.get(key)
        if j is None:
            if limits.max_states is not None and len(space.keys) >= limits.max_states:
                _truncate(space, "max_states")
                continue
            j = space.add(key, nxt, depth + 1, (i, label))
            push(j)
        space.transitions.append((i, label, j))


def _truncate(space: StateSpace, reason: str) -> None:
    if not space.truncated:
        space.truncated = True
        space.truncation_reason = reason


def explore(
    engine: Engine,
    limits: ExploreLimits = ExploreLimits(),
    rules: Sequence[ErrorRule] = (),
    *,
    order: str = "bfs",
    workers: int = 1,
    initial: Optional[Configuration] = None,
) -> StateSpace:
    """Explore every configuration reachable from ``initial`` (by default the
    program's initial local fixpoint).  Error rules are evaluated before a
    configuration is expanded; a matching configuration becomes a sealed
    error state with no successors."""
    if order not in ("bfs", "dfs"):
        raise ValueError(f"unknown order {order!r}")
    start = time.monotonic()
    space = StateSpace(engine.model.name, rules=tuple(r.name for r in rules))
    init = normalize(initial if initial is not None else engine.initial())[0]
    space.add(canonical_key(init), init, 0, None)
    if workers > 1:
        if order != "bfs":
            raise ValueError("parallel exploration is breadth-first")
        _explore_parallel(engine, limits, rules, space, workers, start)
    else:
        _explore_serial(engine, limits, rules, space, order, start)
    space.wall_time = time.monotonic() - start
    return space


def _over_budget(limits: ExploreLimits, start: float) -> bool:
    return limits.time_budget is not None and time.monotonic() - start > limits.time_budget


def _explore_serial(engine, limits, rules, space, order, start) -> None:
    frontier: deque[int] = deque([0])
    pop = frontier.popleft if order == "bfs" else frontier.pop
    while frontier:
        space.max_frontier = max(space.max_frontier, len(frontier))
        if _over_budget(limits, start):
            _truncate(space, "time_budget")
            break
        i = pop()
        d = space.depth[i]
        if limits.max_depth is not None and d >= limits.max_depth:
            outcome = _expand(engine, rules, space.configs[i])
            if outcome[0] == "expand":
                _truncate(space, "max_depth")
                continue
        else:
            outcome = _expand(engine, rules, space.configs[i])
        _record(space, i, outcome, d, frontier.append, limits)


# parallel workers keep their own engine, installed once per process
_WORKER: dict = {}


def _init_worker(engine: Engine, rules: Sequence[ErrorRule]) -> None:
    _WORKER["engine"] = engine
    _WORKER["rules"] = rules


def _expand_batch(cfgs: list[Configuration]):
    eng = _WORKER["engine"]
    rules = _WORKER["rules"]
    return [_expand(eng, rules, c) for c in cfgs]


def _explore_parallel(engine, limits, rules, space, workers, start) -> None:
    """Level-synchronous BFS; results are merged in frontier order, so the
    outcome is identical to the serial breadth-first run."""
    level = [0]
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(engine, rules)) as pool:
        while level:
            space.max_frontier = max(space.max_frontier, len(level))
            if _over_budget(limits, start):
                _truncate(space, "time_budget")
                break
            size = max(1, -(-len(level) // (workers * 4)))
            chunks = [level[k : k + size] for k in range(0, len(level), size)]
            results = pool.map(_expand_batch, [[space.configs[i] for i in c] for c in chunks])
            nxt: list[int] = []
            for chunk, outcomes in zip(chunks, results):
                for i, outcome in zip(chunk, outcomes):
                    d = space.depth[i]
                    if limits.max_depth is not None and d >= limits.max_depth and outcome[0] == "expand":
                        _truncate(space, "max_depth")
                        continue
                    _record(space, i, outcome, d, nxt.append, limits)
            level = nxt


# ------------------------------------------------------------- diagnostics


@dataclass
class SccSummary:
    states: list[int]
    transitions: int
    rules: list[str]  # distinct transition rule names inside the component

    def to_json(self) -> dict:
        return {"size": len(self.states), "states": self.states[:20], "transitions": self.transitions, "rules": self.rules}


def terminal_scc_report(space: StateSpace) -> list[SccSummary]:
    """Terminal strongly connected components that contain a cycle but no
    final or error state: candidate livelocks such as a wait condition that
    can never become true."""
    if space.truncated:
        raise ValueError("terminal SCC report needs a complete exploration")
    g = nx.DiGraph()
    g.add_nodes_from(range(len(space.keys)))
    rules_on: dict[tuple[int, int], set[str]] = {}
    for s, label, d in space.transitions:
        g.add_edge(s, d)
        rules_on.setdefault((s, d), set()).add(label.rule)
    cond = nx.condensation(g)
    finals = set(space.finals) | set(space.errors)
    out = []
    for c in sorted(cond.nodes, key=lambda c: min(cond.nodes[c]["members"])):
        if cond.out_degree(c):
            continue
        members = sorted(cond.nodes[c]["members"])
        internal = [(s, d) for s in members for d in g.successors(s)]
        if not internal or finals.intersection(members):
            continue
        rules = sorted(set().union(*(rules_on[e] for e in internal)))
        out.append(SccSummary(members, len(internal), rules))
    return out


@dataclass
class DiffRecord:
    deltas: dict[str, int]
    verdicts: dict[str, tuple[Optional[bool], Optional[bool]]]

    @property
    def discrepancies(self) -> list[str]:
        return [r for r, (a, b) in self.verdicts.items() if a is not None and b is not None and a != b]


def stats_diff(a: StateSpace, b: StateSpace) -> DiffRecord:
    """Per-metric deltas (b - a) and per-rule verdict pairs."""
    metrics = ("configurations", "transitions", "finals", "errors", "terminal_nonfinal")
    sa, sb = a.stats, b.stats
    deltas = {m: sb[m] - sa[m] for m in metrics}
    verdicts = {}
    for rule in sorted(set(a.rules) | set(b.rules)):
        verdicts[rule] = (a.verdict(rule), b.verdict(rule))
    return DiffRecord(deltas, verdicts)


# ------------------------------------------------------------------ export


def verdict_str(v: Optional[bool]) -> str:
    return "unknown" if v is None else ("yes" if v else "no")


def report_json(space: StateSpace, *, program: str = "", max_witnesses: int = 3) -> dict:
    errors = []
    for rule in list(space.rules) + ["runtime"]:
        for s, marker in space.errors_of(rule)[:max_witnesses]:
            errors.append(
                {
                    "rule": rule,
                    "kind": marker.kind,
                    "witness": _jsonable(marker.witness),
                    "state": s,
                    "trace": space.witness(s),
                }
            )
    stats = dict(space.stats)
    return {
        "program": program,
        "model": space.model,
        "complete": space.complete,
        "truncation": space.truncation_reason,
        "stats": stats,
        "verdicts": {r: verdict_str(space.verdict(r)) for r in space.rules},
        "runtime_errors": len(space.runtime_errors()),
        "errors": errors,
    }


def _jsonable(x):
    if isinstance(x, tuple):
        return [_jsonable(v) for v in x]
    return x


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)


def to_dot(space: StateSpace, limit: int = DOT_LIMIT) -> str:
    if len(space.keys) > limit:
        raise ValueError(f"state space has {len(space.keys)} states; DOT export is limited to {limit}")
    finals = set(space.finals)
    lines = ["digraph statespace {", "  node [shape=circle];"]
    for i in range(len(space.keys)):
        attrs = []
        if i in finals:
            attrs.append("shape=doublecircle")
        if i in space.errors:
            attrs.append('color=red label="%d %s"' % (i, space.errors[i][1].kind))
        lines.append(f"  s{i}" + (f" [{' '.join(attrs)}]" if attrs else "") + ";")
    for s, label, d in space.transitions:
        lines.append(f'  s{s} -> s{d} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
