"""Command-line front end: compile, explore, compare, trace-check.

Exit codes: 0 clean, 1 parse/compile/usage error, 2 property violation or
discrepancy, 3 exploration truncated (verdicts unknown).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from scoopw.benchmarks import benchmark_source, list_benchmarks
from scoopw.engine import Engine
from scoopw.explorer import ExploreLimits, dumps, explore, report_json, terminal_scc_report, to_dot, verdict_str
from scoopw.frontend import CompileError, ParseError, compile_source, lint
from scoopw.models import MODELS, get_model
from scoopw.properties import compare_semantics, load_rule_file, parse_rule_list, trace_check

EXIT_OK, EXIT_COMPILE, EXIT_VIOLATION, EXIT_TRUNCATED = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    models: list[str]
    program: str
    limits: ExploreLimits = ExploreLimits()
    rules: Optional[str] = None
    format: str = "text"
    workers: int = 1
    depth: int = 500
    model_options: dict = field(default_factory=dict)

    def __post_init__(self):
        unknown = [m for m in self.models if m not in MODELS]
        if unknown:
            raise UsageError(f"unknown model id(s): {', '.join(unknown)}; known: {', '.join(MODELS)}")


def load_program(ref: str) -> str:
    """Source text for ``bench:<id>`` or a file path."""
    if ref.startswith("bench:"):
        try:
            return benchmark_source(ref[len("bench:"):])
        except KeyError:
            raise UsageError(f"unknown benchmark {ref!r}") from None
    path = Path(ref)
    if not path.is_file():
        raise UsageError(f"no such program file: {ref}")
    return path.read_text(encoding="utf-8")


def load_rules(spec: Optional[str]):
    if not spec:
        return []
    if Path(spec).is_file():
        return load_rule_file(spec)
    try:
        return parse_rule_list(spec)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _compile(ref: str):
    return compile_source(load_program(ref))


def _emit(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


# ---------------------------------------------------------------- commands


def cmd_explore(rc: RunConfig) -> int:
    cfgs = _compile(rc.program)
    rules = load_rules(rc.rules)
    engine = Engine(cfgs, get_model(rc.models[0], **rc.model_options))
    space = explore(engine, rc.limits, rules, workers=rc.workers)
    report = report_json(space, program=rc.program)
    report["terminal_sccs"] = [s.to_json() for s in terminal_scc_report(space)] if space.complete else []
    violated = any(space.verdict(r) for r in space.rules) or bool(space.runtime_errors())
    if rc.format == "json":
        _emit(dumps(report))
    elif rc.format == "dot":
        _emit(to_dot(space))
    else:
        st = space.stats
        lines = [
            f"program {rc.program} model {space.model}",
            f"configurations={st['configurations']} transitions={st['transitions']} finals={st['finals']}"
            f" terminal_nonfinal={st['terminal_nonfinal']}",
        ]
        if not space.complete:
            lines.append(f"truncated: {space.truncation_reason}")
        for r in space.rules:
            lines.append(f"{r}: {verdict_str(space.verdict(r))}")
        for e in report["errors"]:
            lines.append(f"  {e['rule']} {e['kind']} witness={e['witness']}")
            lines.extend(f"    {step}" for step in e["trace"])
        for scc in report["terminal_sccs"]:
            lines.append(f"terminal SCC without final state: {scc['size']} states")
        _emit("\n".join(lines))
    if violated:
        return EXIT_VIOLATION
    return EXIT_OK if space.complete else EXIT_TRUNCATED


def cmd_compare(rc: RunConfig) -> int:
    if len(rc.models) < 2:
        raise UsageError("compare needs at least two models (--models a,b)")
    cfgs = _compile(rc.program)
    rules = load_rules(rc.rules)
    report = compare_semantics(cfgs, rc.models, rules, rc.limits, program=rc.program, workers=rc.workers)
    _emit(dumps(report.to_json()) if rc.format == "json" else report.text())
    if report.discrepancies():
        return EXIT_VIOLATION
    return EXIT_TRUNCATED if report.unknown else EXIT_OK


def cmd_trace_check(rc: RunConfig) -> int:
    cfgs = _compile(rc.program)
    results = [trace_check(Engine(cfgs, get_model(m, **rc.model_options)), rc.depth) for m in rc.models]
    if rc.format == "json":
        _emit(dumps({"program": rc.program, "results": [r.to_json() for r in results]}))
    else:
        lines = []
        for r in results:
            state = "ok" if r.ok else "VIOLATION"
            bound = "" if not r.truncated else f" (depth bound {r.depth} reached)"
            lines.append(f"{r.model}: {state} product_states={r.product_states}{bound}")
            for v, trace in r.violations:
                lines.append(f"  supplier h{v.supplier} block {v.block} seq {v.seq}: {v.reason}")
                lines.extend(f"    {step}" for step in trace)
        _emit("\n".join(lines))
    return EXIT_OK if all(r.ok for r in results) else EXIT_VIOLATION


def cmd_compile(program: str, fmt: str) -> int:
    cfgs = _compile(program)
    problems = lint(cfgs)
    methods = cfgs.user_methods()
    if fmt == "json":
        out = {
            "entry": list(cfgs.entry),
            "methods": [
                {
                    "name": f"{m.cls}.{m.method}",
                    "states": m.n_states,
                    "initial": m.initial,
                    "final": m.final,
                    "edges": [[e.src, str(e.action), e.dst] for e in m.edges],
                }
                for m in methods
            ],
            "lint": problems,
        }
        _emit(json.dumps(out, indent=2, sort_keys=True))
    else:
        lines = []
        for m in methods:
            lines.append(f"{m.cls}.{m.method}: {m.n_states} states, initial {m.initial}, final {m.final}")
            lines.extend(f"  {e.src} -> {e.dst}: {e.action}" for e in m.edges)
        lines.extend(f"lint: {p}" for p in problems)
        _emit("\n".join(lines))
    return EXIT_COMPILE if problems else EXIT_OK


# ------------------------------------------------------------------ parsing


def _models(text: str) -> list[str]:
    return [m.strip() for m in text.split(",") if m.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scoopw", description="Compare SCOOP execution models by state-space exploration.")
    p.add_argument("--list-benchmarks", action="store_true", help="print the embedded benchmark ids and exit")
    sub = p.add_subparsers(dest="command")

    def common(sp, multi: bool):
        if multi:
            sp.add_argument("--models", "--model", dest="models", default="rq,qoq,dscoop", help="comma-separated model ids")
        else:
            sp.add_argument("--model", "--models", dest="models", default="qoq", help="model id")
        sp.add_argument("--rules", help="rule file (JSON) or builtin list, e.g. deadlock,mutex:eat")
        sp.add_argument("--max-states", type=int)
        sp.add_argument("--depth", type=int, help="depth bound")
        sp.add_argument("--time-budget", type=float, help="seconds")
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--format", choices=("text", "json", "dot"), default="text")
        sp.add_argument("--fault-reorder", action="store_true", help="test hook: serve requests out of order")
        sp.add_argument("--prelock-order", choices=("ascending", "descending", "textual"), help="test hook for dscoop")
        sp.add_argument("program", help="source file or bench:<id>")

    common(sub.add_parser("explore", help="explore the state space under one model"), multi=False)
    common(sub.add_parser("compare", help="explore under several models and compare verdicts"), multi=True)
    common(sub.add_parser("trace-check", help="check the request order guarantee over all traces"), multi=True)
    c = sub.add_parser("compile", help="compile and print control-flow graphs")
    c.add_argument("--format", choices=("text", "json"), default="text")
    c.add_argument("program")
    sub.add_parser("list-benchmarks", help="print the embedded benchmark ids")
    return p


def _run_config(ns: argparse.Namespace) -> RunConfig:
    models = _models(ns.models)
    if ns.command == "explore" and len(models) != 1:
        raise UsageError("explore takes exactly one model")
    options = {}
    if ns.fault_reorder:
        options["fault_reorder"] = True
    if ns.prelock_order:
        if any(m != "dscoop" for m in models):
            raise UsageError("--prelock-order applies to the dscoop model only")
        options["prelock_order"] = ns.prelock_order
    if ns.format == "dot" and ns.command != "explore":
        raise UsageError("dot output is only available for explore")
    limits = ExploreLimits(ns.max_states, ns.depth if ns.command != "trace-check" else None, ns.time_budget)
    return RunConfig(
        models=models,
        program=ns.program,
        limits=limits,
        rules=ns.rules,
        format=ns.format,
        workers=ns.workers,
        depth=ns.depth if ns.depth is not None else 500,
        model_options=options,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        if ns.list_benchmarks or ns.command == "list-benchmarks":
            _emit("\n".join(list_benchmarks()))
            return EXIT_OK
        if ns.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_COMPILE
        if ns.command == "compile":
            return cmd_compile(ns.program, ns.format)
        rc = _run_config(ns)
        return {"explore": cmd_explore, "compare": cmd_compare, "trace-check": cmd_trace_check}[ns.command](rc)
    except UsageError as e:
        print(f"scoopw: {e}", file=sys.stderr)
        return EXIT_COMPILE
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_COMPILE
    except CompileError as e:
        print(f"compile error:\n{e}", file=sys.stderr)
        return EXIT_COMPILE


if __name__ == "__main__":
    sys.exit(main())
