from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scoopw.benchmarks import benchmark_source, list_benchmarks
from scoopw.frontend import CompileError, ParseError, check, compile_program, compile_source, lint, parse
from scoopw.frontend.ast import BinOp, BoolLit, Call, CurrentRef, IntLit, Name, UnOp, VoidLit
from scoopw.frontend.cfg import AssignLocal, CommandCall, EnterBlock, ExitBlock, Guard, QueryCall, Return
from scoopw.frontend.parser import parse_expr
from scoopw.frontend.printer import format_expr, format_program

RESERVED = {
    "class", "end", "do", "if", "then", "else", "elseif", "from", "until", "loop", "separate",
    "and", "or", "not", "create", "local", "require", "ensure", "feature", "inherit", "Result",
    "Current", "Void", "True", "False", "INTEGER", "BOOLEAN",
}

FORK_APP = """
class FORK
  make do end
  use do end
end
class APPLICATION
  f: separate FORK
  make do create f.make  %s end
  %s
end
"""


def _diags(source: str) -> list[str]:
    return [d.message for d in check(parse(source))]


def test_minimal_program_parses_with_entry():
    p = parse("class APPLICATION make do end")
    assert len(p.classes) == 1
    assert p.entry == ("APPLICATION", "make")


def test_philosopher_methods_have_expected_formals():
    p = parse(benchmark_source("dp_lazy_2"))
    phil = p.cls("PHILOSOPHER")
    eat = phil.method("eat")
    assert [t.is_separate for _, t in eat.formals] == [True, True]
    assert phil.method("bad_eat").formals == ()
    left_then_right = phil.method("pickup_left_then_right")
    assert len(left_then_right.formals) == 1 and left_then_right.formals[0][1].is_separate


def test_dangling_assignment_is_a_syntax_error():
    with pytest.raises(ParseError) as err:
        parse("class C m do x := end")
    assert (err.value.line, err.value.col) == (1, 19)


def test_inheritance_is_rejected():
    with pytest.raises(ParseError):
        parse("class A inherit B end")


@pytest.mark.parametrize("bench", list_benchmarks())
def test_every_benchmark_checks_clean_and_lints(bench):
    program = parse(benchmark_source(bench))
    assert check(program) == []
    assert lint(compile_program(program, benchmark_source(bench))) == []


def test_uncontrolled_separate_call_is_diagnosed():
    assert "uncontrolled separate call" in _diags(FORK_APP % ("f.use", ""))


def test_wait_condition_must_be_boolean():
    src = FORK_APP % ("", "w (a: separate FORK) require 1 + 2 do a.use end")
    assert "wait condition must be BOOLEAN" in _diags(src)


def test_postconditions_are_ignored_with_a_warning():
    p = parse("class APPLICATION make do end ensure_me do end end".replace("ensure_me do end", "g: INTEGER do Result := 1 ensure Result = 1 end"))
    assert any("postcondition" in w for w in p.warnings)


def test_eat_lowers_to_five_sequential_edges():
    cfg = compile_source(benchmark_source("dp_eager_2")).method("PHILOSOPHER", "eat")
    kinds = [type(e.action) for e in cfg.edges]
    assert kinds == [EnterBlock, CommandCall, CommandCall, ExitBlock, Return]
    assert [e.action.method for e in cfg.edges if isinstance(e.action, CommandCall)] == ["use", "use"]
    assert cfg.edges[0].action.names == ("left", "right")
    # a straight chain
    assert [(e.src, e.dst) for e in cfg.edges] == [(i, i + 1) for i in range(5)]


def test_empty_block_body_lowers_to_enter_exit_return():
    cfg = compile_source(benchmark_source("dp_eager_nocmd_2")).method("PHILOSOPHER", "eat_no_statements")
    assert [type(e.action) for e in cfg.edges] == [EnterBlock, ExitBlock, Return]


def test_straight_line_assignments():
    cfg = compile_source("class APPLICATION make local x: INTEGER do x := 1  x := x + 1 end end").method("APPLICATION", "make")
    assigns = [e for e in cfg.edges if isinstance(e.action, AssignLocal)]
    assert len(assigns) == 2
    # two assignment states plus the state that has returned
    assert cfg.n_states == 4 and isinstance(cfg.edges[-1].action, Return)


def test_wait_condition_retries_through_exit_block():
    cfg = compile_source(benchmark_source("producer_consumer_5")).method("CONSUMER", "remove_from_buffer")
    enter = [e for e in cfg.edges if isinstance(e.action, EnterBlock)]
    retries = [e for e in cfg.edges if isinstance(e.action, ExitBlock) and e.action.retry]
    assert len(enter) == 1 and len(retries) == 1
    assert retries[0].dst == enter[0].src
    assert any(isinstance(e.action, QueryCall) and e.action.method == "is_empty" for e in cfg.edges)
    assert sum(isinstance(e.action, Guard) for e in cfg.edges) == 2


def test_controlled_methods_have_one_block_pair():
    for bench in ("dp_lazy_2", "producer_consumer_5", "bank_transfer", "colours"):
        for cfg in compile_source(benchmark_source(bench)).user_methods():
            if not cfg.controlled_formals:
                continue
            enters = {e.action.block_id for e in cfg.edges if isinstance(e.action, EnterBlock) and e.src == cfg.initial}
            assert len(enters) == 1, cfg.name


def test_compile_is_deterministic():
    src = benchmark_source("barbershop")
    a, b = compile_source(src), compile_source(src)
    assert {k: c.edges for k, c in a.methods.items()} == {k: c.edges for k, c in b.methods.items()}


def test_compile_source_reports_diagnostics():
    with pytest.raises(CompileError, match="uncontrolled"):
        compile_source(FORK_APP % ("f.use", ""))


@pytest.mark.parametrize("bench", ["colours", "stack", "dp_lazy_2", "producer_consumer_5", "barbershop", "dining_savages"])
def test_print_parse_round_trip_on_corpus(bench):
    p = parse(benchmark_source(bench))
    assert parse(format_program(p)) == p


# -- generated expressions

names = st.text(alphabet="abcdefgxyz_", min_size=1, max_size=6).filter(lambda s: s not in RESERVED and not s.startswith("_"))
leaves = st.one_of(
    st.integers(min_value=0, max_value=10**6).map(IntLit),
    st.booleans().map(BoolLit),
    st.just(VoidLit()),
    st.just(CurrentRef()),
    names.map(Name),
)


def _extend(children):
    targets = st.one_of(names.map(Name), st.just(CurrentRef()))
    return st.one_of(
        st.tuples(st.sampled_from(["+", "-", "*", "=", "/=", "<", "<=", ">", ">=", "and", "or"]), children, children).map(
            lambda t: BinOp(*t)
        ),
        st.tuples(st.sampled_from(["not", "-"]), children).map(lambda t: UnOp(*t)),
        st.tuples(targets, names, st.lists(children, max_size=2)).map(
            lambda t: Call(t[0], t[1], tuple(t[2]), bool(t[2]))
        ),
        st.tuples(names, st.lists(children, min_size=1, max_size=2)).map(lambda t: Call(None, t[0], tuple(t[1]), True)),
    )


exprs = st.recursive(leaves, _extend, max_leaves=12)


@settings(max_examples=300, deadline=None)
@given(exprs)
def test_expression_print_parse_round_trip(e):
    assert parse_expr(format_expr(e)) == e


@settings(max_examples=100, deadline=None)
@given(exprs)
def test_program_with_generated_assignment_round_trips(e):
    src = f"class APPLICATION\n  make\n    do\n      x := {format_expr(e)}\n    end\nend\n"
    p = parse(src)
    assert parse(format_program(p)) == p
