from __future__ import annotations

import json

import pytest

from scoopw.benchmarks import list_benchmarks
from scoopw.cli import EXIT_COMPILE, EXIT_OK, EXIT_TRUNCATED, EXIT_VIOLATION, RunConfig, UsageError, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_lazy_deadlock_under_rq_exits_two(capsys):
    code, out, _ = run(capsys, "explore", "--model", "rq", "--rules", "deadlock", "bench:dp_lazy_2")
    assert code == EXIT_VIOLATION
    assert "deadlock: yes" in out and "Deadlock witness=" in out


def test_lazy_under_qoq_exits_zero(capsys):
    code, out, _ = run(capsys, "explore", "--model", "qoq", "--rules", "deadlock", "bench:dp_lazy_2")
    assert code == EXIT_OK and "deadlock: no" in out


def test_syntax_error_exits_one(capsys, tmp_path):
    bad = tmp_path / "bad.scoop"
    bad.write_text("class APPLICATION make do x := end end")
    code, _, err = run(capsys, "explore", "--model", "qoq", str(bad))
    assert code == EXIT_COMPILE and "parse error" in err


def test_unknown_model_is_rejected_before_work(capsys):
    code, _, err = run(capsys, "explore", "--model", "scoop2", "bench:colours")
    assert code == EXIT_COMPILE and "scoop2" in err
    with pytest.raises(UsageError):
        RunConfig(models=["rq", "nope"], program="bench:colours")


def test_unknown_benchmark_exits_one(capsys):
    code, _, _ = run(capsys, "explore", "bench:no_such_thing")
    assert code == EXIT_COMPILE


def test_compare_lazy_reports_discrepancy(capsys):
    code, out, _ = run(capsys, "compare", "--models", "rq,qoq", "--rules", "deadlock", "bench:dp_lazy_2")
    assert code == EXIT_VIOLATION and "deadlock: rq=yes qoq=no" in out


def test_compare_colours_is_consistent(capsys):
    code, _, _ = run(capsys, "compare", "--models", "qoq,dscoop", "--rules", "deadlock", "bench:colours")
    assert code == EXIT_OK


def test_compare_eager_mutex_discrepancy(capsys):
    code, out, _ = run(capsys, "compare", "--models", "rq,qoq,dscoop", "--rules", "deadlock,mutex:eat", "--format", "json",
                       "bench:dp_eager_2")
    assert code == EXIT_VIOLATION
    data = json.loads(out)
    assert data["verdicts"]["mutex:eat"] == {"rq": "no", "qoq": "yes", "dscoop": "yes"}
    assert data["verdicts"]["deadlock"] == {"rq": "no", "qoq": "no", "dscoop": "no"}


def test_compare_needs_two_models(capsys):
    code, _, _ = run(capsys, "compare", "--models", "rq", "bench:colours")
    assert code == EXIT_COMPILE


@pytest.mark.parametrize("model", ["qoq", "rq", "dscoop"])
def test_trace_check_colours(capsys, model):
    code, out, _ = run(capsys, "trace-check", "--model", model, "bench:colours", "--depth", "200")
    assert code == EXIT_OK and f"{model}: ok" in out


def test_injected_fault_exits_two(capsys):
    code, out, _ = run(capsys, "trace-check", "--model", "qoq", "--fault-reorder", "bench:stack", "--depth", "500")
    assert code == EXIT_VIOLATION and "VIOLATION" in out


def test_truncated_run_exits_three(capsys):
    code, out, _ = run(capsys, "explore", "--model", "qoq", "--max-states", "10", "bench:colours")
    assert code == EXIT_TRUNCATED and "truncated: max_states" in out


def test_list_benchmarks_all_compile_clean(capsys):
    code, out, _ = run(capsys, "list-benchmarks")
    assert code == EXIT_OK and out.split() == list_benchmarks()
    code2, out2, _ = run(capsys, "--list-benchmarks")
    assert code2 == EXIT_OK and out2 == out
    for bench in out.split():
        code, text, _ = run(capsys, "compile", f"bench:{bench}")
        assert code == EXIT_OK and "lint:" not in text


def test_compile_json(capsys):
    code, out, _ = run(capsys, "compile", "--format", "json", "bench:colours")
    data = json.loads(out)
    assert code == EXIT_OK and data["lint"] == [] and data["entry"] == ["APPLICATION", "make"]
    assert any(m["name"] == "APPLICATION.make" for m in data["methods"])


def test_json_report_is_byte_deterministic(capsys):
    def once():
        code, out, _ = run(capsys, "explore", "--model", "dscoop", "--rules", "deadlock,stuck", "--format", "json",
                           "bench:stack")
        data = json.loads(out)
        data["stats"].pop("wall_time")
        return code, json.dumps(data, sort_keys=True)

    a, b = once(), once()
    assert a == b and a[0] == EXIT_OK
    data = json.loads(a[1])
    assert {"program", "model", "stats", "verdicts", "errors", "complete", "terminal_sccs"} <= set(data)


def test_dot_output(capsys, tmp_path):
    src = tmp_path / "tiny.scoop"
    src.write_text("class APPLICATION make local x: INTEGER do x := 1 end end")
    code, out, _ = run(capsys, "explore", "--format", "dot", str(src))
    assert code == EXIT_OK and out.startswith("digraph")


def test_prelock_order_only_for_dscoop(capsys):
    code, _, _ = run(capsys, "explore", "--model", "qoq", "--prelock-order", "descending", "bench:bank_transfer")
    assert code == EXIT_COMPILE
