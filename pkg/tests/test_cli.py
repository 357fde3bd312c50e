import json
from importlib import resources

import jsonschema
import pytest

from dlctx.cli import EXIT_DEADLOCK, EXIT_ERROR, EXIT_OK, main

from helpers import EMPTY


def run_cli(capsys, *args):
    code = main(list(args))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture()
def mod_path(corpus_dir):
    return str(corpus_dir / "db_workers_mod.act")


@pytest.fixture()
def orig_path(corpus_dir):
    return str(corpus_dir / "db_workers_orig.act")


@pytest.fixture()
def empty_path(tmp_path):
    path = tmp_path / "empty.act"
    path.write_text(EMPTY)
    return str(path)


def test_initial_tasks_three_lines(capsys, mod_path):
    code, out, _ = run_cli(capsys, mod_path, "--initial-tasks", "--no-timing")
    assert code == EXIT_OK
    task_lines = [l for l in out.splitlines() if "min=" in l]
    assert task_lines == [
        "DB.makesConnection min=1 max=1",
        "DB.register min=1 max=1",
        "Worker.work min=1 max=1",
    ]


def test_contexts_text_notation(capsys, mod_path):
    code, out, _ = run_cli(capsys, mod_path, "--contexts", "--no-timing")
    assert code == EXIT_OK
    ctx_lines = [l for l in out.splitlines() if l.startswith("{")]
    assert ctx_lines == [
        "{[register,makesConnection]_db1, [work]_w1}",
        "{[register]_db1, [makesConnection]_db2, [work]_w1}",
    ]


def test_empty_program_zero_cycles(capsys, empty_path):
    code, out, _ = run_cli(capsys, empty_path, "--cycles", "--no-timing")
    assert code == EXIT_OK
    assert "0 cycles" in out


def test_cycles_rendering(capsys, mod_path):
    code, out, _ = run_cli(capsys, mod_path, "--cycles", "--no-timing")
    assert code == EXIT_OK
    assert "1 cycles" in out
    assert (
        "obj@pp:newdb -[pp:register:DB.register]-> Worker.ping "
        "-[pp:ping:Worker.ping]-> obj@pp:neww -[pp:work:Worker.work]-> "
        "DB.getData -[pp:getD:DB.getData]-> obj@pp:newdb" in out
    )


def test_explore_exit_code_ten(capsys, mod_path):
    code, out, _ = run_cli(capsys, mod_path, "--explore", "--no-timing")
    assert code == EXIT_DEADLOCK
    assert "deadlock-found" in out


def test_explore_clean_exit_zero(capsys, tmp_path):
    src = tmp_path / "clean.act"
    src.write_text("class C { Unit m() { skip; } }\nmain { C c = new C(); }\n")
    code, out, _ = run_cli(capsys, str(src), "--explore", "--no-timing")
    assert code == EXIT_OK
    assert "no deadlock found" in out


def test_parse_error_exit_one(capsys, tmp_path):
    bad = tmp_path / "bad.act"
    bad.write_text("main { x = ; }")
    code, _, err = run_cli(capsys, str(bad), "--cycles")
    assert code == EXIT_ERROR
    assert "error:" in err


def test_missing_file_exit_one(capsys):
    code, _, err = run_cli(capsys, "/nonexistent/never.act", "--cycles")
    assert code == EXIT_ERROR
    assert "error:" in err


def test_no_stage_selected_is_usage_error(capsys, mod_path):
    code, _, err = run_cli(capsys, mod_path)
    assert code == EXIT_ERROR
    assert "at least one stage" in err


def test_unknown_card_task_rejected(capsys, mod_path):
    code, _, err = run_cli(
        capsys, mod_path, "--initial-tasks", "--card", "DB.missing=1:2"
    )
    assert code == EXIT_ERROR
    assert "unknown task" in err


def test_malformed_card_rejected(capsys, mod_path):
    code, _, err = run_cli(capsys, mod_path, "--initial-tasks", "--card", "DB.register")
    assert code == EXIT_ERROR
    assert "malformed" in err


def test_card_override_applied(capsys, mod_path):
    code, out, _ = run_cli(
        capsys, mod_path, "--initial-tasks", "--card", "Worker.work=1:2", "--no-timing"
    )
    assert code == EXIT_OK
    assert "Worker.work min=1 max=2" in out


def test_dump_facts_tsv(capsys, mod_path):
    code, out, _ = run_cli(capsys, mod_path, "--dump-facts", "--no-timing")
    assert code == EXIT_OK
    lines = out.splitlines()
    header = lines[lines.index("== facts ==") + 1]
    assert header == "task\tpp\tfields\tawait_before"
    assert "DB.register\tpp:register\tconnected\ttrue" in lines
    assert "Worker.work\tpp:work\tdb\tfalse" in lines


def test_trace_worklist_output(capsys, mod_path):
    code, out, _ = run_cli(capsys, mod_path, "--trace-worklist", "--no-timing")
    assert code == EXIT_OK
    assert "init events:" in out
    assert "(DB.register,pp:register)" in out
    assert "init answers:" in out


def test_json_output_validates_against_shipped_schema(capsys, mod_path):
    code, out, _ = run_cli(
        capsys, mod_path, "--cycles", "--initial-tasks", "--contexts", "--explore",
        "--dump-facts", "--trace-worklist", "--format", "json",
    )
    assert code == EXIT_DEADLOCK
    report = json.loads(out)
    schema = json.loads(
        resources.files("dlctx").joinpath("schemas/report.schema.json").read_text()
    )
    jsonschema.validate(report, schema)


def test_json_text_parity(capsys, mod_path):
    _, text_out, _ = run_cli(
        capsys, mod_path, "--cycles", "--initial-tasks", "--contexts", "--no-timing"
    )
    _, json_out, _ = run_cli(
        capsys, mod_path, "--cycles", "--initial-tasks", "--contexts", "--no-timing",
        "--format", "json",
    )
    report = json.loads(json_out)
    # every context and cycle line shown in text exists in the JSON document
    for line in text_out.splitlines():
        if line.startswith("{["):
            assert any(
                ctx["rendered"] == line for ctx in report["contexts"]["union"]
            )
        if line.startswith("obj@"):
            assert line in report["cycles"]["rendered"]
    for tc in report["initial_tasks"]["union"]:
        assert f"{tc['task']} min={tc['min']} max={tc['max']}" in text_out


def test_deterministic_byte_identical(capsys, mod_path):
    args = (
        mod_path, "--cycles", "--initial-tasks", "--contexts", "--explore",
        "--trace-worklist", "--dump-facts", "--no-timing", "--format", "json",
    )
    _, first, _ = run_cli(capsys, *args)
    _, second, _ = run_cli(capsys, *args)
    assert first == second


def test_timing_section_present_by_default(capsys, mod_path):
    code, out, _ = run_cli(capsys, mod_path, "--cycles")
    assert code == EXIT_OK
    assert "== timing ==" in out


def test_expand_wiring_flag(capsys, mod_path):
    _, out_plain, _ = run_cli(capsys, mod_path, "--contexts", "--no-timing")
    _, out_expanded, _ = run_cli(
        capsys, mod_path, "--contexts", "--expand-wiring", "--no-timing"
    )
    plain = [l for l in out_plain.splitlines() if l.startswith("{")]
    expanded = [l for l in out_expanded.splitlines() if l.startswith("{")]
    assert len(expanded) >= len(plain)


def test_explore_limits_flags(capsys, orig_path):
    code, out, _ = run_cli(
        capsys, orig_path, "--explore", "--max-states", "5", "--no-timing"
    )
    assert code in (EXIT_OK, EXIT_DEADLOCK)
    assert "bound-hit" in out or "deadlock-found" in out


def test_installed_script_runs(mod_path):
    import subprocess

    proc = subprocess.run(
        ["dlctx", mod_path, "--initial-tasks", "--no-timing"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "DB.register min=1 max=1" in proc.stdout
