import json
import os

import numpy as np
import pytest

from fracburgers import cli, config, runner
from fracburgers.solver import NumericalAbort

LINEAR = """
name = tiny-linear
alpha = 1.5
d = 1
q = 0.5
b = 0
grid.L = 40
grid.n = 1024
dt = 0.01
t_end = 1
save_times = [0.001, 0.003, 0.01, 0.03, 0.1, 1]
checks = ["two-sided", "small-time"]
"""


@pytest.fixture
def cfg_file(tmp_path):
    def write(text, name="s.cfg"):
        p = tmp_path / name
        p.write_text(text)
        return p
    return write


def test_kernel_subcommand(capsys, tmp_path):
    assert cli.main(["kernel", "--alpha", "1.5", "--d", "1", "--n-points", "5"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "# fracburgers-csv v1"
    assert lines[1] == "alpha,d,t,r,p,dp_dr"
    assert len(lines) == 7
    out = tmp_path / "k.csv"
    assert cli.main(["kernel", "--alpha", "2", "--t", "1", "2", "--n-points", "3", "--out", str(out)]) == 0
    cols, data = runner.read_csv(out)
    assert data.shape == (6, 6)
    np.testing.assert_allclose(data[:3, 4], (4 * np.pi) ** -0.5 * np.exp(-data[:3, 3] ** 2 / 4), rtol=1e-12)


def test_kernel_subcommand_domain_error(capsys):
    assert cli.main(["kernel", "--alpha", "2.5"]) == 2


def test_config_round_trip():
    text = config.preset_text("critical-1d")
    values = config.parse_text(text)
    again = config.parse_text(config.dump_text(values))
    assert again == values
    scn = config.build(values)
    assert config.parse_text(scn.text()) == values


def test_all_presets_build():
    names = config.preset_names()
    assert {"example", "critical-1d", "linear-1d", "large-time-1d"} <= set(names)
    for name in names:
        config.preset(name)


def test_parse_errors_name_lines(cfg_file, capsys):
    p = cfg_file(LINEAR + "bogus = 3\nalpha = 1.2\nnot a pair\n")
    assert cli.main(["run", "--config", str(p), "--out", str(p.parent / "o")]) == 2
    err = capsys.readouterr().err
    assert "unknown key 'bogus'" in err and "duplicate key 'alpha'" in err and "expected 'key = value'" in err
    assert ":14:" in err


def test_subcritical_q_is_rejected(cfg_file, capsys):
    p = cfg_file(LINEAR.replace("q = 0.5", "q = 0.3"))
    assert cli.main(["run", "--config", str(p), "--out", str(p.parent / "o")]) == 2
    assert "critical exponent" in capsys.readouterr().err


def test_unknown_check_and_preset(cfg_file, capsys):
    p = cfg_file(LINEAR.replace('"small-time"]', '"small-tim"]'))
    assert cli.main(["run", "--config", str(p)]) == 2
    assert cli.main(["run", "--scenario", "nope"]) == 2
    err = capsys.readouterr().err
    assert "unknown check 'small-tim'" in err and "unknown scenario" in err


def test_numerical_abort_exit_code(cfg_file, monkeypatch, capsys):
    def boom(cfg, u0=None):
        raise NumericalAbort("synthetic blow-up")
    monkeypatch.setattr(runner, "solve", boom)
    p = cfg_file(LINEAR)
    assert cli.main(["run", "--config", str(p), "--out", str(p.parent / "o")]) == 3
    assert "synthetic blow-up" in capsys.readouterr().err


def test_linear_run_artifacts_and_report(cfg_file, capsys):
    p = cfg_file(LINEAR)
    out = p.parent / "run"
    assert cli.main(["run", "--config", str(p), "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["pass"] and {c["status"] for c in rep["checks"]} == {"trivial"}
    assert rep["config_hash"] == runner.content_hash((out / "scenario.cfg").read_text())
    fields = sorted((out / "fields").glob("field_*.csv"))
    assert len(fields) == 7
    cols, data = runner.read_csv(fields[-1])
    assert cols == ["t", "x", "u"] and data[0, 0] == 1.0
    svgs = sorted((out / "checks").glob("*.svg"))
    assert svgs
    before = {s: s.read_bytes() for s in svgs}
    assert cli.main(["report", str(out)]) == 0
    assert {s: s.read_bytes() for s in svgs} == before
    assert not list(out.rglob(".*"))


def test_report_needs_checks(tmp_path, capsys):
    assert cli.main(["report", str(tmp_path)]) == 2


def test_solve_then_verify(cfg_file, capsys):
    p = cfg_file(LINEAR)
    out = p.parent / "traj"
    assert cli.main(["solve", "--config", str(p), "--out", str(out)]) == 0
    assert not (out / "checks").exists()
    capsys.readouterr()
    assert cli.main(["verify", "--config", str(p), "--out", str(out), "--trajectory", str(out),
                     "--check", "two-sided"]) == 0
    printed = capsys.readouterr().out
    result = json.loads(printed[:printed.rindex("}") + 1])
    assert result["check"] == "two-sided" and result["pass"]
    assert cli.main(["verify", "--config", str(p), "--trajectory", str(p.parent)]) == 2


def test_verify_single_check_on_critical_preset(tmp_path, capsys):
    assert cli.main(["verify", "--scenario", "critical-1d", "--check", "two-sided",
                     "--out", str(tmp_path / "c")]) == 0
    rep = json.loads((tmp_path / "c" / "report.json").read_text())
    assert [c["check"] for c in rep["checks"]] == ["two-sided"]


def test_failing_check_exits_one(cfg_file, capsys):
    # q > q0 decays at slope near -0.3; demanding gamma = 2 must fail
    text = (LINEAR.replace("b = 0", "b = 1").replace("q = 0.5", "q = 1")
            .replace('checks = ["two-sided", "small-time"]',
                     'checks = ["large-time-rate"]\ncheck.large-time-rate.gamma = 2\n'
                     'check.large-time-rate.t_range = [1, 10]')
            .replace("t_end = 1", "t_end = 10")
            .replace("save_times = [0.001, 0.003, 0.01, 0.03, 0.1, 1]", 'save_times = {"geomspace": [1, 10, 5]}'))
    p = cfg_file(text)
    assert cli.main(["run", "--config", str(p), "--out", str(p.parent / "f")]) == 1
    assert "large-time-rate: FAIL" in capsys.readouterr().out


def test_atomic_write(tmp_path):
    target = tmp_path / "a" / "x.txt"
    runner.atomic_write(target, "one\n")
    with pytest.raises(TypeError):
        runner.atomic_write(target, 12345)
    assert target.read_text() == "one\n"
    assert [p.name for p in target.parent.iterdir()] == ["x.txt"]


def test_content_hash_is_git_blob_hash():
    # `printf 'hello\n' | git hash-object --stdin`
    assert runner.content_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a"


def test_threads_flag_sets_env(monkeypatch, capsys):
    monkeypatch.delenv("FRACBURGERS_THREADS", raising=False)
    assert cli.main(["--threads", "2", "kernel", "--alpha", "1.5", "--n-points", "3"]) == 0
    assert os.environ["FRACBURGERS_THREADS"] == "2"
