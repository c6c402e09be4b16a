import json
from pathlib import Path

import pytest

from kfunlab import cli
from kfunlab.experiments import EXPERIMENTS, ExperimentResult, CaseResult


def run_cli(args):
    return cli.main(args)


def test_list_contains_catalog(capsys):
    assert run_cli(["list"]) == 0
    out = capsys.readouterr().out
    for eid in ("ponce-thm12", "gauss-thm13", "jn-thm14", "bbm-thm61",
                "ms-thm62", "mixed-thm6x", "semigroup-cor658", "c_alpha"):
        assert eid in out


def test_unknown_experiment_exits_2(tmp_path, capsys):
    code = run_cli(["run", "--experiment", "nonexistent", "--out", str(tmp_path)])
    assert code == 2
    assert not (tmp_path / "summary.csv").exists()  # rejected before computing


def test_bad_config_file_exits_2(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("this is not a key value line\n")
    code = run_cli(["run", "--experiment", "milman", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 2


def test_run_writes_reports_and_figures(tmp_path, capsys):
    out = tmp_path / "rep"
    code = run_cli(["run", "--experiment", "milman", "--out", str(out)])
    assert code == 0
    assert (out / "summary.csv").exists()
    assert (out / "milman.json").exists()
    assert (out / "milman.png").exists()
    data = json.loads((out / "milman.json").read_text())
    assert data["passed"] is True
    header = (out / "summary.csv").read_text().splitlines()[0]
    assert header == "id,theorem,target,limit,rel_err,rate,verdict"


def test_no_figures_flag(tmp_path):
    out = tmp_path / "rep"
    assert run_cli(["run", "--experiment", "milman", "--out", str(out), "--no-figures"]) == 0
    assert not list(out.glob("*.png"))


def test_csv_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run_cli(["run", "--experiment", "c_alpha", "--experiment", "milman",
                        "--out", str(out), "--no-figures", "--seed", "3"]) == 0
    assert (a / "summary.csv").read_bytes() == (b / "summary.csv").read_bytes()


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("resolution = 256\nseed = 5\n")
    out = tmp_path / "rep"
    assert run_cli(["run", "--experiment", "milman", "--config", str(cfg),
                    "--out", str(out), "--no-figures"]) == 0


def test_suite_selection(tmp_path):
    out = tmp_path / "rep"
    assert run_cli(["run", "--suite", "interp", "--out", str(out), "--no-figures"]) == 0
    assert (out / "milman.json").exists()


def test_failing_experiment_exits_1(tmp_path, monkeypatch, capsys):
    from kfunlab.experiments import ExperimentDef

    def failing(config):
        res = ExperimentResult("doomed", "synthetic failure", "always fails")
        res.cases.append(CaseResult("flop", 1.0, 2.0, 1.0, None, False, 0.01))
        return res

    monkeypatch.setitem(EXPERIMENTS, "doomed",
                        ExperimentDef("doomed", "synthetic failure", failing, ()))
    out = tmp_path / "rep"
    code = run_cli(["run", "--experiment", "doomed", "--out", str(out), "--no-figures"])
    assert code == 1
    err = capsys.readouterr().err
    assert "doomed" in err
    assert (out / "summary.csv").read_text().splitlines()[1].endswith("FAIL")


def test_jobs_parallel_matches_serial(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli(["run", "--experiment", "c_alpha", "--experiment", "milman",
                    "--out", str(a), "--no-figures"]) == 0
    assert run_cli(["run", "--experiment", "c_alpha", "--experiment", "milman",
                    "--jobs", "2", "--out", str(b), "--no-figures"]) == 0
    assert (a / "summary.csv").read_bytes() == (b / "summary.csv").read_bytes()
