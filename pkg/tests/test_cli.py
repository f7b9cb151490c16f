import json
import subprocess
import sys

import numpy as np
import pytest

from onewaydj import cli, verify
from onewaydj.cli import RunConfig, emit_report, run_command
from onewaydj.report import read_density_grids


def _run(**kw):
    return run_command(RunConfig(**kw)).to_dict()


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(mode="plot")
    with pytest.raises(ValueError):
        RunConfig(mode="dj-projective", oracle="f9")
    with pytest.raises(ValueError):
        RunConfig(mode="dj-projective", branch="2,0")
    with pytest.raises(ValueError):
        RunConfig(mode="dj-ensemble", epsilon=0.0)
    with pytest.raises(ValueError):
        RunConfig(mode="tomography", noise=-0.1)


def test_dj_ensemble_f1():
    rep = _run(mode="dj-ensemble", oracle="f1", epsilon=1.0)
    (row,) = rep["results"]
    assert row["verdict"] == "constant"
    assert f"{row['sx4']:+.3f}" == "+1.000"
    assert row["control_polarity"] == [0, 1]
    assert row["branch_average_deviation"] < 1e-9


def test_dj_ensemble_partial_polarization():
    rep = _run(mode="dj-ensemble", oracle="f4", epsilon=0.25)
    assert rep["results"][0]["sx4"] == pytest.approx(-0.25)
    assert rep["results"][0]["branch_average_deviation"] < 1e-9


def test_dj_projective_all_branches():
    rep = _run(mode="dj-projective", branch="all")
    assert len(rep["results"]) == 16
    assert rep["metrics"] == {"cases": 16, "constant": 8, "balanced": 8}
    assert {(r["s1"], r["s2"]) for r in rep["results"]} == {(0, 0), (0, 1), (1, 0), (1, 1)}


def test_dj_projective_forced_and_sampled():
    rep = _run(mode="dj-projective", oracle="f3", branch="1,0")
    assert [(r["s1"], r["s2"], r["verdict"]) for r in rep["results"]] == [(1, 0, "balanced")]
    a = _run(mode="dj-projective", seed=5)
    b = _run(mode="dj-projective", seed=5)
    assert a == b and len(a["results"]) == 4


def test_metrics_on_ideal_ghz():
    m = _run(mode="metrics")["metrics"]
    assert m["correlation_c"] == pytest.approx(1.0)
    assert m["fidelity_f"] == pytest.approx(1.0)
    assert m["witness"] == pytest.approx(-0.5)


def test_metrics_from_dumped_grids(tmp_path):
    emit_report(run_command(RunConfig(mode="tomography", time_budget=0.085)), tmp_path)
    rho = read_density_grids(tmp_path / "tomography")
    assert rho.shape == (16, 16)
    rep = _run(mode="metrics", rho=str(tmp_path / "tomography"))
    assert 0.70 < rep["metrics"]["correlation_c"] < 0.90


def test_report_echoes_config():
    rep = _run(mode="tomography", seed=42, epsilon=0.6, noise=0.02, time_budget=0.05)
    cfg = rep["config"]
    assert cfg["seed"] == 42 and cfg["epsilon"] == 0.6 and cfg["noise"] == 0.02
    assert cfg["time_budget"] == 0.05 and cfg["spec"] == "builtin:crotonic_acid"
    assert cfg["samples"] == 16384 and cfg["duration"] == 4.0


def test_emit_is_byte_identical(tmp_path):
    cfg = RunConfig(mode="tomography", noise=0.01, seed=11)
    a = emit_report(run_command(cfg), tmp_path / "a")
    b = emit_report(run_command(cfg), tmp_path / "b")
    assert [p.name for p in a] == [p.name for p in b]
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()


def test_different_seed_changes_noisy_output():
    a = run_command(RunConfig(mode="tomography", noise=0.01, seed=1)).artifacts
    b = run_command(RunConfig(mode="tomography", noise=0.01, seed=2)).artifacts
    assert a["tomography_real.txt"] != b["tomography_real.txt"]


def test_tomography_grid_corners(tmp_path):
    emit_report(run_command(RunConfig(mode="tomography")), tmp_path)
    real = np.loadtxt(tmp_path / "tomography_real.txt")
    top4 = sorted(np.argsort(real.ravel())[-4:])
    assert [divmod(i, 16) for i in top4] == [(6, 6), (6, 9), (9, 6), (9, 9)]
    assert np.allclose(real.ravel()[top4], 0.5, atol=1e-10)
    assert np.allclose(np.loadtxt(tmp_path / "tomography_imag.txt"), 0, atol=1e-10)


def test_spectrum_files(tmp_path):
    written = emit_report(run_command(RunConfig(mode="spectrum", oracle="f2", samples=1024, duration=1.0)), tmp_path)
    names = {p.name for p in written}
    assert {"spectrum_f2.txt", "spectrum_f2.txt.json", "report.json"} <= names
    cols = np.loadtxt(tmp_path / "spectrum_f2.txt")
    assert cols.shape == (1024, 2)
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["results"][0]["sign"] == 1
    assert "spectrum_f2.txt" in rep["files"]


def test_missing_relaxation_warns_in_report(tmp_path):
    p = tmp_path / "m.spec"
    p.write_text("[shifts]\nA 100\nB 200\nC 300\nD 400\n[jcouplings]\nB 10\nC 2 20\nD 3 4 40\n")
    rep = _run(mode="dj-ensemble", oracle="f1", spec=str(p))
    assert any("relaxation" in w for w in rep["warnings"])
    assert rep["config"]["spec"] == str(p)


def test_report_json_key_order_is_stable():
    text = run_command(RunConfig(mode="metrics")).render()
    d = json.loads(text)
    assert list(d) == sorted(d)
    assert text == json.dumps(d, indent=2, sort_keys=True) + "\n"


def test_main_writes_and_exits_zero(tmp_path, capsys):
    code = cli.main(["--mode", "dj-projective", "--branch", "all", "--out", str(tmp_path)])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert len(out["results"]) == 16
    assert (tmp_path / "report.json").exists()


def test_main_config_errors(capsys):
    assert cli.main(["--mode", "metrics", "--spec", "/does/not/exist"]) == 2
    assert "error" in capsys.readouterr().err
    assert cli.main(["--mode", "dj-projective", "--branch", "x"]) == 2
    with pytest.raises(SystemExit):
        cli.main(["--mode", "nope"])


def test_time_budget_flag_forms():
    p = cli.build_parser()
    assert p.parse_args(["--mode", "tomography"]).time_budget is None
    assert p.parse_args(["--mode", "tomography", "--time-budget"]).time_budget == pytest.approx(0.085)
    assert p.parse_args(["--mode", "tomography", "--time-budget", "0.02"]).time_budget == 0.02


def test_help_documents_defaults():
    text = cli.build_parser().format_help()
    for flag in ("--mode", "--oracle", "--branch", "--seed", "--epsilon", "--noise", "--spec", "--out", "--time-budget"):
        assert flag in text
    assert "default: 20080101" in text


def test_verify_failure_sets_exit_class(monkeypatch):
    monkeypatch.setattr(verify, "_REGISTRY", [("mbqc.broken", lambda: (False, "forced failure"))])
    rep = run_command(RunConfig(mode="verify"))
    assert rep.exit_code == verify.EXIT_CODES["mbqc"]
    assert rep.to_dict()["results"] == [{"name": "mbqc.broken", "passed": False, "detail": "forced failure"}]


def test_verify_crash_counts_as_failure(monkeypatch):
    def boom():
        raise RuntimeError("bad")

    monkeypatch.setattr(verify, "_REGISTRY", [("nmr.boom", boom)])
    results = verify.run_all()
    assert not results[0].passed and "RuntimeError" in results[0].detail
    assert verify.exit_code(results) == 13


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "onewaydj", "--mode", "graph-state", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["results"][0]["fidelity_to_expected"] == pytest.approx(1.0)
    assert np.loadtxt(tmp_path / "graph_state_real.txt").shape == (16, 16)
