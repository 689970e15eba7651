import json

import pytest

from fracgelfand.cli import main


def run(tmp_path, *argv):
    return main(["--outdir", str(tmp_path), *argv])


def test_constants_supercritical(tmp_path, capsys):
    assert run(tmp_path, "constants", "--n", "3", "--s", "0.5") == 0
    out = capsys.readouterr().out
    assert "BoundedByInequality" in out
    csv = (tmp_path / "constants.csv").read_text()
    first, header = csv.split("\n")[:2]
    assert first.startswith("# config: {") and '"subcommand": "constants"' in first
    assert header == "quantity,value"
    assert "lambda0," in csv and "hardy_constant," in csv and "torsion_center," in csv
    meta = json.loads((tmp_path / "run_metadata.json").read_text())
    assert meta["config"]["n"] == 3
    assert set(meta["versions"]) == {"fracgelfand", "numpy", "scipy", "python"}


def test_constants_subcritical(tmp_path, capsys):
    assert run(tmp_path, "constants", "--n", "1", "--s", "0.7") == 0
    csv = (tmp_path / "constants.csv").read_text()
    assert "lambda0" not in csv
    assert "classification,BoundedSubcritical" in csv


def test_threshold_table(tmp_path, capsys):
    assert run(tmp_path, "threshold", "--n-max", "10") == 0
    out = capsys.readouterr().out
    assert "bounded for all s" in out
    assert "bounded for s above threshold" in out
    assert "inconclusive for all s" in out
    lines = (tmp_path / "threshold.csv").read_text().strip().split("\n")
    assert lines[1] == "n,critical_s,all_s_bounded"
    assert len(lines) == 12
    assert lines[2].startswith("1,,True")
    assert lines[-1].startswith("10,,False")


def test_threshold_usage_error(tmp_path, capsys):
    assert run(tmp_path, "threshold", "--n-max", "0") == 2
    err = capsys.readouterr().err
    assert "error:" in err and "--help" in err


def test_invalid_order_usage_error(tmp_path, capsys):
    assert run(tmp_path, "constants", "--n", "3", "--s", "1.5") == 2
    assert "error:" in capsys.readouterr().err


def test_verify_powers_default_midpoint(tmp_path, capsys):
    assert run(tmp_path, "verify-powers", "--n", "3", "--s", "0.5", "--grid", "96") == 0
    out = capsys.readouterr().out
    assert "PASS" in out
    lines = (tmp_path / "verify_powers.csv").read_text().strip().split("\n")
    assert lines[1] == "alpha,max_rel_error,tol,passed"
    alpha, err, tol, passed = lines[2].split(",")
    assert float(alpha) == 1.0  # midpoint of (0, n-2s)
    assert float(err) <= float(tol)
    assert passed == "True"


def test_verify_powers_tolerance_failure(tmp_path, capsys):
    # 64 panels cannot hit 1e-2 for (n, s, alpha) = (10, 0.9, 2); honest exit 1.
    rc = run(tmp_path, "verify-powers", "--n", "10", "--s", "0.9",
             "--alpha", "2.0", "--grid", "64")
    assert rc == 1
    captured = capsys.readouterr()
    assert "FAIL" in captured.out
    assert "exceeds" in captured.err
    assert ",False" in (tmp_path / "verify_powers.csv").read_text()


def test_verify_powers_alpha_domain(tmp_path, capsys):
    assert run(tmp_path, "verify-powers", "--n", "3", "--s", "0.5", "--alpha", "2.5") == 2
    assert "alpha must lie in" in capsys.readouterr().err


def test_verify_powers_eps_table(tmp_path, capsys):
    assert run(tmp_path, "verify-powers", "--n", "3", "--s", "0.5", "--eps-table") == 0
    out = capsys.readouterr().out
    assert "order 2.00" in out  # midpoint error is quadratic in eps
    assert "order 1.00" in out  # endpoint error is linear in eps
    lines = (tmp_path / "eps_table.csv").read_text().strip().split("\n")
    assert lines[1] == "eps,abs_err_midpoint,abs_err_endpoint"
    assert len(lines) == 5


def test_branch_artifacts(tmp_path, capsys):
    rc = run(tmp_path, "branch", "--n", "1", "--s", "0.5", "--grid", "96",
             "--peak-max", "2.0")
    assert rc == 0
    out = capsys.readouterr().out
    assert "fold detected: True" in out
    assert "lambda* estimate" in out

    csv_lines = (tmp_path / "branch.csv").read_text().strip().split("\n")
    assert csv_lines[0].startswith("# config: ")
    assert csv_lines[1] == "peak,lambda,stability_eig,residual_norm,newton_iters"
    assert len(csv_lines) == 2 + 8  # peaks 0.25 .. 2.0

    data = json.loads((tmp_path / "branch.json").read_text())
    assert data["fold_detected"] is True
    assert data["n"] == 1 and data["s"] == 0.5
    assert data["config"]["subcommand"] == "branch"

    dat_lines = (tmp_path / "bifurcation.dat").read_text().strip().split("\n")
    assert len(dat_lines) == 1 + 8
    lam, peak = dat_lines[1].split()
    assert 0.0 < float(lam) < 1.0 and float(peak) == 0.25
    assert "bifurcation.dat" in (tmp_path / "bifurcation.gp").read_text()


def test_branch_verify_and_diagnose(tmp_path, capsys):
    rc = run(tmp_path, "branch", "--n", "1", "--s", "0.5", "--grid", "96",
             "--peak-max", "1.5", "--verify", "--diagnose-sigma", "0.9")
    assert rc == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out
    assert "singular diagnostic" in out
    data = json.loads((tmp_path / "branch.json").read_text())
    assert data["verify_passed"] is True
    diag = data["singular_diagnostic"]
    assert diag["sigma"] == 0.9
    assert len(diag["probe_ratios"]) == 3


def test_branch_partial_failure(tmp_path, capsys):
    rc = run(tmp_path, "branch", "--n", "12", "--s", "0.5", "--grid", "64",
             "--peak-min", "1.0", "--peak-max", "16.0", "--peak-step", "1.0")
    assert rc == 1
    err = capsys.readouterr().err
    assert "solver failure" in err and "partial branch" in err
    csv_lines = (tmp_path / "branch.csv").read_text().strip().split("\n")
    assert len(csv_lines) >= 2 + 3  # partial points still saved
    data = json.loads((tmp_path / "branch.json").read_text())
    assert len(data["points"]) == len(csv_lines) - 2


def test_stability_stable_point(tmp_path, capsys):
    rc = run(tmp_path, "stability", "--n", "1", "--s", "0.5", "--grid", "96",
             "--peak", "0.5")
    assert rc == 0
    out = capsys.readouterr().out
    assert "(stable)" in out and "PASS" in out
    data = json.loads((tmp_path / "stability.json").read_text())
    assert data["stable"] is True
    assert data["inequality"]["passed"] is True
    assert data["inequality"]["lhs"] <= data["inequality"]["rhs"]


def test_stability_unstable_point(tmp_path, capsys):
    rc = run(tmp_path, "stability", "--n", "1", "--s", "0.5", "--grid", "96",
             "--peak", "2.0")
    assert rc == 0
    assert "(unstable)" in capsys.readouterr().out
    data = json.loads((tmp_path / "stability.json").read_text())
    assert data["stable"] is False
    assert "inequality" not in data


def test_stability_numerical_failure(tmp_path, capsys):
    # Cold starts far beyond the fold do not converge; exit 1, no artifact lie.
    rc = run(tmp_path, "stability", "--n", "1", "--s", "0.5", "--grid", "96",
             "--peak", "3.0")
    assert rc == 1
    assert "numerical failure" in capsys.readouterr().err
    assert not (tmp_path / "stability.json").exists()


def test_diagnose_singular_residual(tmp_path, capsys):
    rc = run(tmp_path, "diagnose", "--n", "3", "--s", "0.5", "--grid", "96",
             "--singular-residual")
    assert rc == 0
    assert "relative residual" in capsys.readouterr().out
    data = json.loads((tmp_path / "diagnose.json").read_text())
    assert 0.0 < data["relative_residual"] < 1e-2


def test_diagnose_profile_trend(tmp_path, capsys):
    rc = run(tmp_path, "diagnose", "--n", "12", "--s", "0.5", "--grid", "64",
             "--peak-min", "1.0", "--peak-max", "5.0", "--peak-step", "1.0")
    assert rc == 0
    out = capsys.readouterr().out
    assert "increasing trend: True" in out
    data = json.loads((tmp_path / "diagnose.json").read_text())
    assert data["increasing_trend"] is True
    assert len(data["probe_ratios"]) == 3
    assert data["fold_detected"] is False


def test_outdir_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv("FRACGELFAND_OUTDIR", str(tmp_path / "nested" / "artifacts"))
    assert main(["constants", "--n", "2", "--s", "0.5"]) == 0
    assert (tmp_path / "nested" / "artifacts" / "constants.csv").exists()


def test_reruns_are_byte_identical(tmp_path):
    args = ["branch", "--n", "1", "--s", "0.5", "--grid", "48", "--peak-max", "1.5"]
    dirs = (tmp_path / "a", tmp_path / "b")
    for d in dirs:
        assert main(["--outdir", str(d), *args]) == 0
    for name in ("branch.csv", "branch.json", "bifurcation.dat", "bifurcation.gp",
                 "run_metadata.json"):
        assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["--version"])
    assert excinfo.value.code == 0
    assert capsys.readouterr().out.strip()


def test_missing_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as excinfo:
        main([])
    assert excinfo.value.code == 2
