"""Command-line interface: subcommands, outputs, exit codes."""

import json
import os

from mirror_bounds.cli import main


def test_solve_writes_run_record(tmp_path, capsys):
    out = tmp_path / "run.json"
    code = main([
        "solve", "--family", "instance1", "--n", "6", "--algorithm", "smd",
        "--setup", "entropy", "--budget", "50", "--seed", "3", "--out", str(out),
        "--params", '{"alpha0": 0.1, "alpha1": 0.9}',
    ])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["n_calls"] == 50
    assert payload["algorithm"] == "smd"
    assert "estimate=" in capsys.readouterr().out


def test_solve_multistep_budget_variant(tmp_path, capsys):
    out = tmp_path / "multi.json"
    code = main([
        "solve", "--family", "instance1", "--n", "5", "--algorithm", "msmd-budget",
        "--setup", "euclidean", "--budget", "700", "--seed", "2", "--out", str(out),
        "--params", '{"alpha0": 0.1, "alpha1": 0.9, "lam0": 4.0, "norm": "l2"}',
    ])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["algorithm"] == "msmd-budget"
    assert payload["budget_used"] <= 700
    assert len(payload["stages"]) >= 1


def test_ci_prints_interval(capsys):
    code = main([
        "ci", "--method", "smd1", "--family", "instance1", "--n", "6",
        "--budget", "100", "--alpha", "0.1", "--seed", "1",
        "--params", '{"alpha0": 0.1, "alpha1": 0.9}',
    ])
    assert code == 0
    text = capsys.readouterr().out
    assert "smd1: [" in text and "upper=" in text


def test_ci_smd2_and_asymptotic(capsys):
    for method in ("smd2", "asymptotic"):
        code = main([
            "ci", "--method", method, "--family", "instance1", "--n", "5",
            "--budget", "80", "--seed", "2",
            "--params", '{"alpha0": 0.1, "alpha1": 0.9}',
        ])
        assert code == 0


def test_coverage_subcommand_writes_files(tmp_path, capsys):
    cfg = {
        "kind": "coverage",
        "family": "instance1",
        "params": {"alpha0": 0.1, "alpha1": 0.9},
        "grid": [[6, 60]],
        "replications": 5,
        "thetas": [1.0],
        "master_seed": 3,
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / "results"
    code = main(["coverage", "--config", str(cfg_path), "--outdir", str(out)])
    assert code == 0
    names = sorted(os.listdir(out))
    assert "coverage_summary_instance1.csv" in names
    assert "coverage_instance1_6_60.csv" in names


def test_compare_subcommand(tmp_path):
    cfg = {
        "family": "instance1",
        "params": {"alpha0": 0.1, "alpha1": 0.9, "lam0": 4.0, "norm": "l2"},
        "grid": [[5, 60]],
        "runs": 2,
        "stages": 2,
        "trace_stride": 20,
        "master_seed": 4,
        "setup": "euclidean",
        "sheet_overrides": {"growth_modulus": 1.0},
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / "cmp"
    code = main(["compare", "--config", str(cfg_path), "--outdir", str(out)])
    assert code == 0
    assert any(name.startswith("steps_") for name in os.listdir(out))


def test_eprm_eval_subcommand(capsys):
    code = main(["eprm-eval", "--model", "cvar", "--epsilon", "0.5", "--outcomes", "0,1"])
    assert code == 0
    assert "1" in capsys.readouterr().out


def test_bad_config_is_usage_error(tmp_path, capsys):
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text(json.dumps({"kind": "coverage", "unknown_field": 2}))
    code = main(["coverage", "--config", str(cfg_path)])
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_runtime_failure_exit_code(tmp_path, capsys):
    code = main(["coverage", "--config", str(tmp_path / "missing.json")])
    assert code in (1, 2)
    assert "error" in capsys.readouterr().err


def test_override_flags(tmp_path):
    out = tmp_path / "ov"
    code = main([
        "coverage",
        "--override", 'family="instance1"',
        "--override", 'params={"alpha0": 0.1, "alpha1": 0.9}',
        "--override", "grid=[[5, 50]]",
        "--override", "replications=4",
        "--override", "master_seed=11",
        "--outdir", str(out),
    ])
    assert code == 0
    assert (out / "coverage_summary_instance1.csv").exists()
