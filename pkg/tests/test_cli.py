"""Command-line front door, exercised in process through main(argv)."""

from __future__ import annotations

import json

import numpy as np
import pytest

from policychain.cli import main
from policychain.core import write_json


@pytest.fixture(scope="module")
def bench_dir(tmp_path_factory):
    """Small recorded bench shared by the command tests."""
    out = tmp_path_factory.mktemp("bench")
    rc = main([
        "synth", "--regions", "2", "--dims", "2", "--seed", "6",
        "--episodes", "4000", "--out-dir", str(out),
    ])
    assert rc == 0
    return out


@pytest.fixture(scope="module")
def policy_path(bench_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("fit") / "policy.json"
    rc = main([
        "distill",
        "--dataset", str(bench_dir / "dataset.csv"),
        "--manifest", str(bench_dir / "manifest.json"),
        "--critic", str(bench_dir / "critic.json"),
        "--iterations", "4", "--min-region-size", "64",
        "--svm-epochs", "150", "--out", str(out),
    ])
    assert rc == 0
    return out


def test_synth_writes_bench_files(bench_dir):
    assert (bench_dir / "dataset.csv").exists()
    assert (bench_dir / "manifest.json").exists()
    doc = json.loads((bench_dir / "critic.json").read_text())
    assert doc["kind"] == "piecewise"
    assert doc["regions"] == 2 and doc["seed"] == 6
    assert doc["behavior_noise"] == 0.15


def test_distill_prints_chain_summary(bench_dir, tmp_path, capsys):
    out = tmp_path / "policy.json"
    rc = main([
        "distill",
        "--dataset", str(bench_dir / "dataset.csv"),
        "--manifest", str(bench_dir / "manifest.json"),
        "--critic", str(bench_dir / "critic.json"),
        "--iterations", "3", "--min-region-size", "64",
        "--svm-epochs", "100", "--out", str(out),
    ])
    captured = capsys.readouterr()
    assert rc == 0
    assert out.exists()
    assert "nodes=" in captured.out
    assert "node 0" in captured.out


def test_distill_missing_critic_file(bench_dir, tmp_path, capsys):
    rc = main([
        "distill",
        "--dataset", str(bench_dir / "dataset.csv"),
        "--manifest", str(bench_dir / "manifest.json"),
        "--critic", str(tmp_path / "nope.json"),
        "--out", str(tmp_path / "policy.json"),
    ])
    captured = capsys.readouterr()
    assert rc == 2
    assert "error:" in captured.err
    assert "nope.json" in captured.err


def test_distill_malformed_dataset(bench_dir, tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("s0,s1,a0,a1\n1,2,3,oops\n")
    rc = main([
        "distill", "--dataset", str(bad),
        "--manifest", str(bench_dir / "manifest.json"),
        "--critic", str(bench_dir / "critic.json"),
        "--out", str(tmp_path / "policy.json"),
    ])
    assert rc == 2
    assert "non-numeric" in capsys.readouterr().err


def test_distill_singular_system_is_numeric_error(tmp_path, capsys):
    # constant states make the normal equations singular at lambda 0
    rows = "\n".join("0.5,0.5,0.1,0.1" for _ in range(40))
    data = tmp_path / "flat.csv"
    data.write_text("s0,s1,a0,a1\n" + rows + "\n")
    write_json({"state_dim": 2, "action_dim": 2, "action_low": [-2.0, -2.0],
                "action_high": [2.0, 2.0], "episode_count": 40},
               tmp_path / "manifest.json")
    write_json({"kind": "piecewise", "regions": 1, "dims": 2, "seed": 0,
                "behavior_noise": 0.15}, tmp_path / "critic.json")
    rc = main([
        "distill", "--dataset", str(data),
        "--manifest", str(tmp_path / "manifest.json"),
        "--critic", str(tmp_path / "critic.json"),
        "--ridge-lambda", "0", "--min-region-size", "3",
        "--out", str(tmp_path / "policy.json"),
    ])
    captured = capsys.readouterr()
    assert rc == 3
    assert "numeric error:" in captured.err
    assert "lambda" in captured.err


def test_config_file_and_flag_precedence(bench_dir, tmp_path):
    cfgfile = tmp_path / "config.json"
    write_json({"iterations": 1, "min_region_size": 64, "svm_epochs": 100}, cfgfile)
    out1 = tmp_path / "one.json"
    rc = main([
        "distill", "--dataset", str(bench_dir / "dataset.csv"),
        "--manifest", str(bench_dir / "manifest.json"),
        "--critic", str(bench_dir / "critic.json"),
        "--config", str(cfgfile), "--out", str(out1),
    ])
    assert rc == 0
    doc = json.loads(out1.read_text())
    assert doc["config"]["n_iteration"] == 1
    assert len(doc["nodes"]) == 1

    out2 = tmp_path / "two.json"
    rc = main([
        "distill", "--dataset", str(bench_dir / "dataset.csv"),
        "--manifest", str(bench_dir / "manifest.json"),
        "--critic", str(bench_dir / "critic.json"),
        "--config", str(cfgfile), "--iterations", "2", "--out", str(out2),
    ])
    assert rc == 0
    assert json.loads(out2.read_text())["config"]["n_iteration"] == 2


def test_unknown_config_key_rejected(bench_dir, tmp_path, capsys):
    cfgfile = tmp_path / "config.json"
    write_json({"iteration_budget": 3}, cfgfile)
    rc = main([
        "distill", "--dataset", str(bench_dir / "dataset.csv"),
        "--manifest", str(bench_dir / "manifest.json"),
        "--critic", str(bench_dir / "critic.json"),
        "--config", str(cfgfile), "--out", str(tmp_path / "policy.json"),
    ])
    assert rc == 2
    assert "iteration_budget" in capsys.readouterr().err


def test_eval_reports_are_stable(policy_path, bench_dir, tmp_path, capsys):
    args = [
        "eval", "--policy", str(policy_path),
        "--env", f"builtin:piecewise:{bench_dir / 'critic.json'}",
        "--episodes", "5", "--base-seed", "9000",
    ]
    r1, r2 = tmp_path / "r1.json", tmp_path / "r2.json"
    assert main(args + ["--out-report", str(r1)]) == 0
    assert main(args + ["--out-report", str(r2)]) == 0
    capsys.readouterr()
    assert r1.read_bytes() == r2.read_bytes()
    doc = json.loads(r1.read_text())
    assert doc["valid"] is True and doc["episodes"] == 5


def test_eval_jobs_parity(policy_path, bench_dir, tmp_path, capsys):
    args = [
        "eval", "--policy", str(policy_path),
        "--env", f"builtin:piecewise:{bench_dir / 'critic.json'}",
        "--episodes", "6", "--base-seed", "42",
    ]
    serial, parallel = tmp_path / "s.json", tmp_path / "p.json"
    assert main(args + ["--out-report", str(serial)]) == 0
    assert main(args + ["--jobs", "3", "--out-report", str(parallel)]) == 0
    capsys.readouterr()
    assert serial.read_bytes() == parallel.read_bytes()


def test_eval_episode_table(policy_path, bench_dir, tmp_path, capsys):
    table = tmp_path / "episodes.csv"
    rc = main([
        "eval", "--policy", str(policy_path),
        "--env", f"builtin:piecewise:{bench_dir / 'critic.json'}",
        "--episodes", "3", "--out-episodes", str(table),
    ])
    capsys.readouterr()
    assert rc == 0
    lines = table.read_text().splitlines()
    assert lines[0] == "episode,return" and len(lines) == 4


def test_inspect_uses_manifest_names(policy_path, tmp_path, capsys):
    write_json({"state_dim": 2, "action_dim": 2,
                "action_low": [-2.0, -2.0], "action_high": [2.0, 2.0],
                "episode_count": 1,
                "feature_names": ["height", "speed"],
                "action_names": ["thrust", "roll"]},
               tmp_path / "manifest.json")
    rc = main(["inspect", "--policy", str(policy_path),
               "--manifest", str(tmp_path / "manifest.json")])
    captured = capsys.readouterr()
    assert rc == 0
    assert "height=" in captured.out and "thrust:" in captured.out

    rc = main(["inspect", "--policy", str(policy_path)])
    captured = capsys.readouterr()
    assert rc == 0
    assert "s0=" in captured.out


def test_boundary_grid_file(policy_path, tmp_path, capsys):
    out = tmp_path / "grid.csv"
    rc = main([
        "boundary", "--policy", str(policy_path),
        "--dim-x", "0", "--dim-y", "1", "--resolution", "20",
        "--out", str(out),
    ])
    capsys.readouterr()
    assert rc == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 401
    assert lines[0] == "x,y,node"


def test_replicate_writes_per_seed_dirs(bench_dir, tmp_path, capsys):
    out = tmp_path / "reps"
    rc = main([
        "replicate",
        "--dataset", str(bench_dir / "dataset.csv"),
        "--manifest", str(bench_dir / "manifest.json"),
        "--critic", str(bench_dir / "critic.json"),
        "--env", f"builtin:piecewise:{bench_dir / 'critic.json'}",
        "--iterations", "2", "--min-region-size", "64", "--svm-epochs", "60",
        "--episodes", "2", "--replicates", "3", "--out-dir", str(out),
    ])
    captured = capsys.readouterr()
    assert rc == 0
    for r in range(3):
        sub = out / f"seed_{r}"
        assert (sub / "policy.json").exists()
        assert (sub / "report.json").exists()
    assert "mean_of_means" in captured.out
    seeds = {json.loads((out / f"seed_{r}" / "policy.json").read_text())
             ["config"]["seed"] for r in range(3)}
    assert seeds == {0, 1, 2}


def test_help_screens():
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    for cmd in ("distill", "eval", "inspect", "boundary", "synth", "replicate"):
        with pytest.raises(SystemExit) as exc:
            main([cmd, "--help"])
        assert exc.value.code == 0


def test_unknown_flag_exits_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["distill", "--no-such-flag"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_missing_subcommand_exits_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
    capsys.readouterr()
