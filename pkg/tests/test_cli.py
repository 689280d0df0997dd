"""End-to-end tests of the command-line harness on desk-scale data."""

import json

import numpy as np
import pytest

from spinbayes.bayes_net import load_checkpoint
from spinbayes.cli import run_command


def run(argv):
    return run_command(argv)


def test_unknown_subcommand_is_usage_error(capsys):
    assert run(["frobnicate"]) != 0
    capsys.readouterr()


def test_unknown_flag_is_usage_error(capsys):
    assert run(["rng-test", "--no-such-flag"]) != 0
    capsys.readouterr()


def test_rng_test_report(tmp_path, capsys):
    assert run(["rng-test", "--samples", "20000", "--out", str(tmp_path)]) == 0
    payload = json.loads((tmp_path / "rng_report.json").read_text())
    assert payload["toolkit_version"]
    assert payload["seed"] == 2026
    assert "config_snapshot" in payload
    assert abs(payload["moments"]["mean"]) < 0.05
    assert (tmp_path / "rng_report.txt").exists()
    capsys.readouterr()


def test_device_mc_small(tmp_path, capsys):
    code = run(
        [
            "device-mc",
            "--trials",
            "100",
            "--seed",
            "3",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 0
    payload = json.loads((tmp_path / "device_mc_report.json").read_text())
    assert 0.0 <= payload["p_switch"] <= 1.0
    assert payload["trials"] == 100
    capsys.readouterr()


def test_energy_report(tmp_path, capsys):
    assert run(["energy", "--arch", "784,200,200,10", "--out", str(tmp_path)]) == 0
    payload = json.loads((tmp_path / "energy_report.json").read_text())
    assert 711e-9 <= payload["grand_total_joules"] <= 869e-9
    assert payload["metadata"]["dims"] == [784, 200, 200, 10]
    capsys.readouterr()


@pytest.fixture(scope="module")
def trained_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli_train")
    code = run_command(
        [
            "train",
            "--dataset",
            "digits",
            "--epochs",
            "4",
            "--seed",
            "5",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    return out


def test_train_artifacts(trained_run):
    payload = json.loads((trained_run / "train_report.json").read_text())
    assert payload["dataset"] == "digits-surrogate"
    assert payload["final_test_accuracy"] > 0.85
    assert len(payload["history"]) == 4
    assert (trained_run / "checkpoint.npz").exists()
    assert payload["config_snapshot"]["seed"] == 2026  # snapshot keeps file/default config


def test_train_determinism(tmp_path, trained_run, capsys):
    code = run(
        [
            "train",
            "--dataset",
            "digits",
            "--epochs",
            "4",
            "--seed",
            "5",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 0
    a, _ = load_checkpoint(trained_run / "checkpoint.npz")
    b, _ = load_checkpoint(tmp_path / "checkpoint.npz")
    for la, lb in zip(a.layers, b.layers):
        assert np.array_equal(la.mu, lb.mu)
        assert np.array_equal(la.rho, lb.rho)
    capsys.readouterr()


def test_eval_subcommand(tmp_path, trained_run, capsys):
    code = run(
        [
            "eval",
            "--checkpoint",
            str(trained_run / "checkpoint.npz"),
            "--dataset",
            "digits",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 0
    payload = json.loads((tmp_path / "eval_report.json").read_text())
    assert payload["test_accuracy"] > 0.85
    capsys.readouterr()


def test_hw_eval_with_variation(tmp_path, trained_run, capsys):
    code = run(
        [
            "hw-eval",
            "--checkpoint",
            str(trained_run / "checkpoint.npz"),
            "--dataset",
            "digits",
            "--samples",
            "5",
            "--variation",
            "0.10",
            "--mc-runs",
            "2",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 0
    payload = json.loads((tmp_path / "hw_eval_report.json").read_text())
    assert payload["hardware_accuracy"] > 0.80
    assert len(payload["mc_runs"]) == 2
    assert payload["mc_mean_accuracy"] is not None
    capsys.readouterr()


def test_export_subcommand(tmp_path, trained_run, capsys):
    code = run(
        [
            "export",
            "--checkpoint",
            str(trained_run / "checkpoint.npz"),
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 0
    manifest = json.loads((tmp_path / "export_manifest.json").read_text())
    assert len(manifest["layers"]) == 3
    from spinbayes.crossbar import load_conductance_matrix

    cm = load_conductance_matrix(tmp_path / manifest["layers"][0]["mean"])
    assert cm.shape == (64, 200)
    capsys.readouterr()


def test_missing_checkpoint_is_runtime_error(tmp_path, capsys):
    code = run(
        [
            "eval",
            "--checkpoint",
            str(tmp_path / "nope.npz"),
            "--dataset",
            "digits",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 1
    err = capsys.readouterr().err
    assert "error:" in err
