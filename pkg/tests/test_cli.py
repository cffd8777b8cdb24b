"""End-to-end command-line behavior through real subprocesses."""

import json
from importlib import resources

import pytest

from conftest import run_cli


# ----------------------------------------------------------------------
# determinism
# ----------------------------------------------------------------------

def test_simulate_bytes_identical_across_parallelism():
    base = ["simulate", "--model", "tb", "--rounds", "20000", "--seed", "5"]
    code1, out1, _ = run_cli(base + ["--parallelism", "1"])
    code4, out4, _ = run_cli(base + ["--parallelism", "4"])
    assert code1 == code4 == 0
    assert out1 == out4


def test_simulate_bytes_identical_across_backends():
    base = ["simulate", "--model", "gg", "--rounds", "20000", "--seed", "6"]
    _, out_numba, _ = run_cli(base, env_extra={"BELLMI_BACKEND": "numba"})
    _, out_numpy, _ = run_cli(base, env_extra={"BELLMI_BACKEND": "numpy"})
    assert out_numba == out_numpy


def test_repeated_commands_are_byte_identical():
    args = [
        "mutual-info", "--target", "tb-finite", "--samples", "5000", "--seed", "3",
    ]
    _, first, _ = run_cli(args)
    _, second, _ = run_cli(args)
    assert first == second


# ----------------------------------------------------------------------
# simulate
# ----------------------------------------------------------------------

def test_simulate_json_payload():
    code, out, err = run_cli(
        ["simulate", "--model", "gg", "--rounds", "30000", "--seed", "1"]
    )
    assert code == 0, err
    payload = json.loads(out)
    assert payload["model"] == "gg"
    assert payload["seed"] == 1
    assert "parallelism" not in payload
    assert len(payload["cells"]) == 4
    eff = payload["efficiency"]
    assert abs(eff["alice_per_setting"][0] - 0.5) < 0.03
    assert eff["bob"] == 1.0


def test_simulate_csv_output(tmp_path):
    out_file = tmp_path / "table.csv"
    code, out, err = run_cli(
        [
            "simulate", "--model", "tb", "--rounds", "4000", "--seed", "2",
            "--output", "csv", "--out-file", str(out_file),
        ]
    )
    assert code == 0, err
    assert out == b""
    lines = out_file.read_text().strip().split("\n")
    assert len(lines) == 5
    assert lines[0].startswith("x,y,")


def test_simulate_rejects_unknown_model():
    code, _, err = run_cli(["simulate", "--model", "brans", "--rounds", "10"])
    assert code == 2
    assert "brans" in err


# ----------------------------------------------------------------------
# mutual-info
# ----------------------------------------------------------------------

def test_mutual_info_targets(tmp_path):
    code, out, _ = run_cli(["mutual-info", "--target", "tb-uniform"])
    assert code == 0
    payload = json.loads(out)
    assert abs(payload["value"] - 0.85) < 0.02
    assert payload["bound"] == 1.0

    code, out, _ = run_cli(["mutual-info", "--target", "gg-uniform"])
    payload = json.loads(out)
    assert abs(payload["value"] - 0.2787) < 0.001
    assert payload["method"] == "closed-form"

    code, out, _ = run_cli(
        ["mutual-info", "--target", "tb-finite", "--samples", "20000", "--seed", "7"]
    )
    payload = json.loads(out)
    assert payload["value"] <= 1.0
    assert payload["seed"] == 7

    model_file = tmp_path / "model.json"
    run_cli(["transform", "--model", "brans", "--out-file", str(model_file)])
    code, out, _ = run_cli(
        ["mutual-info", "--target", "exact-model-file", "--model-file", str(model_file)]
    )
    payload = json.loads(out)
    assert payload["value"] == pytest.approx(2.0, abs=1e-12)


def test_mutual_info_model_file_required():
    code, _, err = run_cli(["mutual-info", "--target", "exact-model-file"])
    assert code == 2
    assert "model-file" in err


# ----------------------------------------------------------------------
# transform
# ----------------------------------------------------------------------

def test_transform_requires_out_file():
    code, _, err = run_cli(["transform", "--model", "brans"])
    assert code == 2
    assert "out-file" in err


def test_transform_brans_then_verify(tmp_path):
    model_file = tmp_path / "brans.json"
    code, out, err = run_cli(
        ["transform", "--model", "brans", "--out-file", str(model_file)]
    )
    assert code == 0, err
    report = json.loads(out)
    assert report["corr_deviation"] == 0.0
    assert report["mi_value"] == 2.0
    code, out, _ = run_cli(["verify", str(model_file)])
    assert code == 0
    assert json.loads(out)["ok"] is True


def test_transform_input_broadcast_pr_box(tmp_path):
    model_file = tmp_path / "ib.json"
    code, out, _ = run_cli(
        [
            "transform", "--model", "input-broadcast", "--corr", "pr-box",
            "--out-file", str(model_file),
        ]
    )
    assert code == 0
    report = json.loads(out)
    assert report["corr_deviation"] == 0.0
    assert report["mi_value"] == 1.0
    assert report["mi_bound"] == 1.0
    code, _, _ = run_cli(["verify", str(model_file), "--tol", "1e-12"])
    assert code == 0


def test_transform_sampled_models(tmp_path):
    tb_file = tmp_path / "tb.json"
    code, out, err = run_cli(
        [
            "transform", "--model", "tb", "--rounds", "20000", "--seed", "4",
            "--out-file", str(tb_file),
        ]
    )
    assert code == 0, err
    report = json.loads(out)
    assert report["mi_bound"] == 1.0
    assert report["extras"]["exact"] is False
    descriptor = json.loads(tb_file.read_bytes())
    assert descriptor["sampled"] is True

    gg_file = tmp_path / "gg.json"
    code, out, err = run_cli(
        [
            "transform", "--model", "gg", "--rounds", "20000", "--seed", "4",
            "--out-file", str(gg_file),
        ]
    )
    assert code == 0, err
    report = json.loads(out)
    assert abs(report["extras"]["acceptance_rate"] - 0.5) < 0.03


def test_transform_floor_breach_exit_code(tmp_path):
    code, _, err = run_cli(
        [
            "transform", "--model", "gg", "--rounds", "30000", "--seed", "4",
            "--floor", "0.9", "--out-file", str(tmp_path / "gg.json"),
        ]
    )
    assert code == 4
    assert "floor" in err


def test_transform_corr_file_round_trip(tmp_path):
    table_file = tmp_path / "table.json"
    run_cli(
        [
            "simulate", "--model", "tb", "--rounds", "20000", "--seed", "8",
            "--out-file", str(table_file),
        ]
    )
    model_file = tmp_path / "model.json"
    code, out, err = run_cli(
        [
            "transform", "--model", "brans", "--corr-file", str(table_file),
            "--out-file", str(model_file),
        ]
    )
    assert code == 0, err
    assert json.loads(out)["corr_deviation"] <= 1e-12
    code, _, _ = run_cli(["verify", str(model_file)])
    assert code == 0


# ----------------------------------------------------------------------
# verify
# ----------------------------------------------------------------------

def test_verify_bundled_signaling_counterexample():
    path = resources.files("bellmi").joinpath("data/signaling_counterexample.json")
    code, out, _ = run_cli(["verify", str(path)])
    assert code == 1
    payload = json.loads(out)
    assert payload["ok"] is False
    assert payload["witness"] is not None


def test_config_errors_exit_2(tmp_path):
    code, _, _ = run_cli(["verify", str(tmp_path / "missing.json")])
    assert code == 2
    code, _, err = run_cli(
        [
            "simulate", "--model", "tb", "--rounds", "100",
            "--preset", "chsh", "--settings-file", "x.json",
        ]
    )
    assert code == 2
    assert "exclusive" in err
    code, _, _ = run_cli(["simulate"])  # missing required --model
    assert code == 2
