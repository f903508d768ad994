"""End-to-end checks of the reporting CLI."""

import json
import subprocess
import sys

import numpy as np
import pytest

from stabscan.cli_report import (
    HISTOGRAM_BINS,
    format_float,
    load_suite_config,
    main,
    render_json,
)
from stabscan.errors import ConfigError

SMALL_SPACES = [
    {"kind": "complex", "m1": 4, "factor2": {"type": "flat", "dim": 2}},
    {"kind": "quaternionic", "m1": 4, "factor2": {"type": "flat", "dim": 1}},
]


def write_config(tmp_path, name="suite.json", **overrides):
    path = tmp_path / name
    path.write_text(json.dumps(overrides))
    return str(path)


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def body_of(stdout):
    return json.loads(stdout)["body"]


class TestFormatting:
    def test_float_round_trip(self):
        rng = np.random.default_rng(0)
        for value in rng.standard_normal(200) * 10.0 ** rng.integers(-12, 12, 200):
            assert float(format_float(float(value))) == float(value)

    def test_small_integers_stay_short(self):
        assert format_float(1.0) == "1"
        assert format_float(-0.5) == "-0.5"

    def test_nonfinite_rejected(self):
        for bad in (np.inf, -np.inf, np.nan):
            with pytest.raises(ValueError):
                format_float(float(bad))

    def test_render_json_sorts_keys_and_handles_numpy(self):
        text = render_json({"b": np.float64(0.5), "a": [np.int64(2), True]})
        assert text.index('"a"') < text.index('"b"')
        parsed = json.loads(text)
        assert parsed == {"a": [2, True], "b": 0.5}

    def test_render_json_distinguishes_bool_from_int(self):
        assert '"x": true' in render_json({"x": True})
        assert '"x": 1' in render_json({"x": 1})


class TestConfigLoading:
    def test_defaults_without_file(self):
        config = load_suite_config(None, None, None)
        assert config.seed == 42
        assert config.samples == 2000
        assert len(config.spaces) == 15

    def test_flag_overrides_file(self, tmp_path):
        path = write_config(tmp_path, seed=7, samples=100)
        config = load_suite_config(path, 9, None)
        assert config.seed == 9
        assert config.samples == 100

    def test_unknown_top_key_rejected(self, tmp_path):
        path = write_config(tmp_path, smaples=100)
        with pytest.raises(ConfigError):
            load_suite_config(path, None, None)

    def test_unknown_tolerance_rejected(self, tmp_path):
        path = write_config(tmp_path, tolerances={"formula_rel": 1e-9, "bogus": 1.0})
        with pytest.raises(ConfigError):
            load_suite_config(path, None, None)

    def test_bad_seed_rejected(self, tmp_path):
        path = write_config(tmp_path, seed=-3)
        with pytest.raises(ConfigError):
            load_suite_config(path, None, None)
        path = write_config(tmp_path, name="b.json", seed=True)
        with pytest.raises(ConfigError):
            load_suite_config(path, None, None)

    def test_bad_space_keys_rejected(self, tmp_path):
        spaces = [{"kind": "complex", "m1": 4, "extra": 1}]
        path = write_config(tmp_path, spaces=spaces)
        with pytest.raises(ConfigError):
            load_suite_config(path, None, None)


class TestVerifyIdentities:
    def test_small_suite_passes(self, capsys, tmp_path):
        path = write_config(tmp_path, spaces=SMALL_SPACES, samples=300)
        code, out, err = run_cli(capsys, "verify-identities", "--config", path)
        assert code == 0
        body = body_of(out)
        assert body["pass"] is True
        assert body["constants_pass"] is True
        assert body["worst_rel_discrepancy"] <= 1e-9
        assert body["total_frames"] == sum(row["frames"] for row in body["scans"])
        assert "PASS" in err

    def test_body_is_deterministic(self, capsys, tmp_path):
        path = write_config(tmp_path, spaces=SMALL_SPACES[:1], samples=200)
        _, out1, _ = run_cli(capsys, "verify-identities", "--config", path, "--seed", "3")
        _, out2, _ = run_cli(capsys, "verify-identities", "--config", path, "--seed", "3")
        assert body_of(out1) == body_of(out2)
        _, out3, _ = run_cli(capsys, "verify-identities", "--config", path, "--seed", "4")
        assert body_of(out1) != body_of(out3)

    def test_constant_fault_is_caught(self, capsys, tmp_path):
        # A wrong curvature constant keeps the five routes mutually
        # consistent, so the certification table is what must catch it.
        path = write_config(
            tmp_path, spaces=SMALL_SPACES[:1], samples=200, lambda_sq_override=2.5
        )
        code, out, err = run_cli(capsys, "verify-identities", "--config", path)
        assert code == 1
        body = body_of(out)
        assert body["pass"] is False
        assert body["constants_pass"] is False
        assert any(row["lambda_sq_defect"] > 1e-3 for row in body["constants"])
        assert body["worst_rel_discrepancy"] <= 1e-9
        assert "FAIL" in err


class TestSignScan:
    def test_histograms_account_for_every_frame(self, capsys, tmp_path):
        path = write_config(tmp_path, cases=["d1", "quat-n1"], samples=400)
        code, out, _ = run_cli(capsys, "sign-scan", "--config", path)
        assert code == 0
        body = body_of(out)
        assert body["worst_max_q"] <= 1e-11
        for regime in body["regimes"]:
            histogram = regime["histogram"]
            assert len(histogram["counts"]) == HISTOGRAM_BINS
            assert len(histogram["bin_edges"]) == HISTOGRAM_BINS + 1
            assert sum(histogram["counts"]) == regime["frames"] == 400
            assert regime["violations"] == 0

    def test_empty_case_list_is_config_error(self, capsys, tmp_path):
        path = write_config(tmp_path, cases=[])
        code, out, err = run_cli(capsys, "sign-scan", "--config", path)
        assert code == 2
        assert out == ""
        assert "config error" in err


class TestClassify:
    def test_small_ensemble_classifies_cleanly(self, capsys, tmp_path):
        path = write_config(tmp_path, cases=["d2-complex", "quat-d2", "structure"], samples=40)
        code, out, _ = run_cli(capsys, "classify", "--config", path)
        assert code == 0
        body = body_of(out)
        assert body["pass"] is True
        for row in body["cases"]:
            assert row["pass"] is True
            if row["case"] == "structure":
                assert all(plane["misclassified"] == 0 for plane in row["planes"])
                assert row["equality_planes"]["neither"] == 0
                assert row["equality_planes"]["sign_mismatches"] == 0
            else:
                assert row["equality_all_classified"] is True
                assert row["violations_all_rejected"] is True
                assert row["equality_frames"] == 40
                assert row["max_abs_q"] <= 1e-10

    def test_unknown_case_rejected(self, capsys, tmp_path):
        path = write_config(tmp_path, cases=["d1", "concocted"])
        code, _, err = run_cli(capsys, "classify", "--config", path)
        assert code == 2
        assert "config error" in err


class TestGeodesicIndex:
    def test_canonical_runs_pass(self, capsys):
        code, out, _ = run_cli(capsys, "geodesic-index", "--seed", "1")
        assert code == 0
        body = body_of(out)
        assert body["pass"] is True
        by_name = {run["name"]: run for run in body["runs"]}
        assert by_name["slice"]["morse_index"] == 0
        assert by_name["equator"]["morse_index"] == 1
        assert abs(by_name["equator"]["lambda_min"] + 1.0) <= 1e-2
        assert abs(by_name["diagonal"]["lambda_min"] + 0.5) <= 1e-2
        assert body["convergence"]["ratio"] == pytest.approx(4.0, abs=1.5)

    def test_custom_winding_entry(self, capsys, tmp_path):
        geodesics = [
            {
                "name": "wound",
                "factor2": {"type": "sphere", "dim": 2, "radius": 1.3},
                "windings": [2, 1],
                "nodes": 128,
            }
        ]
        path = write_config(tmp_path, geodesics=geodesics)
        code, out, _ = run_cli(capsys, "geodesic-index", "--config", path)
        assert code == 0
        body = body_of(out)
        (run,) = body["runs"]
        assert run["morse_index"] >= 1
        assert run["pass"] is True

    def test_bad_closure_is_config_error(self, capsys, tmp_path):
        geodesics = [
            {
                "name": "broken",
                "factor2": {"type": "circle", "circumference": -1.0},
                "windings": [1, 1],
                "nodes": 64,
            }
        ]
        path = write_config(tmp_path, geodesics=geodesics)
        code, _, err = run_cli(capsys, "geodesic-index", "--config", path)
        assert code == 2
        assert "config error" in err


class TestOutputChannels:
    def test_out_file_keeps_stdout_clean(self, capsys, tmp_path):
        config = write_config(tmp_path, spaces=SMALL_SPACES[:1], samples=100)
        target = tmp_path / "report.json"
        code, out, _ = run_cli(
            capsys, "verify-identities", "--config", config, "--out", str(target)
        )
        assert code == 0
        assert out == ""
        assert body_of(target.read_text())["pass"] is True

    def test_csv_rows_match_regimes(self, capsys, tmp_path):
        config = write_config(tmp_path, cases=["d1", "n1", "quat-d1"], samples=200)
        code, out, _ = run_cli(capsys, "sign-scan", "--config", config, "--format", "csv")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0].split(",")[:2] == ["regime", "space"]
        assert len(lines) == 1 + 3

    def test_csv_floats_survive_round_trip(self, capsys, tmp_path):
        config = write_config(tmp_path, cases=["d1"], samples=200)
        _, out, _ = run_cli(capsys, "sign-scan", "--config", config, "--format", "csv")
        json_code, json_out, _ = run_cli(capsys, "sign-scan", "--config", config)
        assert json_code == 0
        row = out.strip().splitlines()[1].split(",")
        regime = body_of(json_out)["regimes"][0]
        assert float(row[6]) == regime["max_q"]


class TestProcessInterface:
    def test_module_entry_point(self, tmp_path):
        config = write_config(tmp_path, spaces=SMALL_SPACES[:1], samples=100)
        proc = subprocess.run(
            [sys.executable, "-m", "stabscan", "verify-identities", "--config", config],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert json.loads(proc.stdout)["meta"]["command"] == "verify-identities"

    def test_unknown_flag_exits_with_usage_error(self):
        proc = subprocess.run(
            [sys.executable, "-m", "stabscan", "sign-scan", "--frames", "10"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 2
