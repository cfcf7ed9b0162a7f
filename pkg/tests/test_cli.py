import json
from pathlib import Path

import pytest

from blockwalk.cli import ConfigError, load_config, main

WORKED = {
    "schema_version": 1,
    "field": {
        "m": 2,
        "R": [[1.0, 0.0], [0.3, 1.0]],
        "columns": [[{"t": 0.5, "w": 1.0}], []],
    },
    "rho": [1.0, 1.0],
}

MODEL = {
    "schema_version": 1,
    "model": {"m": 2, "weights": [[1.0], [1.0]], "Q": [[1.0, 0.5], [0.5, 1.0]]},
    "rho": [1.0, 1.0],
    "seed": 7,
}


@pytest.fixture
def worked_config(tmp_path):
    path = tmp_path / "worked.json"
    path.write_text(json.dumps(WORKED))
    return path


@pytest.fixture
def model_config(tmp_path):
    path = tmp_path / "model.json"
    path.write_text(json.dumps(MODEL))
    return path


class TestConfig:
    def test_unknown_top_level_field_rejected(self, tmp_path):
        bad = dict(WORKED, extra=1)
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(bad))
        with pytest.raises(ConfigError, match="unknown fields"):
            load_config(path)

    def test_unknown_nested_field_rejected(self, tmp_path):
        bad = json.loads(json.dumps(MODEL))
        bad["model"]["alpha"] = 3
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(bad))
        with pytest.raises(ConfigError, match="config.model"):
            load_config(path)

    def test_model_and_field_exclusive(self, tmp_path):
        bad = dict(WORKED)
        bad["model"] = MODEL["model"]
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(bad))
        with pytest.raises(ConfigError, match="exactly one"):
            load_config(path)

    def test_schema_version_checked(self, tmp_path):
        bad = dict(WORKED, schema_version=99)
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(bad))
        with pytest.raises(ConfigError, match="schema_version"):
            load_config(path)

    def test_invalid_json_reports_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{\n  broken\n}")
        with pytest.raises(ConfigError, match="line 2"):
            load_config(path)

    def test_config_errors_exit_with_two(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(dict(WORKED, schema_version=2)))
        code = main(["encode", "--config", str(path), "--out", str(tmp_path / "o")])
        assert code == 2
        assert "error:" in capsys.readouterr().err


class TestEncode:
    def test_worked_instance_single_jump(self, worked_config, tmp_path, capsys):
        out = tmp_path / "enc"
        assert main(["encode", "--config", str(worked_config), "--out", str(out)]) == 0
        obj = json.loads((out / "encoding.json").read_text())
        assert obj["jumps"] == [{"y": 0.5, "delta": [1.0, 0.3]}]
        assert obj["solver_check"]["pass"]

    def test_rerun_is_byte_identical(self, model_config, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["encode", "--config", str(model_config), "--out", str(out_a)]) == 0
        assert main(["encode", "--config", str(model_config), "--out", str(out_b)]) == 0
        assert (out_a / "encoding.json").read_bytes() == (out_b / "encoding.json").read_bytes()

    def test_seed_override_changes_output(self, model_config, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        main(["encode", "--config", str(model_config), "--out", str(out_a)])
        main(["encode", "--config", str(model_config), "--seed", "8", "--out", str(out_b)])
        assert (out_a / "encoding.json").read_bytes() != (out_b / "encoding.json").read_bytes()


class TestCurveCommand:
    def test_worked_instance_artifacts(self, worked_config, tmp_path):
        out = tmp_path / "curve"
        assert main(["curve", "--config", str(worked_config), "--out", str(out)]) == 0
        report = json.loads((out / "pathwise_report.json").read_text())
        assert report["pass"]
        exc = json.loads((out / "excursions.json").read_text())
        assert len(exc) == 1
        assert exc[0]["l"] == pytest.approx(1.0, abs=1e-12)
        assert exc[0]["r"] == pytest.approx(2.3, abs=1e-12)
        header = (out / "curve.csv").read_text().splitlines()[0]
        assert header == "s,curve_0,curve_1,process_0"
        assert (out / "manifest.json").exists()

    def test_rerun_byte_identical(self, worked_config, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        main(["curve", "--config", str(worked_config), "--out", str(out_a)])
        main(["curve", "--config", str(worked_config), "--out", str(out_b)])
        for name in ("curve.csv", "excursions.json", "pathwise_report.json"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


class TestSampleExplore:
    def test_sample_writes_graph_and_components(self, model_config, tmp_path):
        out = tmp_path / "sample"
        assert main(["sample", "--config", str(model_config), "--out", str(out)]) == 0
        lines = (out / "graph.csv").read_text().splitlines()
        assert lines[0] == "u,v"
        comps = json.loads((out / "components.json").read_text())
        assert sum(len(c["vertices"]) for c in comps) == 2

    def test_sample_requires_model(self, worked_config, tmp_path):
        assert main(["sample", "--config", str(worked_config), "--out", str(tmp_path / "x")]) == 2

    def test_explore_field_mode_on_deterministic_field(self, worked_config, tmp_path):
        out = tmp_path / "explore"
        assert main(["explore", "--config", str(worked_config), "--out", str(out)]) == 0
        trace = json.loads((out / "trace.json").read_text())
        assert trace == [
            {
                "k": 1,
                "kind": "root",
                "vertex": [0, 0],
                "zeta": 1,
                "children": [],
                "S_L": [0.5, 0.5],
                "S_R": [1.5, 0.8],
                "Y": 0.5,
            }
        ]

    def test_explore_graph_mode(self, model_config, tmp_path):
        out = tmp_path / "explore"
        assert main(["explore", "--config", str(model_config), "--mode", "graph", "--out", str(out)]) == 0
        trace = json.loads((out / "trace.json").read_text())
        assert len(trace) == 2


class TestValidate:
    def test_functions_suite_passes(self, tmp_path, capsys):
        out = tmp_path / "v"
        assert main(["validate", "functions", "--out", str(out), "--reps", "20000"]) == 0
        text = capsys.readouterr().out
        assert "smooth composition with inverse" in text
        assert "[PASS]" in text
        report = json.loads((out / "validate_functions.json").read_text())
        assert report["pass"]

    def test_pathwise_suite_passes(self, tmp_path):
        out = tmp_path / "v"
        assert main(["validate", "pathwise", "--out", str(out), "--reps", "100000"]) == 0

    def test_distributional_suite_small(self, tmp_path):
        out = tmp_path / "v"
        code = main(
            [
                "validate",
                "distributional",
                "--out",
                str(out),
                "--reps",
                "5000",
                "--calibration-seeds",
                "5",
            ]
        )
        assert code == 0

    def test_output_root_env(self, worked_config, tmp_path, monkeypatch):
        monkeypatch.setenv("BLOCKWALK_OUT", str(tmp_path / "root"))
        assert main(["encode", "--config", str(worked_config)]) == 0
        assert (tmp_path / "root" / "encode" / "encoding.json").exists()
