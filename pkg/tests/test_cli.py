"""Command-line interface: subcommands, exit codes, config, determinism."""

import json

import numpy as np
import pytest

from fisheyedist.camera import CameraParams, PixelPoint, WorldPoint, project_points, save_correspondences
from fisheyedist.cli import run
from fisheyedist.mlp import MlpModel
from fisheyedist.synth import DEFAULT_DEPOF_CAMERA


@pytest.fixture()
def outdir(tmp_path, monkeypatch):
    monkeypatch.setenv("FISHEYEDIST_OUT", str(tmp_path))
    return tmp_path


@pytest.fixture()
def camera_file(outdir):
    path = outdir / "camera.json"
    DEFAULT_DEPOF_CAMERA.save(path)
    return path


def make_scene_files(outdir, seed=5):
    code = run(["synth", "--mode", "depof", "--seed", str(seed), "--quantize",
                "--out-detections", "det.jsonl", "--out-gt", "gt.csv"])
    assert code == 0
    return outdir / "det.jsonl", outdir / "gt.csv"


class TestSynth:
    def test_depof_scene_outputs(self, outdir):
        det, gt = make_scene_files(outdir)
        assert det.exists() and gt.exists()
        assert len(gt.read_text().splitlines()) == 1 + 16 * 15 // 2

    def test_grid_mode_and_determinism(self, outdir):
        args = ["synth", "--mode", "grid", "--rows", "4", "--cols", "4",
                "--origin-x", "-20", "--origin-y", "20", "--out", "pairs.csv"]
        assert run(args) == 0
        first = (outdir / "pairs.csv").read_bytes()
        assert run(args) == 0
        assert (outdir / "pairs.csv").read_bytes() == first

    def test_scene_mode_requires_people(self, outdir):
        assert run(["synth", "--mode", "scene"]) == 2

    def test_output_json(self, outdir):
        assert run(["synth", "--mode", "depof", "--seed", "1", "--quantize",
                    "--out-detections", "d.jsonl", "--out-gt", "g.csv",
                    "--output-json", "synth.json"]) == 0
        payload = json.loads((outdir / "synth.json").read_text())
        assert payload["people"] == 16


class TestCalibrate:
    def test_calibrate_round_trip(self, outdir, camera_file, capsys):
        true_cam = CameraParams(xi=1.05, fx=870.0, fy=930.0, cx=1015.0, cy=1020.0,
                                mount_height_b=114.0)
        rng = np.random.default_rng(2)
        world = np.column_stack([rng.uniform(-300, 300, 30),
                                 rng.uniform(-300, 300, 30),
                                 rng.uniform(50, 100, 30)])
        px = project_points(world, true_cam)
        corr = [(WorldPoint(*w), PixelPoint(*p)) for w, p in zip(world, px)]
        save_correspondences(outdir / "corr.csv", corr)
        code = run(["calibrate", "--correspondences", str(outdir / "corr.csv"),
                    "--initial", str(camera_file), "--out", "fitted.json"])
        assert code == 0
        fitted = CameraParams.load(outdir / "fitted.json")
        assert fitted.fx == pytest.approx(870.0, rel=1e-6)
        assert "RMSE" in capsys.readouterr().out

    def test_too_few_correspondences_is_numerical_error(self, outdir, camera_file, capsys):
        (outdir / "corr.csv").write_text(
            "x_in,y_in,z_in,u_px,v_px\n0,0,100,1024,1024\n10,0,100,1050,1024\n")
        code = run(["calibrate", "--correspondences", str(outdir / "corr.csv"),
                    "--initial", str(camera_file), "--out", "fitted.json"])
        assert code == 4
        assert "SingularFit" in capsys.readouterr().err


class TestTrainEstimateEvaluate:
    def train_tiny_model(self, outdir):
        assert run(["synth", "--mode", "grid", "--rows", "5", "--cols", "5",
                    "--origin-x", "-25", "--origin-y", "25", "--out", "pairs.csv"]) == 0
        assert run(["train", "--data", str(outdir / "pairs.csv"), "--out", "model.json",
                    "--epochs", "3", "--seed", "0"]) == 0
        return outdir / "model.json"

    def test_train_then_estimate(self, outdir):
        model_path = self.train_tiny_model(outdir)
        MlpModel.load(model_path)  # valid, versioned model file
        det, _ = make_scene_files(outdir)
        assert run(["estimate", "--detections", str(det), "--mlp", str(model_path),
                    "--out", "est.csv"]) == 0
        rows = (outdir / "est.csv").read_text().splitlines()
        assert rows[0] == "id_a,id_b,distance_in"
        assert len(rows) == 1 + 16 * 15 // 2

    def test_estimate_geometry(self, outdir, camera_file):
        det, _ = make_scene_files(outdir)
        assert run(["estimate", "--detections", str(det), "--geometry",
                    "--camera", str(camera_file), "--height", "65",
                    "--alpha", "0.1", "--out", "est.csv"]) == 0

    def test_evaluate_geometry_report(self, outdir, camera_file, capsys):
        det, gt = make_scene_files(outdir)
        code = run(["evaluate", "--detections", str(det), "--gt", str(gt),
                    "--geometry", "--camera", str(camera_file), "--height", "70",
                    "--output-json", "report.json"])
        assert code == 0
        out = capsys.readouterr().out
        assert "CCR" in out and "MAE" in out
        payload = json.loads((outdir / "report.json").read_text())
        assert set(payload["mae_in"]) == {"V-V", "V-O", "O-O", "All"}
        assert payload["violations"]["tp"] + payload["violations"]["tn"] + \
            payload["violations"]["fp"] + payload["violations"]["fn"] == 120

    def test_estimator_flags_are_exclusive(self, outdir, camera_file, capsys):
        det, gt = make_scene_files(outdir)
        assert run(["evaluate", "--detections", str(det), "--gt", str(gt)]) == 2
        assert run(["evaluate", "--detections", str(det), "--gt", str(gt),
                    "--geometry", "--mlp", "x.json",
                    "--camera", str(camera_file)]) == 2
        assert run(["evaluate", "--detections", str(det), "--gt", str(gt),
                    "--geometry"]) == 2

    def test_sweep_alpha(self, outdir, camera_file):
        det, gt = make_scene_files(outdir)
        code = run(["sweep-alpha", "--detections", str(det), "--gt", str(gt),
                    "--geometry", "--camera", str(camera_file),
                    "--alpha-min", "0.0", "--alpha-max", "0.3", "--step", "0.1",
                    "--out", "sweep.csv"])
        assert code == 0
        rows = (outdir / "sweep.csv").read_text().splitlines()
        assert rows[0] == "alpha,category,mae_in"
        alphas = {r.split(",")[0] for r in rows[1:]}
        assert alphas == {"0.0000", "0.1000", "0.2000"}


class TestStatsCommand:
    def test_stats_on_shipped_fixture(self, outdir, capsys):
        from fisheyedist.dataio import depof_fixture_path

        code = run(["stats",
                    "--detections", str(depof_fixture_path("depof_fixed_detections.jsonl")),
                    "--gt", str(depof_fixture_path("depof_fixed_gt.csv")),
                    "--output-json", "stats.json"])
        assert code == 0
        payload = json.loads((outdir / "stats.json").read_text())
        assert payload["n_pairs"] == 73
        assert payload["bucket_counts"] == [25, 15, 33]


class TestErrorsAndConfig:
    def test_missing_file_is_data_error(self, outdir, capsys):
        assert run(["stats", "--detections", "nope.jsonl", "--gt", "nope.csv"]) == 3
        assert "error" in capsys.readouterr().err

    def test_unknown_command_is_usage_error(self, capsys):
        assert run(["frobnicate"]) == 2

    def test_version_flag(self, capsys):
        assert run(["--version"]) == 0

    def test_config_file_overrides_defaults(self, outdir):
        cfg = outdir / "cfg.json"
        cfg.write_text(json.dumps({"rows": 4, "cols": 4, "origin_x": -20.0,
                                   "origin_y": 20.0, "out": "cfg_pairs.csv"}))
        assert run(["synth", "--mode", "grid", "--config", str(cfg)]) == 0
        rows = (outdir / "cfg_pairs.csv").read_text().splitlines()
        assert len(rows) == 1 + 16 * 15 // 2

    def test_bad_config_is_data_error(self, outdir, capsys):
        cfg = outdir / "cfg.json"
        cfg.write_text("{not json")
        assert run(["synth", "--mode", "grid", "--config", str(cfg)]) == 3

    def test_out_dir_env_is_respected(self, outdir):
        det, _ = make_scene_files(outdir)
        assert det.parent == outdir
