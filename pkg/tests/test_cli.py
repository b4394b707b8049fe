"""Command-line behaviour: exit codes, outputs, end-to-end pipeline."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from morphdet.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main

from conftest import constant_face, smooth_face


@pytest.fixture()
def face_png(tmp_path: Path) -> Path:
    path = tmp_path / "suspect.png"
    Image.fromarray(smooth_face(5).pixels, mode="L").save(path)
    return path


def _tree_hashes(root: Path) -> dict[str, str]:
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file() and "cache" not in p.relative_to(root).parts
    }


class TestVisualize:
    def test_gallery_of_five_methods(self, face_png, tmp_path):
        out = tmp_path / "gallery"
        code = main([
            "visualize", "--image", str(face_png),
            "--methods", "ELA,DFT,DCT2,SVD,SRM", "--out", str(out),
        ])
        assert code == EXIT_OK
        for method in ("ELA", "DFT", "DCT2", "SVD", "SRM"):
            png = out / f"suspect_{method}.png"
            assert png.exists()
            meta = json.loads(png.with_suffix(".json").read_text())
            assert meta["method"] == method
            with Image.open(png) as img:
                assert img.size == (meta["width"], meta["height"])
        assert (out / "suspect_sheet.png").exists()

    def test_constant_srm_map_renders_black(self, tmp_path):
        flat = tmp_path / "flat.png"
        Image.fromarray(constant_face(128).pixels, mode="L").save(flat)
        out = tmp_path / "g2"
        assert main(["visualize", "--image", str(flat), "--methods", "SRM", "--out", str(out)]) == EXIT_OK
        with Image.open(out / "flat_SRM.png") as img:
            assert img.convert("L").getextrema() == (0, 0)

    def test_unknown_method_is_usage_error(self, face_png, tmp_path):
        code = main([
            "visualize", "--image", str(face_png), "--methods", "ELAX", "--out", str(tmp_path / "x"),
        ])
        assert code == EXIT_USAGE

    def test_histogram_method_reports_render_failure_but_continues(self, face_png, tmp_path, capsys):
        out = tmp_path / "g3"
        code = main([
            "visualize", "--image", str(face_png), "--methods", "FUSION_LBP,ELA", "--out", str(out),
        ])
        assert code == EXIT_OK
        assert (out / "suspect_ELA.png").exists()
        assert not (out / "suspect_FUSION_LBP.png").exists()
        assert "FUSION_LBP" in capsys.readouterr().err

    def test_missing_image_is_data_error(self, tmp_path):
        code = main([
            "visualize", "--image", str(tmp_path / "gone.png"), "--methods", "ELA",
            "--out", str(tmp_path / "x"),
        ])
        assert code == EXIT_DATA


class TestPipeline:
    def test_extract_train_score_eval(self, toy_manifest, tmp_path):
        features_dir = tmp_path / "features"
        assert main([
            "extract", "--manifest", str(toy_manifest),
            "--methods", "LBP81", "--out", str(features_dir),
        ]) == EXIT_OK
        model_path = tmp_path / "model.json"
        assert main([
            "train", "--features", str(features_dir / "LBP81.csv"),
            "--manifest", str(toy_manifest), "--out", str(model_path),
            "--n-trees", "8", "--seed", "1",
        ]) == EXIT_OK
        scores_path = tmp_path / "scores.csv"
        assert main([
            "score", "--model", str(model_path), "--features", str(features_dir / "LBP81.csv"),
            "--manifest", str(toy_manifest), "--out", str(scores_path),
        ]) == EXIT_OK
        eval_dir = tmp_path / "eval"
        assert main(["eval", "--scores", str(scores_path), "--out", str(eval_dir)]) == EXIT_OK
        report = json.loads((eval_dir / "report.json").read_text())
        assert set(report) == {"eer", "eer_threshold", "bpcer10", "bpcer20", "n_bf", "n_pais"}
        thresholds = json.loads((eval_dir / "thresholds.json").read_text())
        assert set(thresholds) == {"eer", "bpcer10", "bpcer20"}
        assert (eval_dir / "det.csv").read_text().startswith("threshold,apcer,bpcer")
        assert (eval_dir / "det.png").exists()

    def test_extract_npz_roundtrip(self, toy_manifest, tmp_path):
        out = tmp_path / "npz"
        assert main([
            "extract", "--manifest", str(toy_manifest), "--methods", "BSIF_NH",
            "--out", str(out), "--format", "npz",
        ]) == EXIT_OK
        from morphdet.featureio import read_vectors

        ids, method, matrix = read_vectors(out / "BSIF_NH.npz")
        assert method == "BSIF_NH"
        assert matrix.shape == (len(ids), 32)

    def test_preprocess_writes_canonical_faces(self, face_png, tmp_path):
        out = tmp_path / "canon"
        assert main(["preprocess", "--image", str(face_png), "--out", str(out)]) == EXIT_OK
        png = out / "suspect.png"
        sidecar = json.loads(png.with_suffix(".json").read_text())
        with Image.open(png) as img:
            arr = np.asarray(img)
        assert arr.shape == (240, 180)
        assert sidecar["sha256"] == hashlib.sha256(arr.tobytes()).hexdigest()


class TestLooCommand:
    def _config(self, toy_manifest: Path, path: Path, out: Path) -> Path:
        payload = {
            "manifest": str(toy_manifest),
            "out_dir": str(out),
            "seed": 3,
            "features": ["LBP81", "BSIF_NH"],
            "forest": {"n_trees": 6, "seed": 0},
        }
        path.write_text(json.dumps(payload))
        return path

    def test_run_directory_and_deterministic_rerun(self, toy_manifest, tmp_path):
        config_a = self._config(toy_manifest, tmp_path / "a.json", tmp_path / "runA")
        config_b = self._config(toy_manifest, tmp_path / "b.json", tmp_path / "runB")
        assert main(["loo", "--config", str(config_a)]) == EXIT_OK
        assert main(["loo", "--config", str(config_b)]) == EXIT_OK
        run_a, run_b = tmp_path / "runA", tmp_path / "runB"
        assert (run_a / "report.json").exists()
        assert (run_a / "summary.csv").exists()
        assert (run_a / "plots" / "summary.png").exists()
        det_plots = list((run_a / "plots").glob("det_*.png"))
        assert len(det_plots) == 3 * 2  # rounds x features
        assert _tree_hashes(run_a) == _tree_hashes(run_b)

    def test_missing_field_is_usage_error(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"out_dir": "x"}))
        assert main(["loo", "--config", str(bad)]) == EXIT_USAGE

    def test_unresolvable_dataset_is_data_error(self, tmp_path):
        config = tmp_path / "c.json"
        config.write_text(json.dumps({"manifest": "missing.csv", "out_dir": str(tmp_path / "o")}))
        assert main(["loo", "--config", str(config)]) == EXIT_DATA


class TestArgparseContract:
    def test_unknown_flag_is_usage_error(self):
        assert main(["eval", "--scores", "x.csv", "--out", "y", "--bogus"]) == EXIT_USAGE

    def test_unknown_command_is_usage_error(self):
        assert main(["frobnicate"]) == EXIT_USAGE

    def test_help_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["--help"])
        assert err.value.code == 0
        assert "preprocess" in capsys.readouterr().out
