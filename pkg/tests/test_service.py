"""HTTP service contract: health, methods, analyze, map serving, error paths."""

from __future__ import annotations

import io
import json
import threading
import urllib.error
import urllib.request
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from morphdet import features as feats
from morphdet.forest import ForestParams, save_model, train_forest
from morphdet.service import (
    ServiceError,
    ServiceState,
    load_models_dir,
    make_server,
)

from conftest import smooth_face, random_face


@pytest.fixture(scope="module")
def models_dir(tmp_path_factory) -> Path:
    """Tiny per-method models trained on a handful of synthetic faces."""
    out = tmp_path_factory.mktemp("models")
    faces = [smooth_face(i) for i in range(6)] + [random_face(i) for i in range(6)]
    labels = [0] * 6 + [1] * 6
    config = feats.FeatureConfig()
    for method in ("LBP81", "BSIF_NH"):
        X = np.stack([feats.extract(f, method, config)[1].values for f in faces])
        model = train_forest(X, labels, ForestParams(n_trees=5, seed=2), method=method)
        save_model(model, out / f"{method}.json")
    (out / "LBP81.thresholds.json").write_text(
        json.dumps({"eer": 0.4, "bpcer10": 0.3, "bpcer20": 0.6})
    )
    return out


@pytest.fixture(scope="module")
def server(models_dir):
    state = ServiceState(models=load_models_dir(models_dir))
    srv = make_server(state, host="127.0.0.1", port=0)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{srv.server_address[1]}"
    yield base
    srv.shutdown()
    srv.server_close()


def _get(url: str):
    with urllib.request.urlopen(url, timeout=10) as resp:
        return resp.status, resp.read(), resp.headers.get("Content-Type", "")


def _post(url: str, body: bytes, content_type: str):
    req = urllib.request.Request(url, data=body, headers={"Content-Type": content_type})
    with urllib.request.urlopen(req, timeout=30) as resp:
        return resp.status, resp.read()


def _png_bytes(seed: int = 3) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(smooth_face(seed).pixels, mode="L").save(buf, format="PNG")
    return buf.getvalue()


class TestEndpoints:
    def test_health(self, server):
        status, body, ctype = _get(f"{server}/v1/health")
        assert status == 200 and ctype == "application/json"
        payload = json.loads(body)
        assert payload["status"] == "ok"
        assert payload["version"]

    def test_methods_lists_loaded_models(self, server):
        _, body, _ = _get(f"{server}/v1/methods")
        payload = json.loads(body)
        assert [m["method"] for m in payload] == ["BSIF_NH", "LBP81"]
        lbp = next(m for m in payload if m["method"] == "LBP81")
        assert lbp["thresholds"] == {"eer": 0.4, "bpcer10": 0.3, "bpcer20": 0.6}

    def test_analyze_raw_image(self, server):
        status, body = _post(f"{server}/v1/analyze", _png_bytes(), "image/png")
        assert status == 200
        payload = json.loads(body)
        assert set(payload) == {"id", "scores", "maps"}
        methods = [s["method"] for s in payload["scores"]]
        assert methods == ["BSIF_NH", "LBP81"]
        for entry in payload["scores"]:
            assert 0.0 <= entry["score"] <= 1.0
            assert "eer_threshold" in entry
            assert set(entry["thresholds"]) == {"eer", "bpcer10", "bpcer20"}
        assert [m["method"] for m in payload["maps"]] == ["BSIF_NH", "LBP81"]
        for entry in payload["maps"]:
            assert entry["url"].startswith("/v1/maps/")
            assert len(entry["display_range"]) == 2

    def test_analyze_multipart(self, server):
        png = _png_bytes(4)
        boundary = "boundaryXYZ"
        body = (
            f"--{boundary}\r\n"
            'Content-Disposition: form-data; name="image"; filename="face.png"\r\n'
            "Content-Type: image/png\r\n\r\n"
        ).encode() + png + f"\r\n--{boundary}--\r\n".encode()
        status, raw = _post(
            f"{server}/v1/analyze", body, f"multipart/form-data; boundary={boundary}"
        )
        assert status == 200
        assert json.loads(raw)["scores"]

    def test_map_urls_serve_png(self, server):
        _, body = _post(f"{server}/v1/analyze", _png_bytes(5), "image/png")
        payload = json.loads(body)
        url = payload["maps"][0]["url"]
        status, data, ctype = _get(f"{server}{url}")
        assert status == 200 and ctype == "image/png"
        with Image.open(io.BytesIO(data)) as img:
            assert img.size == (180, 240)

    def test_method_filter(self, server):
        status, body = _post(f"{server}/v1/analyze?methods=LBP81", _png_bytes(6), "image/png")
        assert status == 200
        payload = json.loads(body)
        assert [s["method"] for s in payload["scores"]] == ["LBP81"]

    def test_non_image_payload_is_400(self, server):
        with pytest.raises(urllib.error.HTTPError) as err:
            _post(f"{server}/v1/analyze", b"definitely not an image", "image/png")
        assert err.value.code == 400

    def test_unsupported_content_type_is_400(self, server):
        with pytest.raises(urllib.error.HTTPError) as err:
            _post(f"{server}/v1/analyze", b"{}", "application/json")
        assert err.value.code == 400

    def test_unknown_method_filter_is_400(self, server):
        with pytest.raises(urllib.error.HTTPError) as err:
            _post(f"{server}/v1/analyze?methods=HOG", _png_bytes(7), "image/png")
        assert err.value.code == 400

    def test_unknown_route_is_404(self, server):
        with pytest.raises(urllib.error.HTTPError) as err:
            _get(f"{server}/v1/nope")
        assert err.value.code == 404

    def test_missing_map_is_404(self, server):
        with pytest.raises(urllib.error.HTTPError) as err:
            _get(f"{server}/v1/maps/deadbeef/LBP81.png")
        assert err.value.code == 404

    def test_same_image_gets_same_token(self, server):
        _, a = _post(f"{server}/v1/analyze", _png_bytes(8), "image/png")
        _, b = _post(f"{server}/v1/analyze", _png_bytes(8), "image/png")
        assert json.loads(a)["id"] == json.loads(b)["id"]


class TestStartupChecks:
    def test_dim_mismatch_is_startup_error(self, tmp_path):
        X = np.random.default_rng(0).random((10, 10))
        model = train_forest(X, [0, 1] * 5, ForestParams(n_trees=2, seed=0), method="LBP81")
        save_model(model, tmp_path / "LBP81.json")
        with pytest.raises(ServiceError, match="dim"):
            ServiceState(models=load_models_dir(tmp_path))

    def test_empty_models_dir_is_error(self, tmp_path):
        with pytest.raises(ServiceError, match="no model files"):
            load_models_dir(tmp_path)

    def test_unknown_method_tag_is_error(self, tmp_path):
        X = np.random.default_rng(0).random((10, 5))
        model = train_forest(X, [0, 1] * 5, ForestParams(n_trees=2, seed=0), method="MYSTERY")
        save_model(model, tmp_path / "m.json")
        with pytest.raises(ServiceError, match="MYSTERY"):
            load_models_dir(tmp_path)
