"""HTTP inspection service: per-method morph scores and rendered feature maps.

Versioned JSON API under /v1:
  GET  /v1/health                     -> {"status", "version"}
  GET  /v1/methods                    -> [{"method", "config", "thresholds"}]
  POST /v1/analyze                    -> {"id", "scores": [...], "maps": [...]}
       body: raw image bytes (image/* content type) or multipart/form-data
       with an image file part; optional "methods" field/query filters methods.
  GET  /v1/maps/<token>/<METHOD>.png  -> rendered map for a previous analysis

Models are immutable after startup; each request is stateless apart from the
rendered-map store.
"""

from __future__ import annotations

import email.parser
import email.policy
import hashlib
import io
import json
import tempfile
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

import numpy as np
from PIL import Image

import morphdet
from morphdet import features as feats
from morphdet.dataset import preprocess_face
from morphdet.forest import ForestModel, load_model
from morphdet.render import save_map_png

DEFAULT_THRESHOLDS = {"eer": 0.5, "bpcer10": 0.5, "bpcer20": 0.5}


class ServiceError(RuntimeError):
    """Startup-time service misconfiguration."""


@dataclass
class LoadedModel:
    model: ForestModel
    thresholds: dict[str, float]


@dataclass
class ServiceState:
    models: dict[str, LoadedModel]
    config: feats.FeatureConfig = field(default_factory=feats.FeatureConfig)
    static_dir: Path | None = None
    map_store: dict[str, Path] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock)
    _tmp: tempfile.TemporaryDirectory | None = None

    def __post_init__(self) -> None:
        self._tmp = tempfile.TemporaryDirectory(prefix="morphdet-maps-")
        for method, loaded in self.models.items():
            expected = feats.vector_dim(method, self.config)
            if loaded.model.feature_dim != expected:
                raise ServiceError(
                    f"model for {method} expects dim {loaded.model.feature_dim}, "
                    f"but the configured extractor yields {expected}"
                )

    def map_dir(self, token: str) -> Path:
        with self._lock:
            if token not in self.map_store:
                d = Path(self._tmp.name) / token
                d.mkdir(parents=True, exist_ok=True)
                self.map_store[token] = d
            return self.map_store[token]


def load_models_dir(models_dir: str | Path) -> dict[str, LoadedModel]:
    """Load every *.json forest model in a directory, with optional
    *.thresholds.json sidecars carrying operating-point thresholds."""
    models_dir = Path(models_dir)
    if not models_dir.is_dir():
        raise ServiceError(f"models directory not found: {models_dir}")
    out: dict[str, LoadedModel] = {}
    for path in sorted(models_dir.glob("*.json")):
        if path.name.endswith(".thresholds.json"):
            continue
        model = load_model(path)
        if model.method not in feats.METHODS:
            raise ServiceError(f"{path}: model method {model.method!r} is not a known method")
        thresholds = dict(DEFAULT_THRESHOLDS)
        sidecar = path.with_name(path.stem + ".thresholds.json")
        if sidecar.exists():
            loaded = json.loads(sidecar.read_text())
            thresholds.update({k: float(v) for k, v in loaded.items() if k in thresholds})
        out[model.method] = LoadedModel(model=model, thresholds=thresholds)
    if not out:
        raise ServiceError(f"no model files in {models_dir}")
    return out


def _decode_image_payload(content_type: str, body: bytes) -> bytes:
    """Pull raw image bytes out of the request body."""
    main_type = content_type.split(";")[0].strip().lower()
    if main_type.startswith("image/"):
        return body
    if main_type == "multipart/form-data":
        raw = b"Content-Type: " + content_type.encode() + b"\r\n\r\n" + body
        msg = email.parser.BytesParser(policy=email.policy.default).parsebytes(raw)
        for part in msg.iter_parts():
            ctype = part.get_content_type()
            if ctype.startswith("image/") or part.get_filename():
                return part.get_payload(decode=True)
        raise ValueError("multipart body holds no image part")
    raise ValueError(f"unsupported content type {content_type!r}")


def analyze_image(
    state: ServiceState, image_bytes: bytes, methods: list[str] | None = None
) -> dict:
    """Score an uploaded image with every loaded model and render its maps."""
    try:
        with Image.open(io.BytesIO(image_bytes)) as img:
            img.load()
            if img.mode == "L":
                raster = np.asarray(img, dtype=np.uint8)
            else:
                raster = np.asarray(img.convert("RGB"), dtype=np.uint8)
    except Exception as exc:
        raise ValueError(f"payload is not a decodable image: {exc}") from exc
    token = hashlib.sha256(image_bytes).hexdigest()[:16]
    face = preprocess_face(raster, record_id=token)
    wanted = list(state.models) if not methods else methods
    unknown = [m for m in wanted if m not in state.models]
    if unknown:
        raise ValueError(f"no model loaded for method(s): {unknown}")
    scores = []
    maps = []
    map_dir = state.map_dir(token)
    for method in sorted(wanted):
        loaded = state.models[method]
        fmap, vec = feats.extract(face, method, state.config)
        value = float(
            np.mean([t.predict_one(vec.values) for t in loaded.model.trees])
        )
        scores.append(
            {
                "method": method,
                "score": value,
                "eer_threshold": loaded.thresholds["eer"],
                "thresholds": dict(loaded.thresholds),
            }
        )
        if fmap is not None:
            png = map_dir / f"{method}.png"
            save_map_png(fmap, png, sidecar=False)
            maps.append(
                {
                    "method": method,
                    "url": f"/v1/maps/{token}/{method}.png",
                    "display_range": [fmap.display_range[0], fmap.display_range[1]],
                }
            )
    return {"id": token, "scores": scores, "maps": maps}


class _Handler(BaseHTTPRequestHandler):
    state: ServiceState  # injected by make_server

    def log_message(self, fmt, *args):  # keep test output quiet
        pass

    def _send_json(self, payload: dict | list, status: int = 200) -> None:
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_bytes(self, data: bytes, content_type: str, status: int = 200) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self) -> None:
        parsed = urlparse(self.path)
        parts = [p for p in parsed.path.split("/") if p]
        try:
            if parts[:2] == ["v1", "health"]:
                self._send_json({"status": "ok", "version": morphdet.__version__})
                return
            if parts[:2] == ["v1", "methods"]:
                payload = [
                    {
                        "method": m,
                        "config": self.state.config.describe(m),
                        "thresholds": dict(loaded.thresholds),
                    }
                    for m, loaded in sorted(self.state.models.items())
                ]
                self._send_json(payload)
                return
            if parts[:2] == ["v1", "maps"] and len(parts) == 4:
                token, fname = parts[2], parts[3]
                with self.state._lock:
                    base = self.state.map_store.get(token)
                target = (base / fname) if base else None
                if target is None or not target.is_file() or target.parent != base:
                    self._send_json({"error": "map not found"}, status=404)
                    return
                self._send_bytes(target.read_bytes(), "image/png")
                return
            if self.state.static_dir is not None:
                self._serve_static(parsed.path)
                return
            self._send_json({"error": "not found"}, status=404)
        except BrokenPipeError:
            pass
        except Exception as exc:
            self._send_json({"error": f"internal error: {exc}"}, status=500)

    def _serve_static(self, path: str) -> None:
        rel = path.lstrip("/") or "index.html"
        base = self.state.static_dir.resolve()
        target = (base / rel).resolve()
        if not str(target).startswith(str(base)) or not target.is_file():
            self._send_json({"error": "not found"}, status=404)
            return
        types = {".html": "text/html", ".js": "text/javascript", ".css": "text/css",
                 ".png": "image/png", ".json": "application/json", ".map": "application/json"}
        self._send_bytes(target.read_bytes(), types.get(target.suffix, "application/octet-stream"))

    def do_POST(self) -> None:
        parsed = urlparse(self.path)
        parts = [p for p in parsed.path.split("/") if p]
        if parts[:2] != ["v1", "analyze"]:
            self._send_json({"error": "not found"}, status=404)
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = self.rfile.read(length) if length else b""
            content_type = self.headers.get("Content-Type", "")
            query = parse_qs(parsed.query)
            methods = None
            if "methods" in query:
                methods = [m for raw in query["methods"] for m in raw.split(",") if m]
            image_bytes = _decode_image_payload(content_type, body)
            result = analyze_image(self.state, image_bytes, methods)
            self._send_json(result)
        except ValueError as exc:
            self._send_json({"error": str(exc)}, status=400)
        except BrokenPipeError:
            pass
        except Exception as exc:
            self._send_json({"error": f"internal error: {exc}"}, status=500)


def make_server(state: ServiceState, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (_Handler,), {"state": state})
    return ThreadingHTTPServer((host, port), handler)


def serve_forever(state: ServiceState, host: str, port: int) -> None:
    server = make_server(state, host, port)
    addr = server.server_address
    print(f"serving on http://{addr[0]}:{addr[1]}/v1 ({len(state.models)} models)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
