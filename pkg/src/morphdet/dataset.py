"""Manifest-driven image ingestion, face canonicalisation and train/test splits.

Every face entering the feature extractors is first normalised to a single
canonical raster: 180 wide by 240 high, single-channel, 8-bit. Alignment uses
eye landmarks from the manifest when present and falls back to an aspect-true
centre crop otherwise.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

FACE_WIDTH = 180
FACE_HEIGHT = 240

# Eye centres in the canonical frame: symmetric, at 40% of the height.
EYE_LEFT_TARGET = (58.0, 96.0)
EYE_RIGHT_TARGET = (122.0, 96.0)

BONAFIDE = "bonafide"
MORPH = "morph"
NO_TOOL = "none"

MANIFEST_HEADER = (
    "id", "path", "label", "tool", "source_db",
    "eye_lx", "eye_ly", "eye_rx", "eye_ry",
)


class ManifestError(ValueError):
    """A manifest file that cannot be loaded as-is."""


class PreprocessError(ValueError):
    """An image that cannot be brought to the canonical raster."""


@dataclass(frozen=True)
class SampleRecord:
    """One manifest row: an image file plus its ground truth."""

    id: str
    path: Path
    label: str                # "bonafide" | "morph"
    tool: str                 # morph-tool tag, "none" for bona fide
    source_db: str
    landmarks: tuple[tuple[float, float], tuple[float, float]] | None = None

    def __post_init__(self) -> None:
        if self.label not in (BONAFIDE, MORPH):
            raise ManifestError(f"unknown label {self.label!r} for id {self.id!r}")
        if self.label == BONAFIDE and self.tool != NO_TOOL:
            raise ManifestError(
                f"id {self.id!r}: bona fide rows must carry tool={NO_TOOL!r}, got {self.tool!r}"
            )
        if self.label == MORPH and self.tool == NO_TOOL:
            raise ManifestError(f"id {self.id!r}: morph rows must name a morphing tool")


@dataclass
class DatasetManifest:
    """An in-memory manifest: unique-id sample records plus a format version."""

    records: list[SampleRecord]
    version: str = "1"
    _by_id: dict[str, SampleRecord] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._by_id = {}
        for rec in self.records:
            if rec.id in self._by_id:
                raise ManifestError(f"duplicate id {rec.id!r}")
            self._by_id[rec.id] = rec

    def __len__(self) -> int:
        return len(self.records)

    def get(self, sample_id: str) -> SampleRecord:
        return self._by_id[sample_id]

    def ids(self) -> list[str]:
        return [r.id for r in self.records]

    def morph_tools(self) -> list[str]:
        return sorted({r.tool for r in self.records if r.label == MORPH})

    def counts(self) -> dict[tuple[str, str], int]:
        out: dict[tuple[str, str], int] = {}
        for r in self.records:
            key = (r.label, r.tool)
            out[key] = out.get(key, 0) + 1
        return out

    def subset(self, ids: list[str]) -> "DatasetManifest":
        return DatasetManifest([self._by_id[i] for i in ids], version=self.version)


@dataclass(frozen=True)
class AlignedFace:
    """Canonical 180x240 grayscale face raster with sample provenance."""

    pixels: np.ndarray        # uint8, shape (FACE_HEIGHT, FACE_WIDTH)
    provenance: str = ""

    def __post_init__(self) -> None:
        px = self.pixels
        if px.ndim != 2 or px.shape != (FACE_HEIGHT, FACE_WIDTH):
            raise PreprocessError(
                f"canonical face must be {FACE_WIDTH}x{FACE_HEIGHT} single channel, "
                f"got array of shape {px.shape}"
            )
        if px.dtype != np.uint8:
            raise PreprocessError(f"canonical face must be uint8, got {px.dtype}")

    def sha256(self) -> str:
        return hashlib.sha256(self.pixels.tobytes()).hexdigest()


@dataclass(frozen=True)
class SplitPair:
    """Disjoint train/test id sets produced by a seeded stratified split."""

    train: list[str]
    test: list[str]
    seed: int
    ratio: float


def load_manifest(path: str | Path, missing: str = "fail") -> DatasetManifest:
    """Load a manifest CSV.

    Columns: id,path,label,tool,source_db,eye_lx,eye_ly,eye_rx,eye_ry with the
    four eye columns optional or empty. Relative image paths are resolved
    against the manifest's directory. `missing` controls what happens when an
    image file does not exist: "fail" raises, "warn" prints to stderr and keeps
    the row, "ignore" keeps the row silently.
    """
    if missing not in ("fail", "warn", "ignore"):
        raise ValueError(f"missing policy must be fail|warn|ignore, got {missing!r}")
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"manifest not found: {path}")
    base = path.parent
    records: list[SampleRecord] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ManifestError(f"{path}: no records (empty file)") from None
        header = [h.strip() for h in header]
        required = list(MANIFEST_HEADER[:5])
        if header[: len(required)] != required:
            raise ManifestError(
                f"{path}: bad header {header!r}, expected it to start with {required!r}"
            )
        has_eyes = len(header) >= 9
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 5:
                raise ManifestError(f"{path}:{lineno}: expected at least 5 columns, got {len(row)}")
            sample_id, rel, label, tool, source_db = (c.strip() for c in row[:5])
            if not sample_id:
                raise ManifestError(f"{path}:{lineno}: empty id")
            landmarks = None
            if has_eyes and len(row) >= 9:
                eye_cells = [c.strip() for c in row[5:9]]
                filled = [c for c in eye_cells if c]
                if len(filled) == 4:
                    try:
                        lx, ly, rx, ry = (float(c) for c in eye_cells)
                    except ValueError:
                        raise ManifestError(f"{path}:{lineno}: non-numeric eye coordinates") from None
                    landmarks = ((lx, ly), (rx, ry))
                elif filled:
                    raise ManifestError(f"{path}:{lineno}: eye coordinates must be all present or all empty")
            img_path = Path(rel)
            if not img_path.is_absolute():
                img_path = base / img_path
            try:
                rec = SampleRecord(
                    id=sample_id, path=img_path, label=label.lower(),
                    tool=tool.lower() or NO_TOOL, source_db=source_db, landmarks=landmarks,
                )
            except ManifestError as exc:
                raise ManifestError(f"{path}:{lineno}: {exc}") from None
            if not img_path.exists():
                if missing == "fail":
                    raise ManifestError(f"{path}:{lineno}: image file not found: {img_path}")
                if missing == "warn":
                    import sys
                    print(f"warning: {path}:{lineno}: image file not found: {img_path}", file=sys.stderr)
            records.append(rec)
    if not records:
        raise ManifestError(f"{path}: no records")
    return DatasetManifest(records)


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_HEADER)
        for r in manifest.records:
            eyes = ["", "", "", ""]
            if r.landmarks is not None:
                (lx, ly), (rx, ry) = r.landmarks
                eyes = [repr(lx), repr(ly), repr(rx), repr(ry)]
            writer.writerow([r.id, str(r.path), r.label, r.tool, r.source_db, *eyes])


def load_image(path: str | Path) -> np.ndarray:
    """Decode a PNG/JPEG file to a uint8 array, (H, W) or (H, W, 3)."""
    try:
        with Image.open(path) as img:
            img.load()
            if img.mode == "L":
                return np.asarray(img, dtype=np.uint8)
            return np.asarray(img.convert("RGB"), dtype=np.uint8)
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise PreprocessError(f"cannot decode image {path}: {exc}") from exc


def to_grayscale(image: np.ndarray) -> np.ndarray:
    """BT.601 luma (0.299, 0.587, 0.114), rounded half-up, so runs are bit-identical."""
    if image.ndim == 2:
        return image.astype(np.uint8, copy=False)
    if image.ndim != 3 or image.shape[2] not in (3, 4):
        raise PreprocessError(f"unsupported image shape {image.shape}")
    rgb = image[:, :, :3].astype(np.float64)
    luma = 0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]
    return np.floor(luma + 0.5).clip(0, 255).astype(np.uint8)


def _bilinear_sample(img: np.ndarray, xs: np.ndarray, ys: np.ndarray, fill: float = 0.0) -> np.ndarray:
    """Sample float64 image at fractional (x, y); constant fill outside."""
    h, w = img.shape
    inside = (xs >= -0.5) & (xs <= w - 0.5) & (ys >= -0.5) & (ys <= h - 0.5)
    xc = np.clip(xs, 0.0, w - 1.0)
    yc = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(xc).astype(np.int64)
    y0 = np.floor(yc).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xc - x0
    fy = yc - y0
    top = img[y0, x0] * (1.0 - fx) + img[y0, x1] * fx
    bot = img[y1, x0] * (1.0 - fx) + img[y1, x1] * fx
    out = top * (1.0 - fy) + bot * fy
    return np.where(inside, out, fill)


def _resize_bilinear(img: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    h, w = img.shape
    if (w, h) == (out_w, out_h):
        return img.copy()
    xs = (np.arange(out_w, dtype=np.float64) + 0.5) * (w / out_w) - 0.5
    ys = (np.arange(out_h, dtype=np.float64) + 0.5) * (h / out_h) - 0.5
    gx, gy = np.meshgrid(xs, ys)
    return _bilinear_sample(img, gx, gy)


def _center_crop_aspect(img: np.ndarray, aspect_w: int = 3, aspect_h: int = 4) -> np.ndarray:
    h, w = img.shape
    # Largest centred window with width:height = aspect_w:aspect_h.
    if w * aspect_h > h * aspect_w:
        crop_w = (h * aspect_w) // aspect_h
        x0 = (w - crop_w) // 2
        return img[:, x0 : x0 + crop_w]
    if w * aspect_h < h * aspect_w:
        crop_h = (w * aspect_h) // aspect_w
        y0 = (h - crop_h) // 2
        return img[y0 : y0 + crop_h, :]
    return img


def similarity_from_eyes(
    src_left: tuple[float, float], src_right: tuple[float, float]
) -> np.ndarray:
    """2x3 matrix mapping canonical-frame (x, y) back to source coordinates.

    The transform is the rotation+scale+translation that carries the source eye
    centres onto the canonical eye targets; returned in inverse form because
    warping samples the source image at transformed output coordinates.
    """
    p1 = complex(*src_left)
    p2 = complex(*src_right)
    q1 = complex(*EYE_LEFT_TARGET)
    q2 = complex(*EYE_RIGHT_TARGET)
    if p1 == p2:
        raise PreprocessError("eye landmarks coincide")
    a = (p2 - p1) / (q2 - q1)
    b = p1 - a * q1
    return np.array([[a.real, -a.imag, b.real], [a.imag, a.real, b.imag]], dtype=np.float64)


def preprocess_face(
    image: np.ndarray,
    landmarks: tuple[tuple[float, float], tuple[float, float]] | None = None,
    record_id: str = "",
) -> AlignedFace:
    """Normalise a decoded raster to the canonical 180x240 grayscale face.

    With eye landmarks, a similarity transform maps the eyes to fixed target
    coordinates; without them the image is centre-cropped to 3:4 and resized.
    Already-canonical grayscale input passes through pixel-identical.
    """
    if image.ndim not in (2, 3):
        raise PreprocessError(f"unsupported image shape {image.shape}")
    gray = to_grayscale(image)
    h, w = gray.shape
    if landmarks is not None:
        for name, (x, y) in zip(("left eye", "right eye"), landmarks):
            if not (0 <= x < w and 0 <= y < h):
                raise PreprocessError(f"{name} landmark ({x}, {y}) outside image {w}x{h}")
        inv = similarity_from_eyes(*landmarks)
        gx, gy = np.meshgrid(
            np.arange(FACE_WIDTH, dtype=np.float64), np.arange(FACE_HEIGHT, dtype=np.float64)
        )
        sx = inv[0, 0] * gx + inv[0, 1] * gy + inv[0, 2]
        sy = inv[1, 0] * gx + inv[1, 1] * gy + inv[1, 2]
        out = _bilinear_sample(gray.astype(np.float64), sx, sy)
    else:
        if (h, w) == (FACE_HEIGHT, FACE_WIDTH):
            return AlignedFace(pixels=gray.copy(), provenance=record_id)
        cropped = _center_crop_aspect(gray)
        out = _resize_bilinear(cropped.astype(np.float64), FACE_WIDTH, FACE_HEIGHT)
    pixels = np.floor(out + 0.5).clip(0, 255).astype(np.uint8)
    return AlignedFace(pixels=pixels, provenance=record_id)


def preprocess_record(record: SampleRecord) -> AlignedFace:
    return preprocess_face(load_image(record.path), landmarks=record.landmarks, record_id=record.id)


def _stratum_seed(seed: int, label: str, tool: str) -> int:
    digest = hashlib.sha256(f"{seed}|{label}|{tool}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def split_train_test(manifest: DatasetManifest, ratio: float, seed: int) -> SplitPair:
    """Deterministic stratified split: each (label, tool) stratum splits at `ratio`.

    Strata smaller than 2 cannot contribute to both sides and are an error.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    strata: dict[tuple[str, str], list[str]] = {}
    for rec in manifest.records:
        strata.setdefault((rec.label, rec.tool), []).append(rec.id)
    train: list[str] = []
    test: list[str] = []
    for key in sorted(strata):
        ids = sorted(strata[key])
        n = len(ids)
        if n < 2:
            raise ValueError(f"stratum {key} has {n} sample(s); cannot split")
        rng = np.random.default_rng(_stratum_seed(seed, *key))
        order = rng.permutation(n)
        n_train = int(np.floor(ratio * n + 0.5))
        n_train = min(max(n_train, 1), n - 1)
        shuffled = [ids[i] for i in order]
        train.extend(shuffled[:n_train])
        test.extend(shuffled[n_train:])
    return SplitPair(train=sorted(train), test=sorted(test), seed=seed, ratio=ratio)
