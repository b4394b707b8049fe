"""Compression- and noise-residual forensics: JPEG error levels and high-pass residuals."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.ndimage import convolve

from morphdet.dataset import AlignedFace

from .types import FeatureError, FeatureMap, FeatureVector

DEFAULT_ELA_QUALITY = 70


def jpeg_roundtrip(pixels: np.ndarray, quality: int) -> np.ndarray:
    """Encode a grayscale uint8 array as baseline JPEG and decode it again."""
    buf = io.BytesIO()
    try:
        Image.fromarray(pixels, mode="L").save(buf, format="JPEG", quality=quality, subsampling=0)
        buf.seek(0)
        with Image.open(buf) as img:
            return np.asarray(img.convert("L"), dtype=np.uint8)
    except (OSError, ValueError) as exc:
        raise FeatureError(f"JPEG codec failed at quality {quality}: {exc}") from exc


def extract_ela(
    face: AlignedFace, quality: int = DEFAULT_ELA_QUALITY
) -> tuple[FeatureMap, FeatureVector]:
    """Error-level analysis: per-pixel |original - recompressed| residual.

    The classifier sees the raw residual; the map's display range stretches it
    to full contrast (gain 255/max(residual, 1)) so inconsistencies stand out.
    """
    if not 1 <= quality <= 100:
        raise FeatureError(f"ELA quality must be in [1, 100], got {quality}")
    recompressed = jpeg_roundtrip(face.pixels, quality)
    residual = np.abs(face.pixels.astype(np.float64) - recompressed.astype(np.float64))
    top = max(float(residual.max()), 1.0)
    fmap = FeatureMap(values=residual, method="ELA", display_range=(0.0, top))
    vec = FeatureVector(values=residual.ravel(), method="ELA")
    return fmap, vec


@dataclass(frozen=True)
class ResidualKernel:
    """High-pass kernel stored as integer weights over a common divisor."""

    name: str
    weights: np.ndarray   # int-valued float64
    scale: float

    @property
    def kernel(self) -> np.ndarray:
        return self.weights / self.scale


def load_srm_kernels(path: str | Path | None = None) -> list[ResidualKernel]:
    """Load the residual filter bank; defaults to the bank shipped with the package."""
    if path is None:
        text = resources.files("morphdet.features").joinpath("data/srm_kernels.json").read_text()
    else:
        text = Path(path).read_text()
    payload = json.loads(text)
    kernels = []
    for entry in payload["kernels"]:
        weights = np.asarray(entry["weights"], dtype=np.float64)
        if weights.ndim != 2 or weights.shape[0] != weights.shape[1]:
            raise FeatureError(f"residual kernel {entry.get('name')!r} is not square")
        if weights.sum() != 0:
            raise FeatureError(f"residual kernel {entry.get('name')!r} is not zero-sum")
        kernels.append(
            ResidualKernel(name=entry["name"], weights=weights, scale=float(entry["scale"]))
        )
    if not kernels:
        raise FeatureError("residual kernel bank is empty")
    return kernels


def extract_srm(
    face: AlignedFace, kernels: list[ResidualKernel] | None = None
) -> tuple[FeatureMap, FeatureVector]:
    """Noise residuals from fixed high-pass kernels, one output channel per kernel.

    Convolution runs on the integer weights first (exact in float64) and divides
    by the kernel scale afterwards, so constant inputs give exactly zero.
    """
    if kernels is None:
        kernels = load_srm_kernels()
    if len(kernels) != 3:
        raise FeatureError(f"residual bank must hold 3 kernels for 3-channel output, got {len(kernels)}")
    x = face.pixels.astype(np.float64)
    channels = []
    for k in kernels:
        resp = convolve(x, k.weights, mode="reflect") / k.scale
        channels.append(resp)
    stacked = np.stack(channels, axis=-1)
    lo = float(stacked.min())
    hi = float(stacked.max())
    if lo == hi:
        hi = lo + 1.0   # degenerate (e.g. constant input): zeros render black
    fmap = FeatureMap(values=stacked, method="SRM", display_range=(lo, hi))
    vec = FeatureVector(values=np.concatenate([c.ravel() for c in channels]), method="SRM")
    return fmap, vec
