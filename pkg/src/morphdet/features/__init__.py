"""Feature methods: fourteen extractors, each yielding a renderable map and/or
a flat descriptor, plus the dispatch used by the evaluation harness and service.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from morphdet.dataset import FACE_HEIGHT, FACE_WIDTH, AlignedFace, preprocess_face

from .bsif import (
    BANK_BITS,
    BANK_SIZES,
    DEFAULT_CLASSIFY_BANK,
    DEFAULT_REPORT_BANK,
    BsifFilterBank,
    bank_grid,
    bsif_code_image,
    extract_bsif,
    list_banks,
    load_bank,
    make_surrogate_bank,
)
from .forensics import (
    DEFAULT_ELA_QUALITY,
    ResidualKernel,
    extract_ela,
    extract_srm,
    jpeg_roundtrip,
    load_srm_kernels,
)
from .frequency import dct2_coefficients, extract_dct2, extract_dft, log_magnitude_spectrum
from .hog import cell_histograms, extract_hog
from .lbp import (
    LbpParams,
    extract_lbp81,
    extract_ulbp_map,
    ulbp_code_map,
    ulbp_fusion,
    ulbp_histogram,
    ulbp_patch_concat,
    uniform_label_table,
)
from .raw import extract_intensity
from .svdspec import DEFAULT_SVD_RANK, extract_svd
from .types import FeatureError, FeatureMap, FeatureVector, fuse_vectors

METHODS = (
    "RGB", "ELA", "SRM", "DCT2", "DFT", "LBP81", "FUSION_LBP",
    "HOG", "SVD", "VLBP", "HLBP", "BSIF_IM", "BSIF_H", "BSIF_NH",
)


@dataclass
class FeatureConfig:
    """Per-method parameters shared by the CLI, harness and service."""

    ela_quality: int = DEFAULT_ELA_QUALITY
    bsif_bank: str = DEFAULT_CLASSIFY_BANK
    svd_k: int = DEFAULT_SVD_RANK
    dct_blockwise: bool = False
    srm_kernels_path: str | None = None
    _bank_cache: dict[str, BsifFilterBank] = field(default_factory=dict, repr=False)
    _srm_cache: list[ResidualKernel] | None = field(default=None, repr=False)

    def bank(self) -> BsifFilterBank:
        if self.bsif_bank not in self._bank_cache:
            self._bank_cache[self.bsif_bank] = load_bank(self.bsif_bank)
        return self._bank_cache[self.bsif_bank]

    def srm_bank(self) -> list[ResidualKernel]:
        if self._srm_cache is None:
            self._srm_cache = load_srm_kernels(self.srm_kernels_path)
        return self._srm_cache

    def describe(self, method: str) -> dict:
        """JSON-friendly parameter summary for one method."""
        if method == "ELA":
            return {"quality": self.ela_quality}
        if method in ("BSIF_IM", "BSIF_H", "BSIF_NH"):
            return {"bank": self.bsif_bank}
        if method == "SVD":
            return {"k": self.svd_k}
        if method == "DCT2":
            return {"blockwise": self.dct_blockwise}
        return {}

    def cache_key(self, method: str) -> str:
        import json

        return json.dumps({"method": method, **self.describe(method)}, sort_keys=True)


def extract(
    face: AlignedFace, method: str, config: FeatureConfig | None = None
) -> tuple[FeatureMap | None, FeatureVector]:
    """Run one named feature method on a canonical face.

    Histogram-concatenation methods (FUSION_LBP, VLBP, HLBP) have no single
    natural 2-D map and return None for it.
    """
    if config is None:
        config = FeatureConfig()
    if method == "RGB":
        return extract_intensity(face)
    if method == "ELA":
        return extract_ela(face, quality=config.ela_quality)
    if method == "SRM":
        return extract_srm(face, kernels=config.srm_bank())
    if method == "DCT2":
        return extract_dct2(face, blockwise=config.dct_blockwise)
    if method == "DFT":
        return extract_dft(face)
    if method == "LBP81":
        return extract_lbp81(face)
    if method == "FUSION_LBP":
        return None, ulbp_fusion(face)
    if method == "HOG":
        return extract_hog(face)
    if method == "SVD":
        return extract_svd(face, k=config.svd_k)
    if method == "VLBP":
        return None, ulbp_patch_concat(face, "vertical")
    if method == "HLBP":
        return None, ulbp_patch_concat(face, "horizontal")
    if method in ("BSIF_IM", "BSIF_H", "BSIF_NH"):
        fmap, raw, normalised = extract_bsif(face, config.bank())
        if method == "BSIF_IM":
            return fmap, FeatureVector(values=fmap.values.ravel(), method="BSIF_IM")
        return fmap, raw if method == "BSIF_H" else normalised
    raise FeatureError(f"unknown feature method {method!r}")


def _full_resolution_map(gray: np.ndarray, method: str, config: FeatureConfig) -> np.ndarray:
    from scipy.ndimage import convolve

    if method == "RGB":
        return gray.astype(np.float64) / 255.0
    if method == "DFT":
        return log_magnitude_spectrum(gray)
    if method == "DCT2":
        return np.log1p(np.abs(dct2_coefficients(gray)))
    if method == "ELA":
        rec = jpeg_roundtrip(gray, config.ela_quality)
        return np.abs(gray.astype(np.float64) - rec.astype(np.float64))
    if method == "SRM":
        x = gray.astype(np.float64)
        return np.stack(
            [convolve(x, k.weights, mode="reflect") / k.scale for k in config.srm_bank()], axis=-1
        )
    if method == "BSIF_IM":
        return bsif_code_image(gray, config.bank()).astype(np.float64)
    raise FeatureError(f"method {method!r} has no full-resolution map")


def extract_from_raster(
    raster: np.ndarray,
    method: str,
    config: FeatureConfig | None = None,
    record_id: str = "",
) -> tuple[FeatureMap | None, FeatureVector]:
    """Run a map-producing method on the original-resolution raster, then
    downscale the map to the canonical frame and re-flatten it.

    Keeps descriptor dimensions independent of the input size; methods whose
    descriptor is already resolution-free fall back to canonical extraction.
    """
    from morphdet.dataset import _resize_bilinear, to_grayscale

    if config is None:
        config = FeatureConfig()
    face = preprocess_face(raster, record_id=record_id)
    fmap, vec = extract(face, method, config)
    if method not in ("RGB", "ELA", "SRM", "DCT2", "DFT", "BSIF_IM"):
        return fmap, vec
    gray = to_grayscale(raster)
    if gray.shape == (FACE_HEIGHT, FACE_WIDTH):
        return fmap, vec
    big = _full_resolution_map(gray, method, config)
    if big.ndim == 2:
        values = _resize_bilinear(big, FACE_WIDTH, FACE_HEIGHT)
        flat = values.ravel()
    else:
        planes = [_resize_bilinear(big[:, :, c], FACE_WIDTH, FACE_HEIGHT) for c in range(3)]
        values = np.stack(planes, axis=-1)
        flat = np.concatenate([p.ravel() for p in planes])
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        hi = lo + 1.0
    out_map = FeatureMap(values=values, method=method, display_range=(lo, hi))
    return out_map, FeatureVector(values=flat, method=method)


def vector_dim(method: str, config: FeatureConfig | None = None) -> int:
    """Descriptor length for a method under a config, without touching real data."""
    if config is None:
        config = FeatureConfig()
    fixed = {
        "RGB": FACE_WIDTH * FACE_HEIGHT,
        "ELA": FACE_WIDTH * FACE_HEIGHT,
        "SRM": 3 * FACE_WIDTH * FACE_HEIGHT,
        "DCT2": FACE_WIDTH * FACE_HEIGHT,
        "DFT": FACE_WIDTH * FACE_HEIGHT,
        "BSIF_IM": FACE_WIDTH * FACE_HEIGHT,
        "LBP81": 59,
        "FUSION_LBP": 472,
        "VLBP": 472,
        "HLBP": 472,
        "SVD": FACE_WIDTH,
        "HOG": 9 * 11 * 4 * 9,
    }
    if method in fixed:
        return fixed[method]
    if method in ("BSIF_H", "BSIF_NH"):
        return config.bank().n_codes
    raise FeatureError(f"unknown feature method {method!r}")


__all__ = [
    "METHODS",
    "FeatureConfig",
    "FeatureError",
    "FeatureMap",
    "FeatureVector",
    "BsifFilterBank",
    "LbpParams",
    "ResidualKernel",
    "extract",
    "extract_from_raster",
    "extract_intensity",
    "extract_dft",
    "extract_dct2",
    "extract_ela",
    "extract_srm",
    "extract_svd",
    "extract_ulbp_map",
    "extract_lbp81",
    "extract_hog",
    "extract_bsif",
    "ulbp_histogram",
    "ulbp_fusion",
    "ulbp_patch_concat",
    "ulbp_code_map",
    "uniform_label_table",
    "fuse_vectors",
    "vector_dim",
    "load_bank",
    "list_banks",
    "make_surrogate_bank",
    "bank_grid",
    "bsif_code_image",
    "load_srm_kernels",
    "log_magnitude_spectrum",
    "dct2_coefficients",
    "cell_histograms",
    "jpeg_roundtrip",
    "DEFAULT_ELA_QUALITY",
    "DEFAULT_CLASSIFY_BANK",
    "DEFAULT_REPORT_BANK",
    "DEFAULT_SVD_RANK",
    "BANK_SIZES",
    "BANK_BITS",
]
