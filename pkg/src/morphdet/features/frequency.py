"""Frequency-domain features: log-magnitude spectrum and cosine transform."""

from __future__ import annotations

import numpy as np
from scipy.fft import dctn

from morphdet.dataset import AlignedFace

from .types import FeatureMap, FeatureVector


def log_magnitude_spectrum(pixels: np.ndarray) -> np.ndarray:
    """log(1 + |F|) of the 2-D DFT with the zero frequency shifted to the centre."""
    spectrum = np.fft.fft2(pixels.astype(np.float64))
    return np.log1p(np.abs(np.fft.fftshift(spectrum)))


def extract_dft(face: AlignedFace) -> tuple[FeatureMap, FeatureVector]:
    """Magnitude-only spectrum on a log scale, quadrants swapped so DC sits centred."""
    logmag = log_magnitude_spectrum(face.pixels)
    fmap = FeatureMap(values=logmag, method="DFT", display_range=(0.0, float(logmag.max() or 1.0)))
    vec = FeatureVector(values=logmag.ravel(), method="DFT")
    return fmap, vec


def dct2_coefficients(pixels: np.ndarray, blockwise: bool = False, block: int = 8) -> np.ndarray:
    """Orthonormal type-II 2-D DCT, whole-image by default or per 8x8 block.

    Blockwise mode transforms trailing partial blocks at their actual size, so
    any image dimensions are accepted.
    """
    x = pixels.astype(np.float64)
    if not blockwise:
        return dctn(x, type=2, norm="ortho")
    h, w = x.shape
    out = np.empty_like(x)
    for r in range(0, h, block):
        for c in range(0, w, block):
            tile = x[r : min(r + block, h), c : min(c + block, w)]
            out[r : r + tile.shape[0], c : c + tile.shape[1]] = dctn(tile, type=2, norm="ortho")
    return out


def extract_dct2(face: AlignedFace, blockwise: bool = False) -> tuple[FeatureMap, FeatureVector]:
    """Log-compressed magnitude of the orthonormal cosine-transform coefficients."""
    coeffs = dct2_coefficients(face.pixels, blockwise=blockwise)
    logmag = np.log1p(np.abs(coeffs))
    fmap = FeatureMap(values=logmag, method="DCT2", display_range=(0.0, float(logmag.max() or 1.0)))
    vec = FeatureVector(values=logmag.ravel(), method="DCT2")
    return fmap, vec
