"""Uniform local binary patterns: code maps, histograms, radius fusion, patch grids.

Conventions: 8 neighbours sampled counter-clockwise starting at angle 0,
bilinear interpolation for off-grid points, a neighbour >= centre sets its
bit, and non-uniform codes (more than two circular 0/1 transitions) share a
single "other" label. That yields 58 uniform labels plus the other label:
a 59-symbol alphabet.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from morphdet.dataset import AlignedFace

from .types import FeatureError, FeatureMap, FeatureVector

LBP_POINTS = 8
N_UNIFORM = 58
OTHER_LABEL = 58
HIST_BINS = 59
N_RADII = 8
N_PATCHES = 8


@dataclass(frozen=True)
class LbpParams:
    points: int = LBP_POINTS
    radius: int = 1
    uniform: bool = True

    def __post_init__(self) -> None:
        if self.points != LBP_POINTS:
            raise FeatureError(f"only {LBP_POINTS}-point patterns are supported")
        if not 1 <= self.radius <= 8:
            raise FeatureError(f"radius must be in [1, 8], got {self.radius}")
        if not self.uniform:
            raise FeatureError("only the uniform mapping is supported")


def circular_transitions(code: int, points: int = LBP_POINTS) -> int:
    """Number of 0/1 transitions when the code's bits are read circularly."""
    bits = [(code >> i) & 1 for i in range(points)]
    return sum(bits[i] != bits[(i + 1) % points] for i in range(points))


def uniform_label_table(points: int = LBP_POINTS) -> np.ndarray:
    """Map each raw 8-bit code to its uniform label, or to the shared other label."""
    table = np.full(2**points, OTHER_LABEL, dtype=np.int64)
    uniform_codes = [c for c in range(2**points) if circular_transitions(c, points) <= 2]
    assert len(uniform_codes) == N_UNIFORM
    for label, code in enumerate(sorted(uniform_codes)):
        table[code] = label
    return table


_LABEL_TABLE = uniform_label_table()


def _sample_offsets(radius: int, points: int = LBP_POINTS) -> list[tuple[float, float]]:
    offsets = []
    for p in range(points):
        angle = 2.0 * np.pi * p / points
        dx = radius * np.cos(angle)
        dy = -radius * np.sin(angle)
        # Snap near-integer offsets so axis-aligned neighbours read exact pixels.
        if abs(dx - round(dx)) < 1e-9:
            dx = float(round(dx))
        if abs(dy - round(dy)) < 1e-9:
            dy = float(round(dy))
        offsets.append((dx, dy))
    return offsets


def ulbp_code_map(pixels: np.ndarray, radius: int) -> np.ndarray:
    """Uniform-LBP label map over the interior (a border of width `radius` is excluded)."""
    h, w = pixels.shape
    if h <= 2 * radius or w <= 2 * radius:
        raise FeatureError(f"image {w}x{h} has no interior at radius {radius}")
    img = pixels.astype(np.float64)
    centre = img[radius : h - radius, radius : w - radius]
    ys, xs = np.mgrid[radius : h - radius, radius : w - radius]
    codes = np.zeros(centre.shape, dtype=np.int64)
    for bit, (dx, dy) in enumerate(_sample_offsets(radius)):
        nx = xs + dx
        ny = ys + dy
        x0 = np.floor(nx).astype(np.int64)
        y0 = np.floor(ny).astype(np.int64)
        fx = nx - x0
        fy = ny - y0
        x1 = np.minimum(x0 + 1, w - 1)
        y1 = np.minimum(y0 + 1, h - 1)
        v00 = img[y0, x0]
        v01 = img[y0, x1]
        v10 = img[y1, x0]
        v11 = img[y1, x1]
        val = (
            v00 * (1 - fx) * (1 - fy)
            + v01 * fx * (1 - fy)
            + v10 * (1 - fx) * fy
            + v11 * fx * fy
        )
        # Interpolating between equal corners is that value; keep it exact so
        # flat regions compare as equal to the centre.
        flat = (v00 == v01) & (v00 == v10) & (v00 == v11)
        val = np.where(flat, v00, val)
        codes |= (val >= centre).astype(np.int64) << bit
    return _LABEL_TABLE[codes]


def label_histogram(labels: np.ndarray) -> np.ndarray:
    """Normalised 59-bin histogram of a uniform-LBP label map."""
    if labels.size == 0:
        raise FeatureError("empty interior region, no codes to histogram")
    counts = np.bincount(labels.ravel(), minlength=HIST_BINS).astype(np.float64)
    return counts / counts.sum()


def extract_ulbp_map(face: AlignedFace, params: LbpParams) -> FeatureMap:
    labels = ulbp_code_map(face.pixels, params.radius)
    return FeatureMap(
        values=labels.astype(np.float64),
        method="LBP81" if params.radius == 1 else f"LBP8{params.radius}",
        display_range=(0.0, float(HIST_BINS - 1)),
    )


def ulbp_histogram(fmap: FeatureMap) -> FeatureVector:
    labels = fmap.values.astype(np.int64)
    return FeatureVector(values=label_histogram(labels), method=fmap.method)


def extract_lbp81(face: AlignedFace) -> tuple[FeatureMap, FeatureVector]:
    fmap = extract_ulbp_map(face, LbpParams(radius=1))
    return fmap, ulbp_histogram(fmap)


def ulbp_fusion(face: AlignedFace) -> FeatureVector:
    """Concatenated 59-bin histograms over radii 1..8 (dim 472)."""
    parts = [label_histogram(ulbp_code_map(face.pixels, r)) for r in range(1, N_RADII + 1)]
    return FeatureVector(values=np.concatenate(parts), method="FUSION_LBP")


def ulbp_patch_concat(face: AlignedFace, axis: str) -> FeatureVector:
    """Per-strip radius-1 histograms over 8 strips stacked along `axis` (dim 472).

    axis="vertical" cuts 8 horizontal bands stacked top to bottom;
    axis="horizontal" cuts 8 side-by-side columns.
    """
    if axis not in ("vertical", "horizontal"):
        raise FeatureError(f"axis must be vertical or horizontal, got {axis!r}")
    split_axis = 0 if axis == "vertical" else 1
    strips = np.array_split(face.pixels, N_PATCHES, axis=split_axis)
    parts = [label_histogram(ulbp_code_map(strip, 1)) for strip in strips]
    method = "VLBP" if axis == "vertical" else "HLBP"
    return FeatureVector(values=np.concatenate(parts), method=method)
