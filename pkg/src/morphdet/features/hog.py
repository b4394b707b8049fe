"""Oriented-gradient shape descriptor with a glyph visualisation.

The face is covered by a 10 x 12 grid of cells (18 x 20 pixels each). Gradients
come from centred differences; each cell accumulates magnitude into 9 unsigned
orientation bins over [0, 180). The descriptor is L2-normalised over 2 x 2 cell
blocks; the map draws one stroke per bin and cell, oriented along the edge
direction, with intensity proportional to the bin weight.
"""

from __future__ import annotations

import numpy as np

from morphdet.dataset import FACE_HEIGHT, FACE_WIDTH, AlignedFace

from .types import FeatureMap, FeatureVector

CELLS_X = 10
CELLS_Y = 12
N_BINS = 9
CELL_W = FACE_WIDTH // CELLS_X    # 18
CELL_H = FACE_HEIGHT // CELLS_Y   # 20
BLOCK = 2
_EPS = 1e-12


def gradients(pixels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Centred-difference x/y gradients with edge replication at the borders."""
    img = pixels.astype(np.float64)
    padded = np.pad(img, 1, mode="edge")
    gx = (padded[1:-1, 2:] - padded[1:-1, :-2]) / 2.0
    gy = (padded[2:, 1:-1] - padded[:-2, 1:-1]) / 2.0
    return gx, gy


def cell_histograms(pixels: np.ndarray) -> np.ndarray:
    """(CELLS_Y, CELLS_X, N_BINS) magnitude-weighted unsigned orientation histograms."""
    gx, gy = gradients(pixels)
    magnitude = np.hypot(gx, gy)
    orientation = np.mod(np.degrees(np.arctan2(gy, gx)), 180.0)
    bins = np.minimum((orientation / (180.0 / N_BINS)).astype(np.int64), N_BINS - 1)
    hists = np.zeros((CELLS_Y, CELLS_X, N_BINS), dtype=np.float64)
    for cy in range(CELLS_Y):
        for cx in range(CELLS_X):
            sl = (slice(cy * CELL_H, (cy + 1) * CELL_H), slice(cx * CELL_W, (cx + 1) * CELL_W))
            hists[cy, cx] = np.bincount(
                bins[sl].ravel(), weights=magnitude[sl].ravel(), minlength=N_BINS
            )
    return hists


def block_normalise(hists: np.ndarray) -> np.ndarray:
    """L2 normalisation over sliding 2x2 cell blocks, flattened."""
    ny, nx, _ = hists.shape
    blocks = []
    for by in range(ny - BLOCK + 1):
        for bx in range(nx - BLOCK + 1):
            v = hists[by : by + BLOCK, bx : bx + BLOCK].ravel()
            blocks.append(v / np.sqrt(np.sum(v * v) + _EPS))
    return np.concatenate(blocks)


def glyph_map(hists: np.ndarray) -> np.ndarray:
    """Render per-cell oriented strokes; stroke brightness follows bin weight."""
    canvas = np.zeros((FACE_HEIGHT, FACE_WIDTH), dtype=np.float64)
    peak = hists.max()
    if peak <= 0:
        return canvas
    half = min(CELL_W, CELL_H) / 2.0 - 1.0
    n_steps = 2 * int(np.ceil(half)) + 1
    ts = np.linspace(-half, half, n_steps)
    for cy in range(CELLS_Y):
        for cx in range(CELLS_X):
            centre_x = cx * CELL_W + CELL_W / 2.0
            centre_y = cy * CELL_H + CELL_H / 2.0
            for b in range(N_BINS):
                weight = hists[cy, cx, b] / peak
                if weight <= 0:
                    continue
                # Strokes run along the edge direction: orientation + 90 degrees.
                theta = np.radians((b + 0.5) * (180.0 / N_BINS) + 90.0)
                xs = np.clip(np.round(centre_x + ts * np.cos(theta)), 0, FACE_WIDTH - 1).astype(int)
                ys = np.clip(np.round(centre_y - ts * np.sin(theta)), 0, FACE_HEIGHT - 1).astype(int)
                np.maximum.at(canvas, (ys, xs), weight)
    return canvas


def extract_hog(face: AlignedFace) -> tuple[FeatureMap, FeatureVector]:
    hists = cell_histograms(face.pixels)
    vec = FeatureVector(values=block_normalise(hists), method="HOG")
    glyphs = glyph_map(hists)
    fmap = FeatureMap(values=glyphs, method="HOG", display_range=(0.0, max(float(glyphs.max()), 1e-12)))
    return fmap, vec
