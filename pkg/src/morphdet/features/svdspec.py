"""Singular-value spectrum and low-rank reconstruction residual."""

from __future__ import annotations

import numpy as np

from morphdet.dataset import FACE_WIDTH, AlignedFace

from .types import FeatureError, FeatureMap, FeatureVector

DEFAULT_SVD_RANK = 20


def extract_svd(face: AlignedFace, k: int = DEFAULT_SVD_RANK) -> tuple[FeatureMap, FeatureVector]:
    """Full singular-value spectrum (log-compressed) plus the rank-k residual map.

    The residual |A - A_k| highlights image structure that the first k
    components cannot explain; the vector is log(1 + sigma_i) over all 180
    singular values.
    """
    if not 1 <= k <= FACE_WIDTH:
        raise FeatureError(f"rank k must be in [1, {FACE_WIDTH}], got {k}")
    a = face.pixels.astype(np.float64)
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise FeatureError(f"singular value decomposition failed: {exc}") from exc
    approx = (u[:, :k] * s[:k]) @ vt[:k, :]
    residual = np.abs(a - approx)
    top = max(float(residual.max()), 1e-12)
    fmap = FeatureMap(values=residual, method="SVD", display_range=(0.0, top))
    vec = FeatureVector(values=np.log1p(s), method="SVD")
    return fmap, vec
