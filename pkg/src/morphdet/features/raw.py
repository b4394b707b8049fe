"""Raw intensity feature."""

from __future__ import annotations

import numpy as np

from morphdet.dataset import AlignedFace

from .types import FeatureMap, FeatureVector


def extract_intensity(face: AlignedFace) -> tuple[FeatureMap, FeatureVector]:
    """Grayscale intensities normalised to [0, 1], flattened row-major."""
    norm = face.pixels.astype(np.float64) / 255.0
    fmap = FeatureMap(values=norm, method="RGB", display_range=(0.0, 1.0))
    vec = FeatureVector(values=norm.ravel(), method="RGB")
    return fmap, vec
