"""Shared feature output containers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class FeatureError(ValueError):
    """Raised when an extractor cannot produce its output."""


@dataclass(frozen=True)
class FeatureMap:
    """2-D (or 3-channel, for residual-filter output) grid meant for rendering.

    `display_range` is the (low, high) window a renderer should map to black
    and white; values themselves are kept raw.
    """

    values: np.ndarray
    method: str
    display_range: tuple[float, float]

    def __post_init__(self) -> None:
        v = self.values
        if v.ndim not in (2, 3) or (v.ndim == 3 and v.shape[2] != 3):
            raise FeatureError(f"feature map must be (H, W) or (H, W, 3), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise FeatureError(f"{self.method}: non-finite values in feature map")

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    @property
    def channels(self) -> int:
        return 1 if self.values.ndim == 2 else int(self.values.shape[2])


@dataclass(frozen=True)
class FeatureVector:
    """Flat numeric descriptor fed to the classifier."""

    values: np.ndarray
    method: str

    def __post_init__(self) -> None:
        v = self.values
        if v.ndim != 1:
            raise FeatureError(f"feature vector must be 1-D, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise FeatureError(f"{self.method}: non-finite values in feature vector")

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


def fuse_vectors(parts: list[FeatureVector]) -> FeatureVector:
    """Feature-level fusion: concatenate descriptors in the given order."""
    if not parts:
        raise FeatureError("cannot fuse an empty list of feature vectors")
    values = np.concatenate([p.values for p in parts])
    method = "+".join(p.method for p in parts)
    return FeatureVector(values=values, method=method)
