"""Binarised statistical image features over pre-learned linear filter banks.

Each bank holds `bits` zero-mean filters of size k x k. A pixel's code sets
bit i when filter i's response at that pixel is strictly positive; the code
image and its 2^bits-bin histogram (raw and normalised) are the features.

Banks live in JSON data files so alternative filter sets can be dropped in.
The shipped banks are deterministic surrogates: seeded Gaussian draws,
decorrelated by orthonormalisation against the constant direction, then
quantised to dyadic rationals so a constant input always produces an exactly
zero response.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.ndimage import convolve

from morphdet.dataset import AlignedFace

from .types import FeatureError, FeatureMap, FeatureVector

# The classic grid: odd sizes 3..17 crossed with 5..12 bits, minus the four
# 3x3 combinations that would need more independent zero-mean filters than a
# 9-pixel window offers. 60 banks in total.
BANK_SIZES = (3, 5, 7, 9, 11, 13, 15, 17)
BANK_BITS = (5, 6, 7, 8, 9, 10, 11, 12)

DEFAULT_CLASSIFY_BANK = "3x3_5bit"
DEFAULT_REPORT_BANK = "5x5_9bit"

_QUANT = 4096  # filter weights are integers / _QUANT, keeping float64 sums exact


@dataclass(frozen=True)
class BsifFilterBank:
    size: int
    bits: int
    filters: np.ndarray   # (bits, size, size) float64
    source_id: str

    def __post_init__(self) -> None:
        f = self.filters
        if self.bits < 1:
            raise FeatureError(f"bank needs at least 1 bit, got {self.bits}")
        if self.size % 2 == 0:
            raise FeatureError(f"filter size must be odd, got {self.size}")
        if f.shape != (self.bits, self.size, self.size):
            raise FeatureError(
                f"bank {self.source_id!r}: filters shape {f.shape} does not match "
                f"{self.bits} kernels of {self.size}x{self.size}"
            )
        means = f.reshape(self.bits, -1).mean(axis=1)
        if np.abs(means).max() > 1e-6:
            raise FeatureError(f"bank {self.source_id!r}: filters are not zero-mean")

    @property
    def n_codes(self) -> int:
        return 2**self.bits


def bank_grid() -> list[tuple[int, int]]:
    """All (size, bits) combinations shipped with the package."""
    out = []
    for size in BANK_SIZES:
        for bits in BANK_BITS:
            if bits <= size * size - 1:
                out.append((size, bits))
    return out


def make_surrogate_bank(size: int, bits: int) -> BsifFilterBank:
    """Deterministic zero-mean orthonormal filter bank for (size, bits).

    Gaussian draws are projected off the constant direction, orthonormalised
    by QR (sign-fixed), and quantised to multiples of 1/4096 with each
    filter's weight sum forced to exactly zero.
    """
    n = size * size
    if bits > n - 1:
        raise FeatureError(f"cannot build {bits} zero-mean filters of size {size}x{size}")
    import hashlib

    digest = hashlib.sha256(f"bsif-surrogate|{size}|{bits}".encode()).digest()
    rng = np.random.default_rng(np.random.SeedSequence(int.from_bytes(digest[:16], "big")))
    raw = rng.standard_normal((n, bits))
    raw -= raw.mean(axis=0, keepdims=True)
    q, _ = np.linalg.qr(raw)
    # Fix signs so the decomposition is unambiguous.
    signs = np.sign(q[np.abs(q).argmax(axis=0), np.arange(bits)])
    q = q * signs
    quantised = np.round(q * _QUANT).astype(np.int64)
    # Force each column's sum to zero by nudging its largest-magnitude entries.
    for j in range(bits):
        excess = int(quantised[:, j].sum())
        order = np.argsort(-np.abs(q[:, j]), kind="stable")
        i = 0
        while excess != 0:
            step = 1 if excess > 0 else -1
            quantised[order[i % n], j] -= step
            excess -= step
            i += 1
    filters = (quantised.T.astype(np.float64) / _QUANT).reshape(bits, size, size)
    return BsifFilterBank(
        size=size, bits=bits, filters=filters, source_id=f"surrogate_{size}x{size}_{bits}bit"
    )


def bank_to_json(bank: BsifFilterBank) -> str:
    payload = {
        "size": bank.size,
        "bits": bank.bits,
        "filters": [f.tolist() for f in bank.filters],
    }
    return json.dumps(payload)


def _bank_from_payload(payload: dict, source_id: str) -> BsifFilterBank:
    filters = np.asarray(payload["filters"], dtype=np.float64)
    return BsifFilterBank(
        size=int(payload["size"]), bits=int(payload["bits"]), filters=filters, source_id=source_id
    )


def load_bank(name_or_path: str | Path = DEFAULT_CLASSIFY_BANK) -> BsifFilterBank:
    """Load a filter bank by shipped name (e.g. "3x3_5bit") or by file path."""
    p = Path(name_or_path)
    if p.suffix == ".json":
        if not p.exists():
            raise FeatureError(f"filter bank file not found: {p}")
        return _bank_from_payload(json.loads(p.read_text()), source_id=p.stem)
    fname = f"bsif_{name_or_path}.json"
    res = resources.files("morphdet.features").joinpath(f"data/{fname}")
    try:
        text = res.read_text()
    except FileNotFoundError:
        raise FeatureError(f"no filter bank named {name_or_path!r} and no such file") from None
    return _bank_from_payload(json.loads(text), source_id=f"bsif_{name_or_path}")


def list_banks() -> list[str]:
    """Names of all shipped banks, usable with load_bank."""
    data_dir = resources.files("morphdet.features").joinpath("data")
    names = []
    for item in data_dir.iterdir():
        if item.name.startswith("bsif_") and item.name.endswith(".json"):
            names.append(item.name[len("bsif_") : -len(".json")])
    return sorted(names)


def bsif_code_image(pixels: np.ndarray, bank: BsifFilterBank) -> np.ndarray:
    """Per-pixel code in [0, 2^bits): bit i set where filter i responds positively."""
    x = pixels.astype(np.float64)
    codes = np.zeros(x.shape, dtype=np.int64)
    for i in range(bank.bits):
        response = convolve(x, bank.filters[i], mode="reflect")
        codes |= (response > 0).astype(np.int64) << i
    return codes


def extract_bsif(
    face: AlignedFace, bank: BsifFilterBank
) -> tuple[FeatureMap, FeatureVector, FeatureVector]:
    """Code image plus raw and normalised code histograms for one bank."""
    codes = bsif_code_image(face.pixels, bank)
    counts = np.bincount(codes.ravel(), minlength=bank.n_codes).astype(np.float64)
    fmap = FeatureMap(
        values=codes.astype(np.float64), method="BSIF_IM",
        display_range=(0.0, float(bank.n_codes - 1)),
    )
    raw = FeatureVector(values=counts, method="BSIF_H")
    normalised = FeatureVector(values=counts / counts.sum(), method="BSIF_NH")
    return fmap, raw, normalised
