"""Rendering: feature maps to 8-bit PNGs, contact sheets, DET and summary plots.

Maps are contrast-stretched with their own display range and the range is
recorded in a sidecar JSON, so the stretched image stays traceable to the raw
values. DET plots use normal-deviate axes; data always ships alongside as CSV.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from PIL import Image  # noqa: E402

from morphdet.features import FeatureMap  # noqa: E402
from morphdet.metrics import DetCurve  # noqa: E402


def map_to_uint8(fmap: FeatureMap) -> np.ndarray:
    lo, hi = fmap.display_range
    if hi <= lo:
        hi = lo + 1.0
    scaled = (fmap.values - lo) / (hi - lo)
    return np.floor(scaled.clip(0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def save_map_png(fmap: FeatureMap, path: str | Path, sidecar: bool = True) -> Path:
    """Write the map as PNG; records method and display range next to it."""
    path = Path(path)
    arr = map_to_uint8(fmap)
    mode = "L" if arr.ndim == 2 else "RGB"
    Image.fromarray(arr, mode=mode).save(path, format="PNG")
    if sidecar:
        meta = {
            "method": fmap.method,
            "display_range": [fmap.display_range[0], fmap.display_range[1]],
            "width": fmap.width,
            "height": fmap.height,
        }
        path.with_suffix(".json").write_text(json.dumps(meta, sort_keys=True) + "\n")
    return path


def contact_sheet(
    images: list[tuple[str, np.ndarray]], path: str | Path, columns: int = 5, pad: int = 8
) -> Path:
    """Tile labelled uint8 images into one sheet, row-major in the given order."""
    if not images:
        raise ValueError("no images for contact sheet")
    cell_h = max(img.shape[0] for _, img in images)
    cell_w = max(img.shape[1] for _, img in images)
    label_h = 14
    cols = min(columns, len(images))
    rows = math.ceil(len(images) / cols)
    sheet = np.full(
        (rows * (cell_h + label_h + pad) + pad, cols * (cell_w + pad) + pad, 3), 32, dtype=np.uint8
    )
    out = Image.fromarray(sheet, mode="RGB")
    from PIL import ImageDraw

    draw = ImageDraw.Draw(out)
    for i, (label, img) in enumerate(images):
        r, c = divmod(i, cols)
        x0 = pad + c * (cell_w + pad)
        y0 = pad + r * (cell_h + label_h + pad)
        if img.ndim == 2:
            tile = Image.fromarray(img, mode="L").convert("RGB")
        else:
            tile = Image.fromarray(img, mode="RGB")
        out.paste(tile, (x0, y0 + label_h))
        draw.text((x0, y0), label, fill=(255, 255, 255))
    out.save(path, format="PNG")
    return Path(path)


def _normal_deviate(p: np.ndarray) -> np.ndarray:
    from scipy.stats import norm

    eps = 1e-6
    return norm.ppf(np.clip(p, eps, 1 - eps))


_DET_TICKS = np.array([0.001, 0.005, 0.01, 0.02, 0.05, 0.10, 0.20, 0.40])


def det_plot(
    curves: list[tuple[str, DetCurve, float]], path: str | Path, title: str = "DET curve"
) -> Path:
    """Plot DET curves on normal-deviate axes; legend shows EER in parentheses (%)."""
    fig, ax = plt.subplots(figsize=(5.5, 5.5))
    for label, curve, eer_value in curves:
        x = _normal_deviate(curve.apcers)
        y = _normal_deviate(curve.bpcers)
        order = np.argsort(x, kind="stable")
        ax.plot(x[order], y[order], label=f"{label} ({eer_value * 100:.2f}%)")
    ticks = _normal_deviate(_DET_TICKS)
    labels = [f"{t * 100:g}" for t in _DET_TICKS]
    ax.set_xticks(ticks, labels)
    ax.set_yticks(ticks, labels)
    ax.set_xlim(ticks[0], ticks[-1])
    ax.set_ylim(ticks[0], ticks[-1])
    ax.set_xlabel("APCER (%)")
    ax.set_ylabel("BPCER (%)")
    ax.set_title(title)
    ax.grid(True, alpha=0.4)
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return Path(path)


def summary_plot(summary: dict, path: str | Path) -> Path:
    """Grouped EER bars per feature and round, with a per-round average line."""
    rounds = summary["rounds"]
    if not rounds:
        raise ValueError("empty summary, nothing to plot")
    features = list(rounds[0]["features"].keys())
    n_feat = len(features)
    n_rounds = len(rounds)
    width = 0.8 / max(n_rounds, 1)
    fig, ax = plt.subplots(figsize=(max(8.0, 0.8 * n_feat), 4.5))
    xs = np.arange(n_feat)
    for i, rnd in enumerate(rounds):
        vals = [rnd["features"][f] if rnd["features"][f] is not None else np.nan for f in features]
        offset = (i - (n_rounds - 1) / 2) * width
        ax.bar(xs + offset, vals, width=width, label=f"held out: {rnd['round']}")
        if rnd["average"] is not None:
            ax.plot(
                [xs[0] - 0.5, xs[-1] + 0.5],
                [rnd["average"], rnd["average"]],
                linestyle=":",
                linewidth=1.2,
                color=ax.patches[-1].get_facecolor(),
            )
    ax.set_xticks(xs, features, rotation=45, ha="right")
    ax.set_ylabel("EER")
    ax.set_title("Leave-one-tool-out EER by feature method")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return Path(path)
