"""Shared fixtures: synthetic faces and a three-tool toy corpus on disk."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from morphdet.dataset import FACE_HEIGHT, FACE_WIDTH, AlignedFace


def constant_face(value: int = 128) -> AlignedFace:
    return AlignedFace(
        pixels=np.full((FACE_HEIGHT, FACE_WIDTH), value, dtype=np.uint8), provenance="const"
    )


def random_face(seed: int = 0) -> AlignedFace:
    rng = np.random.default_rng(seed)
    return AlignedFace(
        pixels=rng.integers(0, 256, size=(FACE_HEIGHT, FACE_WIDTH), dtype=np.uint8),
        provenance=f"rand{seed}",
    )


def smooth_base(rng: np.random.Generator) -> np.ndarray:
    """Low-frequency blobby image, a crude stand-in for an unremarkable portrait."""
    ys, xs = np.mgrid[0:FACE_HEIGHT, 0:FACE_WIDTH].astype(np.float64)
    img = 120.0 + 60.0 * np.sin(2 * np.pi * xs / FACE_WIDTH * rng.uniform(0.5, 2.0))
    img += 50.0 * np.cos(2 * np.pi * ys / FACE_HEIGHT * rng.uniform(0.5, 2.0))
    cx = rng.uniform(0.3, 0.7) * FACE_WIDTH
    cy = rng.uniform(0.3, 0.7) * FACE_HEIGHT
    img += 40.0 * np.exp(-(((xs - cx) / 40.0) ** 2 + ((ys - cy) / 50.0) ** 2))
    img += rng.normal(0.0, 2.0, size=img.shape)
    return img


def smooth_face(seed: int = 0) -> AlignedFace:
    rng = np.random.default_rng(seed)
    img = smooth_base(rng)
    return AlignedFace(
        pixels=np.floor(img + 0.5).clip(0, 255).astype(np.uint8), provenance=f"smooth{seed}"
    )


def _tool_signature(base: np.ndarray, tool: str, rng: np.random.Generator) -> np.ndarray:
    """Plant a tool-specific artefact pattern on a smooth base image."""
    ys, xs = np.mgrid[0:FACE_HEIGHT, 0:FACE_WIDTH].astype(np.float64)
    img = base.copy()
    if tool == "gridtool":
        img += 18.0 * np.sin(2 * np.pi * xs / 6.0) * np.sin(2 * np.pi * ys / 6.0)
    elif tool == "noisetool":
        img += rng.normal(0.0, 14.0, size=img.shape)
    elif tool == "blocktool":
        blocky = img.reshape(FACE_HEIGHT // 8, 8, FACE_WIDTH // 4, 4).mean(axis=(1, 3))
        img = 0.4 * img + 0.6 * np.repeat(np.repeat(blocky, 8, axis=0), 4, axis=1)
        img += rng.normal(0.0, 3.0, size=img.shape)
    else:
        raise ValueError(tool)
    return img


TOY_TOOLS = ("blocktool", "gridtool", "noisetool")
TOY_BONAFIDE = 36
TOY_PER_TOOL = 24


def build_toy_corpus(root: Path, seed: int = 7) -> Path:
    """Write a small synthetic corpus and its manifest; returns the manifest path."""
    rng = np.random.default_rng(seed)
    images = root / "images"
    images.mkdir(parents=True, exist_ok=True)
    rows = []
    for i in range(TOY_BONAFIDE):
        pixels = np.floor(smooth_base(rng) + 0.5).clip(0, 255).astype(np.uint8)
        name = f"bf{i:03d}"
        Image.fromarray(pixels, mode="L").save(images / f"{name}.png")
        rows.append([name, f"images/{name}.png", "bonafide", "none", "TOY"])
    for tool in TOY_TOOLS:
        for i in range(TOY_PER_TOOL):
            pixels = _tool_signature(smooth_base(rng), tool, rng)
            pixels = np.floor(pixels + 0.5).clip(0, 255).astype(np.uint8)
            name = f"{tool}{i:03d}"
            Image.fromarray(pixels, mode="L").save(images / f"{name}.png")
            rows.append([name, f"images/{name}.png", "morph", tool, "TOY"])
    manifest = root / "manifest.csv"
    with manifest.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "path", "label", "tool", "source_db"])
        writer.writerows(rows)
    return manifest


@pytest.fixture(scope="session")
def toy_manifest(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("toycorpus")
    return build_toy_corpus(root)
