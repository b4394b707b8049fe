"""Feature-vector file formats: wide CSV and a binary column store with JSON header."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


class FeatureIOError(ValueError):
    pass


def write_vectors_csv(path: str | Path, ids: list[str], method: str, matrix: np.ndarray) -> None:
    """Rows of id,method,v0..vN."""
    if matrix.ndim != 2 or matrix.shape[0] != len(ids):
        raise FeatureIOError(f"matrix shape {matrix.shape} does not match {len(ids)} ids")
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "method"] + [f"v{i}" for i in range(matrix.shape[1])])
        for sample_id, row in zip(ids, matrix):
            writer.writerow([sample_id, method] + [repr(float(v)) for v in row])


def read_vectors_csv(path: str | Path) -> tuple[list[str], str, np.ndarray]:
    ids: list[str] = []
    rows: list[list[float]] = []
    method = ""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["id", "method"]:
            raise FeatureIOError(f"{path}: expected header starting with id,method")
        for line in reader:
            if not line:
                continue
            ids.append(line[0])
            if method and line[1] != method:
                raise FeatureIOError(f"{path}: mixed methods {method!r} and {line[1]!r}")
            method = line[1]
            rows.append([float(v) for v in line[2:]])
    if not rows:
        raise FeatureIOError(f"{path}: no feature rows")
    return ids, method, np.asarray(rows, dtype=np.float64)


def write_vectors_npz(path: str | Path, ids: list[str], method: str, matrix: np.ndarray) -> None:
    """Binary column store: .npz with values/ids plus a sibling JSON header."""
    path = Path(path)
    np.savez_compressed(path, values=matrix, ids=np.array(ids, dtype=object))
    header = {"method": method, "count": len(ids), "dim": int(matrix.shape[1])}
    path.with_suffix(".json").write_text(json.dumps(header, sort_keys=True) + "\n")


def read_vectors_npz(path: str | Path) -> tuple[list[str], str, np.ndarray]:
    path = Path(path)
    header_path = path.with_suffix(".json")
    if not header_path.exists():
        raise FeatureIOError(f"missing JSON header for {path}")
    header = json.loads(header_path.read_text())
    with np.load(path, allow_pickle=True) as payload:
        matrix = payload["values"].astype(np.float64)
        ids = [str(v) for v in payload["ids"]]
    if matrix.shape != (header["count"], header["dim"]):
        raise FeatureIOError(
            f"{path}: matrix shape {matrix.shape} contradicts header {header}"
        )
    return ids, str(header["method"]), matrix


def read_vectors(path: str | Path) -> tuple[list[str], str, np.ndarray]:
    path = Path(path)
    if path.suffix == ".npz":
        return read_vectors_npz(path)
    return read_vectors_csv(path)
