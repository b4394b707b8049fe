"""Seeded, deterministic random forest for bona fide vs. morph scoring.

Trees split on Gini impurity with candidate thresholds at midpoints of
consecutive distinct feature values. Ties break towards the lowest feature
index, then the lowest threshold, so a (data, params, seed) triple fully
determines the model. Scores are the mean over trees of the leaf probability
of the morph class.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from morphdet.dataset import BONAFIDE, MORPH
from morphdet.metrics import Score

FORMAT_VERSION = 1


class ForestError(ValueError):
    """Training or model-file failure."""


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 300
    max_depth: int | None = None
    min_samples_leaf: int = 1
    features_per_split: str | int = "sqrt"
    bootstrap: bool = True
    balanced: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ForestError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.min_samples_leaf < 1:
            raise ForestError(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")
        if isinstance(self.features_per_split, str) and self.features_per_split not in (
            "sqrt", "log2", "all",
        ):
            raise ForestError(f"features_per_split must be sqrt|log2|all or an int")

    def n_candidates(self, n_features: int) -> int:
        rule = self.features_per_split
        if rule == "sqrt":
            return max(1, int(math.isqrt(n_features)))
        if rule == "log2":
            return max(1, int(math.log2(n_features))) if n_features > 1 else 1
        if rule == "all":
            return n_features
        return min(max(int(rule), 1), n_features)


@dataclass
class _Tree:
    """Flat node arrays: feature < 0 marks a leaf; prob is P(morph) at leaves."""

    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    prob: list[float] = field(default_factory=list)

    def add_leaf(self, p: float) -> int:
        return self._add(-1, 0.0, -1, -1, p)

    def add_split(self, f: int, thr: float) -> int:
        return self._add(f, thr, -1, -1, 0.0)

    def _add(self, f: int, thr: float, left: int, right: int, p: float) -> int:
        self.feature.append(f)
        self.threshold.append(thr)
        self.left.append(left)
        self.right.append(right)
        self.prob.append(p)
        return len(self.feature) - 1

    def predict_one(self, x: np.ndarray) -> float:
        i = 0
        while self.feature[i] >= 0:
            i = self.left[i] if x[self.feature[i]] <= self.threshold[i] else self.right[i]
        return self.prob[i]


@dataclass
class ForestModel:
    trees: list[_Tree]
    params: ForestParams
    feature_dim: int
    method: str
    training_digest: str

    def to_json(self) -> str:
        payload = {
            "format_version": FORMAT_VERSION,
            "feature_dim": self.feature_dim,
            "method": self.method,
            "params": asdict(self.params),
            "training_digest": self.training_digest,
            "trees": [
                {
                    "feature": t.feature,
                    "threshold": t.threshold,
                    "left": t.left,
                    "right": t.right,
                    "prob": t.prob,
                }
                for t in self.trees
            ],
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def _canonical_labels(y) -> np.ndarray:
    out = []
    for v in y:
        if isinstance(v, str):
            if v not in (BONAFIDE, MORPH):
                raise ForestError(f"unknown label {v!r}")
            out.append(1 if v == MORPH else 0)
        else:
            iv = int(v)
            if iv not in (0, 1):
                raise ForestError(f"labels must be 0/1 or bonafide/morph, got {v!r}")
            out.append(iv)
    return np.asarray(out, dtype=np.int64)


def _as_matrix(X) -> tuple[np.ndarray, str]:
    """Accept a 2-D array or a list of FeatureVector; return (matrix, method tag)."""
    if isinstance(X, np.ndarray):
        if X.ndim != 2:
            raise ForestError(f"feature matrix must be 2-D, got shape {X.shape}")
        return X.astype(np.float64, copy=False), ""
    rows = list(X)
    if not rows:
        raise ForestError("no training samples")
    first = rows[0]
    if hasattr(first, "values") and hasattr(first, "method"):
        dims = {r.dim for r in rows}
        if len(dims) != 1:
            raise ForestError(f"inconsistent feature dims: {sorted(dims)}")
        return np.stack([r.values for r in rows]).astype(np.float64), first.method
    return np.asarray(rows, dtype=np.float64), ""


def _best_split(
    Xn: np.ndarray, yn: np.ndarray, wn: np.ndarray, candidates: np.ndarray, min_leaf: int
) -> tuple[int, float] | None:
    n = Xn.shape[0]
    total_w = wn.sum()
    total_pos = float((wn * yn).sum())
    best_gini = np.inf
    best: tuple[int, float] | None = None
    for f in candidates:
        v = Xn[:, f]
        order = np.argsort(v, kind="stable")
        vs = v[order]
        ws = wn[order]
        ps = ws * yn[order]
        cw = np.cumsum(ws)
        cp = np.cumsum(ps)
        cut = np.nonzero(vs[:-1] < vs[1:])[0]
        if cut.size:
            cut = cut[(cut + 1 >= min_leaf) & (n - (cut + 1) >= min_leaf)]
        if cut.size == 0:
            continue
        wl = cw[cut]
        pl = cp[cut]
        wr = total_w - wl
        pr = total_pos - pl
        gl = 1.0 - (pl / wl) ** 2 - ((wl - pl) / wl) ** 2
        gr = 1.0 - (pr / wr) ** 2 - ((wr - pr) / wr) ** 2
        gini = (wl * gl + wr * gr) / total_w
        j = int(np.argmin(gini))          # first minimum -> lowest threshold
        if gini[j] < best_gini:           # strict: earlier feature wins ties
            best_gini = float(gini[j])
            thr = (vs[cut[j]] + vs[cut[j] + 1]) / 2.0
            best = (int(f), float(thr))
    return best


def _build_tree(
    X: np.ndarray, y: np.ndarray, w: np.ndarray, params: ForestParams, rng: np.random.Generator
) -> _Tree:
    n, d = X.shape
    m = params.n_candidates(d)
    tree = _Tree()
    # Depth-first with an explicit stack (left child first), so arbitrarily
    # deep trees cannot hit the interpreter recursion limit.
    stack: list[tuple[np.ndarray, int, int, bool]] = [(np.arange(n), 0, -1, False)]
    while stack:
        idx, depth, parent, is_left = stack.pop()
        yn = y[idx]
        wn = w[idx]
        p_morph = float((wn * yn).sum() / wn.sum())
        pure = p_morph in (0.0, 1.0)
        depth_done = params.max_depth is not None and depth >= params.max_depth
        split = None
        if not (pure or depth_done or idx.size < 2 * params.min_samples_leaf):
            candidates = np.sort(rng.choice(d, size=m, replace=False))
            split = _best_split(X[idx], yn, wn, candidates, params.min_samples_leaf)
        if split is None:
            node = tree.add_leaf(p_morph)
        else:
            f, thr = split
            node = tree.add_split(f, thr)
            mask = X[idx, f] <= thr
            stack.append((idx[~mask], depth + 1, node, False))
            stack.append((idx[mask], depth + 1, node, True))
        if parent >= 0:
            if is_left:
                tree.left[parent] = node
            else:
                tree.right[parent] = node
    return tree


def train_forest(X, y, params: ForestParams | None = None, ids=None, method: str = "") -> ForestModel:
    """Train on feature vectors with labels (bonafide/morph or 0/1).

    When `ids` is given, samples are sorted by id before any random draw, so
    the model is invariant under reordering of the input rows; the training
    digest hashes those ids.
    """
    if params is None:
        params = ForestParams()
    matrix, inferred = _as_matrix(X)
    labels = _canonical_labels(y)
    if matrix.shape[0] != labels.shape[0]:
        raise ForestError(f"{matrix.shape[0]} samples but {labels.shape[0]} labels")
    if matrix.shape[0] < 2:
        raise ForestError("need at least 2 training samples")
    if ids is not None:
        ids = [str(i) for i in ids]
        if len(ids) != matrix.shape[0]:
            raise ForestError(f"{matrix.shape[0]} samples but {len(ids)} ids")
        if len(set(ids)) != len(ids):
            raise ForestError("duplicate sample ids")
        order = np.argsort(np.asarray(ids, dtype=object), kind="stable")
        matrix = matrix[order]
        labels = labels[order]
        digest_src = "\n".join(sorted(ids))
    else:
        digest_src = "\n".join(
            hashlib.sha256(row.tobytes()).hexdigest() for row in matrix
        )
    classes = np.unique(labels)
    if classes.size < 2:
        raise ForestError("training data holds a single class; need both bona fide and morph")

    n, _ = matrix.shape
    if params.balanced:
        n_pos = int(labels.sum())
        class_w = {0: n / (2.0 * (n - n_pos)), 1: n / (2.0 * n_pos)}
        weights = np.array([class_w[int(v)] for v in labels], dtype=np.float64)
    else:
        weights = np.ones(n, dtype=np.float64)

    children = np.random.SeedSequence(params.seed).spawn(params.n_trees)
    trees = []
    for ss in children:
        rng = np.random.default_rng(ss)
        if params.bootstrap:
            idx = np.sort(rng.integers(0, n, size=n))
        else:
            idx = np.arange(n)
        trees.append(_build_tree(matrix[idx], labels[idx], weights[idx], params, rng))
    digest = hashlib.sha256(digest_src.encode()).hexdigest()
    return ForestModel(
        trees=trees, params=params, feature_dim=matrix.shape[1],
        method=method or inferred, training_digest=digest,
    )


def predict_score(model: ForestModel, x) -> Score:
    """Mean over trees of the leaf morph probability, as a [0, 1] score."""
    sample_id = ""
    if hasattr(x, "values") and hasattr(x, "method"):
        vec = np.asarray(x.values, dtype=np.float64)
    else:
        vec = np.asarray(x, dtype=np.float64)
    if vec.ndim != 1 or vec.shape[0] != model.feature_dim:
        raise ForestError(
            f"feature dim mismatch: model expects {model.feature_dim}, got {vec.shape}"
        )
    value = float(np.mean([t.predict_one(vec) for t in model.trees]))
    return Score(value=value, id=sample_id)


def predict_scores(model: ForestModel, X, ids=None) -> list[Score]:
    matrix, _ = _as_matrix(X)
    if matrix.shape[1] != model.feature_dim:
        raise ForestError(
            f"feature dim mismatch: model expects {model.feature_dim}, got {matrix.shape[1]}"
        )
    ids = [str(i) for i in ids] if ids is not None else [""] * matrix.shape[0]
    out = []
    for row, sid in zip(matrix, ids):
        value = float(np.mean([t.predict_one(row) for t in model.trees]))
        out.append(Score(value=value, id=sid))
    return out


def save_model(model: ForestModel, path: str | Path) -> None:
    Path(path).write_text(model.to_json())


def load_model(path: str | Path) -> ForestModel:
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ForestError(f"cannot read model file {path}: {exc}") from exc
    try:
        if payload["format_version"] != FORMAT_VERSION:
            raise ForestError(
                f"model format version {payload['format_version']} unsupported "
                f"(expected {FORMAT_VERSION})"
            )
        params = ForestParams(**payload["params"])
        trees = [
            _Tree(
                feature=[int(v) for v in t["feature"]],
                threshold=[float(v) for v in t["threshold"]],
                left=[int(v) for v in t["left"]],
                right=[int(v) for v in t["right"]],
                prob=[float(v) for v in t["prob"]],
            )
            for t in payload["trees"]
        ]
        return ForestModel(
            trees=trees,
            params=params,
            feature_dim=int(payload["feature_dim"]),
            method=str(payload["method"]),
            training_digest=str(payload["training_digest"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ForestError):
            raise
        raise ForestError(f"corrupt model file {path}: {exc}") from exc
