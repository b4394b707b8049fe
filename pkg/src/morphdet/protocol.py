"""Leave-one-tool-out evaluation harness.

One round per morph tool in the manifest: that tool's morphs are excluded from
the round entirely, every remaining tool is split 70/30 together with the
shared bona fide pool, a forest is trained per feature method on the train
side, and each remaining tool's test morphs are scored separately against the
reserved bona fide test scores. Every cell is (round, test tool, feature).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from morphdet import features as feats
from morphdet.dataset import (
    BONAFIDE,
    DatasetManifest,
    load_manifest,
    preprocess_record,
    split_train_test,
)
from morphdet.forest import ForestParams, predict_scores, train_forest
from morphdet.metrics import (
    MetricsReport,
    ScoreSet,
    det_curve,
    metrics_report,
    write_det_csv,
    write_scores_csv,
)


class ProtocolError(ValueError):
    """Plan or run configuration failure."""


@dataclass(frozen=True)
class LooRound:
    held_out: str
    train_tools: tuple[str, ...]
    test_sets: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.held_out in self.train_tools:
            raise ProtocolError(f"held-out tool {self.held_out!r} appears in train_tools")


@dataclass(frozen=True)
class LooPlan:
    rounds: tuple[LooRound, ...]
    features: tuple[str, ...]
    ratio: float = 0.7
    seed: int = 0

    def __post_init__(self) -> None:
        unknown = [f for f in self.features if f not in feats.METHODS]
        if unknown:
            raise ProtocolError(f"unknown feature methods in plan: {unknown}")


@dataclass
class RunConfig:
    manifest_path: Path
    out_dir: Path
    seed: int = 0
    ratio: float = 0.7
    features: tuple[str, ...] = feats.METHODS
    forest: ForestParams = field(default_factory=lambda: ForestParams())
    feature_config: feats.FeatureConfig = field(default_factory=feats.FeatureConfig)
    cache: bool = True
    missing: str = "fail"

    @staticmethod
    def from_json(path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            payload = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ProtocolError(f"cannot read run config {path}: {exc}") from exc
        for required in ("manifest", "out_dir"):
            if required not in payload:
                raise ProtocolError(f"{path}: run config is missing the {required!r} field")
        base = path.parent
        manifest = Path(payload["manifest"])
        out_dir = Path(payload["out_dir"])
        fc = feats.FeatureConfig(
            ela_quality=int(payload.get("ela_quality", feats.DEFAULT_ELA_QUALITY)),
            bsif_bank=str(payload.get("bsif_bank", feats.DEFAULT_CLASSIFY_BANK)),
            svd_k=int(payload.get("svd_k", feats.DEFAULT_SVD_RANK)),
            dct_blockwise=bool(payload.get("dct_blockwise", False)),
            srm_kernels_path=payload.get("srm_kernels"),
        )
        forest = ForestParams(**payload.get("forest", {}))
        return RunConfig(
            manifest_path=manifest if manifest.is_absolute() else base / manifest,
            out_dir=out_dir if out_dir.is_absolute() else base / out_dir,
            seed=int(payload.get("seed", 0)),
            ratio=float(payload.get("ratio", 0.7)),
            features=tuple(payload.get("features", feats.METHODS)),
            forest=forest,
            feature_config=fc,
            cache=bool(payload.get("cache", True)),
            missing=str(payload.get("missing", "fail")),
        )


@dataclass
class CellResult:
    round: str
    test_set: str
    feature: str
    report: MetricsReport | None = None
    failure: str | None = None

    def to_dict(self) -> dict:
        out: dict = {"round": self.round, "test_set": self.test_set, "feature": self.feature}
        if self.report is not None:
            out["metrics"] = self.report.to_dict()
        if self.failure is not None:
            out["failed"] = self.failure
        return out


@dataclass
class LooReport:
    plan: LooPlan
    cells: dict[tuple[str, str, str], CellResult]

    def cell(self, round_tag: str, test_set: str, feature: str) -> CellResult:
        return self.cells[(round_tag, test_set, feature)]

    def feature_round_mean(self) -> dict[tuple[str, str], float | None]:
        """Mean EER over a round's test sets, per (round, feature)."""
        out: dict[tuple[str, str], float | None] = {}
        for rnd in self.plan.rounds:
            for feat in self.plan.features:
                eers = [
                    self.cells[(rnd.held_out, t, feat)].report.eer
                    for t in rnd.test_sets
                    if self.cells[(rnd.held_out, t, feat)].report is not None
                ]
                out[(rnd.held_out, feat)] = float(np.mean(eers)) if eers else None
        return out

    def round_mean(self) -> dict[str, float | None]:
        per_feature = self.feature_round_mean()
        out: dict[str, float | None] = {}
        for rnd in self.plan.rounds:
            vals = [v for (r, _), v in per_feature.items() if r == rnd.held_out and v is not None]
            out[rnd.held_out] = float(np.mean(vals)) if vals else None
        return out

    def to_dict(self) -> dict:
        per_feature = self.feature_round_mean()
        return {
            "format_version": 1,
            "plan": {
                "rounds": [asdict(r) for r in self.plan.rounds],
                "features": list(self.plan.features),
                "ratio": self.plan.ratio,
                "seed": self.plan.seed,
            },
            "cells": [
                self.cells[key].to_dict() for key in sorted(self.cells)
            ],
            "averages": {
                "per_round_feature": [
                    {"round": r, "feature": f, "mean_eer": v}
                    for (r, f), v in sorted(per_feature.items())
                ],
                "per_round": [
                    {"round": r, "mean_eer": v} for r, v in sorted(self.round_mean().items())
                ],
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def build_default_plan(
    manifest: DatasetManifest,
    features: tuple[str, ...] = feats.METHODS,
    ratio: float = 0.7,
    seed: int = 0,
) -> LooPlan:
    """One round per tool: hold it out entirely, train and test on the rest."""
    tools = manifest.morph_tools()
    if len(tools) < 2:
        raise ProtocolError(f"leave-one-out needs at least 2 morph tools, found {tools}")
    rounds = []
    for held in tools:
        rest = tuple(t for t in tools if t != held)
        rounds.append(LooRound(held_out=held, train_tools=rest, test_sets=rest))
    return LooPlan(rounds=tuple(rounds), features=tuple(features), ratio=ratio, seed=seed)


def _stable_seed(*parts) -> int:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2**63)


class _FeatureStore:
    """Per-id feature vectors with an optional on-disk cache keyed by content."""

    def __init__(self, config: feats.FeatureConfig, cache_dir: Path | None):
        self.config = config
        self.cache_dir = cache_dir
        if cache_dir is not None:
            cache_dir.mkdir(parents=True, exist_ok=True)

    def vector(self, face, method: str) -> np.ndarray:
        if self.cache_dir is None:
            return feats.extract(face, method, self.config)[1].values
        key_src = f"{face.sha256()}|{self.config.cache_key(method)}"
        key = hashlib.sha256(key_src.encode()).hexdigest()
        path = self.cache_dir / f"{key}.npy"
        if path.exists():
            return np.load(path)
        values = feats.extract(face, method, self.config)[1].values
        np.save(path, values)
        return values


def run_loo(config: RunConfig, plan: LooPlan | None = None) -> LooReport:
    """Execute the full plan; per-cell failures are recorded, never fatal.

    Writes report.json, summary files, and per-cell score/DET CSVs under
    config.out_dir. Identical config and seeds reproduce identical bytes.
    """
    manifest = load_manifest(config.manifest_path, missing=config.missing)
    if plan is None:
        plan = build_default_plan(
            manifest, features=config.features, ratio=config.ratio, seed=config.seed
        )
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cache_dir = out_dir / "cache" if config.cache else None
    store = _FeatureStore(config.feature_config, cache_dir)

    faces: dict[str, object] = {}

    def face_of(sample_id: str):
        if sample_id not in faces:
            faces[sample_id] = preprocess_record(manifest.get(sample_id))
        return faces[sample_id]

    cells: dict[tuple[str, str, str], CellResult] = {}
    for rnd in plan.rounds:
        round_ids = [
            r.id
            for r in manifest.records
            if r.label == BONAFIDE or r.tool in rnd.train_tools
        ]
        round_manifest = manifest.subset(sorted(round_ids))
        try:
            split = split_train_test(
                round_manifest, config.ratio, _stable_seed(rnd.held_out, "split", plan.seed)
            )
        except ValueError as exc:
            for feat in plan.features:
                for test_tool in rnd.test_sets:
                    cells[(rnd.held_out, test_tool, feat)] = CellResult(
                        rnd.held_out, test_tool, feat, failure=f"split failed: {exc}"
                    )
            continue
        train_ids = split.train
        test_by_tool: dict[str, list[str]] = {t: [] for t in rnd.test_sets}
        bf_test_ids = []
        for sid in split.test:
            rec = round_manifest.get(sid)
            if rec.label == BONAFIDE:
                bf_test_ids.append(sid)
            else:
                test_by_tool[rec.tool].append(sid)
        y_train = [round_manifest.get(sid).label for sid in train_ids]

        for feat in plan.features:
            seed = _stable_seed(rnd.held_out, feat, plan.seed)
            try:
                X_train = np.stack([store.vector(face_of(sid), feat) for sid in train_ids])
                model = train_forest(
                    X_train,
                    y_train,
                    params=ForestParams(**{**asdict(config.forest), "seed": seed}),
                    ids=train_ids,
                    method=feat,
                )
                bf_scores = predict_scores(
                    model,
                    np.stack([store.vector(face_of(sid), feat) for sid in bf_test_ids]),
                    ids=bf_test_ids,
                ) if bf_test_ids else []
            except Exception as exc:  # cell failures must not abort the run
                for test_tool in rnd.test_sets:
                    cells[(rnd.held_out, test_tool, feat)] = CellResult(
                        rnd.held_out, test_tool, feat, failure=f"training failed: {exc}"
                    )
                continue
            for test_tool in rnd.test_sets:
                key = (rnd.held_out, test_tool, feat)
                morph_ids = test_by_tool.get(test_tool, [])
                try:
                    if not morph_ids:
                        raise ProtocolError(f"no test morphs for tool {test_tool!r}")
                    if not bf_test_ids:
                        raise ProtocolError("no reserved bona fide test samples")
                    overlap = set(train_ids) & set(morph_ids + bf_test_ids)
                    if overlap:
                        raise ProtocolError(f"train/test leakage: {sorted(overlap)[:3]}")
                    morph_scores = predict_scores(
                        model,
                        np.stack([store.vector(face_of(sid), feat) for sid in morph_ids]),
                        ids=morph_ids,
                    )
                    scores = ScoreSet(bonafide=tuple(bf_scores), morph=tuple(morph_scores))
                    cells[key] = CellResult(
                        rnd.held_out, test_tool, feat, report=metrics_report(scores)
                    )
                    cell_dir = out_dir / "cells" / rnd.held_out / feat
                    cell_dir.mkdir(parents=True, exist_ok=True)
                    write_scores_csv(scores, cell_dir / f"{test_tool}.scores.csv")
                    write_det_csv(det_curve(scores), cell_dir / f"{test_tool}.det.csv")
                except Exception as exc:
                    cells[key] = CellResult(
                        rnd.held_out, test_tool, feat, failure=str(exc)
                    )

    report = LooReport(plan=plan, cells=cells)
    (out_dir / "report.json").write_text(report.to_json() + "\n")
    summary = summarize(report)
    (out_dir / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=1) + "\n")
    _write_summary_csv(summary, out_dir / "summary.csv")
    return report


def summarize(report: LooReport) -> dict:
    """Plot-ready view: per-round feature EER bars, round averages, best feature."""
    per_feature = report.feature_round_mean()
    round_means = report.round_mean()
    rounds = []
    for rnd in report.plan.rounds:
        feat_eers = {f: per_feature[(rnd.held_out, f)] for f in report.plan.features}
        usable = {f: v for f, v in feat_eers.items() if v is not None}
        best = min(usable, key=lambda f: (usable[f], f)) if usable else None
        rounds.append(
            {
                "round": rnd.held_out,
                "features": feat_eers,
                "average": round_means[rnd.held_out],
                "best_feature": best,
            }
        )
    failures = [
        {"round": c.round, "test_set": c.test_set, "feature": c.feature, "reason": c.failure}
        for key, c in sorted(report.cells.items())
        if c.failure is not None
    ]
    return {"rounds": rounds, "failures": failures}


def _write_summary_csv(summary: dict, path: Path) -> None:
    lines = ["round,feature,mean_eer,is_best"]
    for rnd in summary["rounds"]:
        for feat, eer_value in rnd["features"].items():
            lines.append(
                f"{rnd['round']},{feat},"
                f"{'' if eer_value is None else repr(eer_value)},"
                f"{int(feat == rnd['best_feature'])}"
            )
    Path(path).write_text("\n".join(lines) + "\n")
