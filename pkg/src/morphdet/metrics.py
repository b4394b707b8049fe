"""ISO/IEC 30107-3 detection-error metrics over morph-vs-bona-fide score sets.

Decision convention, fixed for determinism: a sample is classified as an
attack when its score >= threshold (ties count as attack). APCER is then the
fraction of morph scores below the threshold, BPCER the fraction of bona fide
scores at or above it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class MetricsError(ValueError):
    """Degenerate score sets or curves."""


@dataclass(frozen=True)
class Score:
    value: float
    id: str = ""

    def __post_init__(self) -> None:
        if not 0.0 <= self.value <= 1.0:
            raise MetricsError(f"score must lie in [0, 1], got {self.value}")


@dataclass(frozen=True)
class ScoreSet:
    bonafide: tuple[Score, ...]
    morph: tuple[Score, ...]

    @staticmethod
    def from_values(bonafide, morph, bf_ids=None, morph_ids=None) -> "ScoreSet":
        bf_ids = bf_ids or [""] * len(bonafide)
        morph_ids = morph_ids or [""] * len(morph)
        return ScoreSet(
            bonafide=tuple(Score(float(v), i) for v, i in zip(bonafide, bf_ids)),
            morph=tuple(Score(float(v), i) for v, i in zip(morph, morph_ids)),
        )

    def bonafide_values(self) -> np.ndarray:
        return np.array([s.value for s in self.bonafide], dtype=np.float64)

    def morph_values(self) -> np.ndarray:
        return np.array([s.value for s in self.morph], dtype=np.float64)


@dataclass(frozen=True)
class DetCurve:
    """One (threshold, apcer, bpcer) point per distinct score plus -inf/+inf sentinels."""

    thresholds: np.ndarray
    apcers: np.ndarray
    bpcers: np.ndarray

    def points(self) -> list[tuple[float, float, float]]:
        return list(zip(self.thresholds.tolist(), self.apcers.tolist(), self.bpcers.tolist()))


@dataclass(frozen=True)
class MetricsReport:
    eer: float
    eer_threshold: float
    bpcer10: float
    bpcer20: float
    n_bf: int
    n_pais: int

    def to_dict(self) -> dict:
        return {
            "eer": self.eer,
            "eer_threshold": self.eer_threshold,
            "bpcer10": self.bpcer10,
            "bpcer20": self.bpcer20,
            "n_bf": self.n_bf,
            "n_pais": self.n_pais,
        }


def apcer(scores: ScoreSet, threshold: float) -> float:
    """Fraction of attacks not detected: morph scores below the threshold."""
    morph = scores.morph_values()
    if morph.size == 0:
        raise MetricsError("APCER needs at least one morph score")
    return float(np.count_nonzero(morph < threshold) / morph.size)


def bpcer(scores: ScoreSet, threshold: float) -> float:
    """Fraction of bona fide presentations flagged as attacks: scores >= threshold."""
    bona = scores.bonafide_values()
    if bona.size == 0:
        raise MetricsError("BPCER needs at least one bona fide score")
    return float(np.count_nonzero(bona >= threshold) / bona.size)


def det_curve(scores: ScoreSet) -> DetCurve:
    bona = scores.bonafide_values()
    morph = scores.morph_values()
    if bona.size == 0 or morph.size == 0:
        raise MetricsError("DET curve needs scores from both classes")
    distinct = np.unique(np.concatenate([bona, morph]))
    thresholds = np.concatenate([[-np.inf], distinct, [np.inf]])
    apcers = np.array([np.count_nonzero(morph < t) / morph.size for t in thresholds])
    bpcers = np.array([np.count_nonzero(bona >= t) / bona.size for t in thresholds])
    return DetCurve(thresholds=thresholds, apcers=apcers, bpcers=bpcers)


def eer(curve: DetCurve) -> tuple[float, float]:
    """Rate and threshold where APCER meets BPCER, linearly interpolated.

    The difference apcer - bpcer runs from -1 at -inf to +1 at +inf, so a
    crossing always exists; an exact zero on a curve point is returned as-is.
    """
    diff = curve.apcers - curve.bpcers
    exact = np.nonzero(diff == 0.0)[0]
    if exact.size:
        k = int(exact[0])
        return float(curve.apcers[k]), float(curve.thresholds[k])
    sign_change = np.nonzero((diff[:-1] < 0) & (diff[1:] > 0))[0]
    if sign_change.size == 0:
        raise MetricsError("no APCER/BPCER crossing on the curve")
    k = int(sign_change[0])
    a0, a1 = curve.apcers[k], curve.apcers[k + 1]
    b0, b1 = curve.bpcers[k], curve.bpcers[k + 1]
    t0, t1 = curve.thresholds[k], curve.thresholds[k + 1]
    s = (b0 - a0) / ((a1 - a0) - (b1 - b0))
    rate = float(a0 + s * (a1 - a0))
    if np.isinf(t0):
        threshold = float(t1)
    elif np.isinf(t1):
        threshold = float(t0)
    else:
        threshold = float(t0 + s * (t1 - t0))
    return rate, threshold


def bpcer_at_apcer(curve: DetCurve, apcer_target: float) -> float:
    """Smallest BPCER reachable with APCER at most the target, interpolated."""
    if not 0.0 < apcer_target < 1.0:
        raise MetricsError(f"APCER target must be in (0, 1), got {apcer_target}")
    ok = np.nonzero(curve.apcers <= apcer_target)[0]
    if ok.size == 0:
        raise MetricsError("no operating point satisfies the APCER target")
    k = int(ok[-1])
    if k == len(curve.apcers) - 1:
        return float(curve.bpcers[k])
    a0, a1 = curve.apcers[k], curve.apcers[k + 1]
    b0, b1 = curve.bpcers[k], curve.bpcers[k + 1]
    if a1 <= a0:
        return float(curve.bpcers[k])
    frac = (apcer_target - a0) / (a1 - a0)
    return float(b0 + frac * (b1 - b0))


def threshold_at_apcer(curve: DetCurve, apcer_target: float) -> float:
    """Largest finite threshold whose APCER stays within the target."""
    ok = np.nonzero(curve.apcers <= apcer_target)[0]
    if ok.size == 0:
        raise MetricsError("no operating point satisfies the APCER target")
    k = int(ok[-1])
    t = curve.thresholds[k]
    if np.isinf(t):
        finite = curve.thresholds[np.isfinite(curve.thresholds)]
        t = finite[-1] if t > 0 else finite[0]
    return float(t)


def metrics_report(scores: ScoreSet) -> MetricsReport:
    curve = det_curve(scores)
    rate, threshold = eer(curve)
    return MetricsReport(
        eer=rate,
        eer_threshold=threshold,
        bpcer10=bpcer_at_apcer(curve, 0.10),
        bpcer20=bpcer_at_apcer(curve, 0.05),
        n_bf=len(scores.bonafide),
        n_pais=len(scores.morph),
    )


def operating_thresholds(curve: DetCurve) -> dict[str, float]:
    """Decision thresholds at the three reported operating points."""
    _, t_eer = eer(curve)
    return {
        "eer": t_eer,
        "bpcer10": threshold_at_apcer(curve, 0.10),
        "bpcer20": threshold_at_apcer(curve, 0.05),
    }


def write_scores_csv(scores: ScoreSet, path: str | Path) -> None:
    lines = ["id,label,score"]
    for s in scores.bonafide:
        lines.append(f"{s.id},bonafide,{s.value!r}")
    for s in scores.morph:
        lines.append(f"{s.id},morph,{s.value!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_scores_csv(path: str | Path) -> ScoreSet:
    import csv

    bona: list[Score] = []
    morph: list[Score] = []
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["id", "label", "score"]:
            raise MetricsError(f"{path}: expected header id,label,score")
        for row in reader:
            score = Score(value=float(row["score"]), id=row["id"])
            if row["label"] == "bonafide":
                bona.append(score)
            elif row["label"] == "morph":
                morph.append(score)
            else:
                raise MetricsError(f"{path}: unknown label {row['label']!r}")
    return ScoreSet(bonafide=tuple(bona), morph=tuple(morph))


def write_det_csv(curve: DetCurve, path: str | Path) -> None:
    lines = ["threshold,apcer,bpcer"]
    for t, a, b in curve.points():
        lines.append(f"{t!r},{a!r},{b!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_report_json(report: MetricsReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), sort_keys=True, indent=1) + "\n")
