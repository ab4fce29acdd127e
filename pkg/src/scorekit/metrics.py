"""Discrimination metrics: Lorenz curve, Gini index, AUC, and weighted R^2.

Gini here is the accuracy-ratio convention used in credit scoring,
2*AUC - 1, not the wealth-inequality coefficient. AUC treats score ties
with half credit, which makes it exactly the Mann-Whitney statistic and
lets an O(n^2) pairwise count serve as an oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingleClassError, ValidationError


@dataclass(frozen=True)
class EvalReport:
    """Ranking quality of a score vector against binary outcomes.

    lorenz_points traces cumulative bad share (y) against cumulative
    population share (x) with the population ordered worst score first;
    it runs from (0, 0) to (1, 1) and one point is emitted per distinct
    score value, so tied blocks appear as straight segments.
    """

    lorenz_points: tuple
    gini: float
    auc: float
    n_good: int
    n_bad: int


def _midranks(values: np.ndarray) -> np.ndarray:
    """Ranks 1..n with tied values sharing their average rank."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size, dtype=float)
    sorted_vals = values[order]
    boundaries = np.flatnonzero(sorted_vals[1:] != sorted_vals[:-1]) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [values.size]))
    ranks[order] = np.repeat(0.5 * (starts + 1 + ends), ends - starts)
    return ranks


def evaluate(scores, target) -> EvalReport:
    """Score a ranking: higher score must mean riskier for gini > 0."""
    scores = np.asarray(scores, dtype=float)
    target = np.asarray(target)
    if scores.ndim != 1 or target.ndim != 1:
        raise ValidationError("scores and target must be 1-D vectors")
    if scores.size != target.size:
        raise ValidationError(
            f"length mismatch: {scores.size} scores vs {target.size} targets"
        )
    if np.any(np.isnan(scores)):
        raise ValidationError("scores contain NaN")
    if not np.all(np.isin(target, (0, 1))):
        raise ValidationError("target values must be exactly 0 or 1")
    n_bad = int(np.sum(target == 1))
    n_good = int(np.sum(target == 0))
    if n_bad == 0 or n_good == 0:
        raise SingleClassError("evaluation requires both classes present")

    ranks = _midranks(scores)
    bad_rank_sum = float(ranks[target == 1].sum())
    auc = (bad_rank_sum - n_bad * (n_bad + 1) / 2.0) / (n_bad * n_good)
    gini = 2.0 * auc - 1.0

    # Lorenz: worst scores first, one point per distinct score block.
    order = np.argsort(-scores, kind="mergesort")
    sorted_scores = scores[order]
    sorted_bad = target[order] == 1
    block_ends = np.concatenate(
        (np.flatnonzero(sorted_scores[1:] != sorted_scores[:-1]) + 1, [scores.size])
    )
    cum_bad = np.cumsum(sorted_bad)
    n = scores.size
    points = [(0.0, 0.0)]
    for e in block_ends:
        points.append((e / n, cum_bad[e - 1] / n_bad))
    return EvalReport(
        lorenz_points=tuple(points),
        gini=gini,
        auc=auc,
        n_good=n_good,
        n_bad=n_bad,
    )


def gini_delta(report_a: EvalReport, report_b: EvalReport) -> float:
    """Gini difference a minus b, in points (hundredths)."""
    return (report_a.gini - report_b.gini) * 100.0


def r_squared(predicted, observed, weights) -> float:
    """Weighted coefficient of determination 1 - SSres/SStot."""
    p = np.asarray(predicted, dtype=float)
    o = np.asarray(observed, dtype=float)
    w = np.asarray(weights, dtype=float)
    if not (p.shape == o.shape == w.shape) or p.ndim != 1:
        raise ValidationError("predicted, observed, weights must be equal-length vectors")
    if np.any(w < 0):
        raise ValidationError("weights must be non-negative")
    w_sum = w.sum()
    if w_sum <= 0:
        raise ValidationError("weights must not all be zero")
    o_bar = float(np.dot(w, o) / w_sum)
    ss_tot = float(np.dot(w, (o - o_bar) ** 2))
    if ss_tot == 0:
        raise ValidationError("observed vector is weighted-constant")
    ss_res = float(np.dot(w, (o - p) ** 2))
    return 1.0 - ss_res / ss_tot


EVAL_SCHEMA_VERSION = 1


def report_to_dict(report: EvalReport) -> dict:
    return {
        "schema_version": EVAL_SCHEMA_VERSION,
        "kind": "evaluation_report",
        "gini": float(report.gini),
        "auc": float(report.auc),
        "n_good": report.n_good,
        "n_bad": report.n_bad,
        "lorenz_points": [[float(x), float(y)] for x, y in report.lorenz_points],
    }


def report_from_dict(doc: dict) -> EvalReport:
    if doc.get("kind") != "evaluation_report":
        raise ValidationError("document is not an evaluation report")
    return EvalReport(
        lorenz_points=tuple((float(x), float(y)) for x, y in doc["lorenz_points"]),
        gini=float(doc["gini"]),
        auc=float(doc["auc"]),
        n_good=int(doc["n_good"]),
        n_bad=int(doc["n_bad"]),
    )
