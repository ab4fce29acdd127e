"""Local surrogate explanations of a black-box PD model, with stability
diagnostics and probes for the method's known failure modes.

An explanation of one unit is produced by sampling a synthetic
neighborhood around it, querying the black box there, and fitting a
kernel-weighted ridge line in standardized coordinates. Each feature's
contribution is its surrogate coefficient times the unit's standardized
value, so intercept plus contributions reconstructs the surrogate
prediction exactly. The surrogate is a linear model: its prediction is
intentionally not clamped to [0, 1] and can leave that interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .dataset import Dataset, SyntheticSpec, generate_synthetic
from .errors import NumericError, ValidationError
from .gbm import GbmConfig, fit_gbm
from .gbm import predict_pd as gbm_predict_pd
from .linear import fit_ridge

SAMPLING_MODES = ("gaussian", "quartile")


def default_kernel_width(n_features: int) -> float:
    """Kernel bandwidth used when none is configured: 0.75 * sqrt(p)."""
    return 0.75 * math.sqrt(n_features)


@dataclass(frozen=True)
class LimeConfig:
    n_samples: int = 5000
    kernel_width: float | None = None
    n_features_shown: int = 7
    lam: float = 1.0
    seed: int = 0
    sampling: str = "gaussian"

    def __post_init__(self):
        if self.n_samples < 3:
            raise ValidationError("n_samples must be at least 3")
        if self.kernel_width is not None and self.kernel_width <= 0:
            raise ValidationError("kernel_width must be positive")
        if self.n_features_shown < 1:
            raise ValidationError("n_features_shown must be at least 1")
        if self.lam < 0:
            raise ValidationError("lambda must be non-negative")
        if self.seed < 0:
            raise ValidationError("seed must be a non-negative integer")
        if self.sampling not in SAMPLING_MODES:
            raise ValidationError(f"sampling must be one of {SAMPLING_MODES}")


@dataclass(frozen=True)
class FeatureStats:
    """Per-feature location/scale (and quartile bins) of the training data."""

    feature_names: tuple
    means: np.ndarray
    stds: np.ndarray
    bin_edges: tuple = ()
    bin_values: tuple = ()

    def __post_init__(self):
        for attr in ("means", "stds"):
            arr = np.asarray(getattr(self, attr), dtype=float).copy()
            arr.flags.writeable = False
            object.__setattr__(self, attr, arr)

    @classmethod
    def from_dataset(cls, data: Dataset) -> "FeatureStats":
        X = data.features
        means = X.mean(axis=0)
        stds = X.std(axis=0)
        edges = []
        values = []
        for j in range(data.n_features):
            col = X[:, j]
            qs = np.quantile(col, (0.25, 0.5, 0.75))
            bins = np.searchsorted(qs, col, side="left")
            reps = []
            for b in range(4):
                members = col[bins == b]
                reps.append(float(np.median(members)) if members.size else float(means[j]))
            edges.append(tuple(float(q) for q in qs))
            values.append(tuple(reps))
        return cls(
            feature_names=data.feature_names,
            means=means,
            stds=stds,
            bin_edges=tuple(edges),
            bin_values=tuple(values),
        )

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def bin_of(self, x: np.ndarray) -> np.ndarray:
        """Quartile bin index (0..3) of each coordinate of x."""
        return np.array(
            [np.searchsorted(self.bin_edges[j], x[j], side="left") for j in range(x.size)],
            dtype=np.int64,
        )


@dataclass(frozen=True)
class Explanation:
    """One unit's local explanation.

    contributions holds the display list (descending absolute value,
    truncated to n_features_shown); all_contributions is the same list
    before truncation, and intercept + sum of it equals
    surrogate_prediction exactly. coefficients are the surrogate slopes in
    fit space, ordered by feature index.
    """

    unit_id: str
    blackbox_prediction: float
    surrogate_prediction: float
    intercept: float
    contributions: tuple
    all_contributions: tuple
    coefficients: tuple
    surrogate_r_squared: float
    kernel_width: float
    config: LimeConfig


@dataclass(frozen=True)
class StabilityReport:
    """Agreement of repeated explanations of the same unit."""

    unit_id: str
    runs: int
    topk_overlap: float
    coefficient_dispersion: tuple
    mean_r_squared: float
    mean_top_contribution: float
    top_feature_sets: tuple


def _check_unit(unit, stats: FeatureStats, config: LimeConfig) -> np.ndarray:
    unit = np.asarray(unit, dtype=float)
    if unit.ndim != 1 or unit.size != stats.n_features:
        raise ValidationError(
            f"unit must be a vector of {stats.n_features} features"
        )
    if not np.all(np.isfinite(unit)):
        raise ValidationError("unit must be finite")
    if np.any(stats.stds <= 0):
        bad = stats.feature_names[int(np.argmin(stats.stds))]
        raise ValidationError(f"feature {bad!r} has zero std; exclude constants")
    if config.n_samples < stats.n_features + 2:
        raise ValidationError(
            f"n_samples must be at least p+2 = {stats.n_features + 2}"
        )
    return unit


def sample_neighborhood(unit, stats: FeatureStats, config: LimeConfig):
    """Gaussian neighborhood around the unit plus kernel weights.

    Samples add independent per-feature noise scaled by the training stds;
    row 0 is the unit itself. The weight of sample z is
    exp(-d(z, unit)^2 / width^2) with d the Euclidean distance in
    standardized coordinates, so the unit's own weight is 1.
    """
    unit = _check_unit(unit, stats, config)
    width = config.kernel_width or default_kernel_width(stats.n_features)
    rng = np.random.default_rng(config.seed)
    noise = rng.standard_normal((config.n_samples, stats.n_features))
    samples = unit + noise * stats.stds
    samples[0] = unit
    sq_dist = np.sum(((samples - unit) / stats.stds) ** 2, axis=1)
    weights = np.exp(-sq_dist / width**2)
    return samples, weights


def _sample_quartile(unit, stats: FeatureStats, config: LimeConfig):
    """Bin-resampled neighborhood: indicator design plus raw query points."""
    unit = _check_unit(unit, stats, config)
    width = config.kernel_width or default_kernel_width(stats.n_features)
    p = stats.n_features
    rng = np.random.default_rng(config.seed)
    bins = rng.integers(0, 4, size=(config.n_samples, p))
    unit_bins = stats.bin_of(unit)
    bins[0] = unit_bins
    indicator = (bins == unit_bins).astype(float)
    reps = np.array(stats.bin_values)
    raw = reps[np.arange(p)[None, :], bins]
    raw[0] = unit
    sq_dist = np.sum((1.0 - indicator) ** 2, axis=1)
    weights = np.exp(-sq_dist / width**2)
    return indicator, raw, weights


def _query_blackbox(blackbox, points: np.ndarray) -> np.ndarray:
    preds = np.asarray(blackbox(points), dtype=float).reshape(-1)
    if preds.shape[0] != points.shape[0]:
        raise ValidationError(
            "black box must return one prediction per query row"
        )
    if np.any(np.isnan(preds)):
        raise NumericError("black box returned NaN predictions")
    return preds


def explain(blackbox, unit, stats: FeatureStats, config: LimeConfig = LimeConfig(),
            unit_id: str = "unit") -> Explanation:
    """Explain one unit of a black-box PD model.

    blackbox must accept an (m, p) matrix and return m predictions.
    """
    unit = _check_unit(unit, stats, config)
    width = config.kernel_width or default_kernel_width(stats.n_features)
    if config.sampling == "gaussian":
        samples, weights = sample_neighborhood(unit, stats, config)
        design = (samples - stats.means) / stats.stds
        z_unit = (unit - stats.means) / stats.stds
        query = samples
    else:
        design, query, weights = _sample_quartile(unit, stats, config)
        z_unit = np.ones(stats.n_features)

    preds = _query_blackbox(blackbox, query)
    ridge = fit_ridge(design, preds, weights, config.lam)
    coefs = ridge.coefficients[1:]
    intercept = float(ridge.coefficients[0])
    values = coefs * z_unit
    surrogate = intercept + float(values.sum())

    order = sorted(range(stats.n_features), key=lambda j: (-abs(values[j]), j))
    full = tuple((stats.feature_names[j], float(values[j])) for j in order)
    return Explanation(
        unit_id=unit_id,
        blackbox_prediction=float(preds[0]),
        surrogate_prediction=surrogate,
        intercept=intercept,
        contributions=full[: config.n_features_shown],
        all_contributions=full,
        coefficients=tuple(float(c) for c in coefs),
        surrogate_r_squared=float(ridge.r_squared),
        kernel_width=float(width),
        config=config,
    )


def _mean_pairwise_jaccard(sets) -> float:
    pairs = [
        len(a & b) / len(a | b)
        for i, a in enumerate(sets)
        for b in sets[i + 1:]
    ]
    return float(np.mean(pairs))


def stability(blackbox, unit, stats: FeatureStats, config: LimeConfig = LimeConfig(),
              runs: int = 3, unit_id: str = "unit", seed_step: int = 1) -> StabilityReport:
    """Re-explain the same unit with seeds seed, seed+seed_step, ...

    Reports the mean pairwise Jaccard overlap of the shown top-K feature
    sets and the per-feature standard deviation of contributions across
    runs. seed_step=0 forces identical runs (a determinism check).
    """
    if runs < 2:
        raise ValidationError("stability needs at least 2 runs")
    explanations = [
        explain(
            blackbox,
            unit,
            stats,
            replace(config, seed=config.seed + k * seed_step),
            unit_id=unit_id,
        )
        for k in range(runs)
    ]
    top_sets = [frozenset(name for name, _ in ex.contributions) for ex in explanations]
    by_name = {name: [] for name in stats.feature_names}
    for ex in explanations:
        for name, value in ex.all_contributions:
            by_name[name].append(value)
    dispersion = tuple(
        (name, float(np.std(by_name[name]))) for name in stats.feature_names
    )
    top_magnitudes = [abs(ex.contributions[0][1]) for ex in explanations]
    return StabilityReport(
        unit_id=unit_id,
        runs=runs,
        topk_overlap=_mean_pairwise_jaccard(top_sets),
        coefficient_dispersion=dispersion,
        mean_r_squared=float(np.mean([ex.surrogate_r_squared for ex in explanations])),
        mean_top_contribution=float(np.mean(top_magnitudes)),
        top_feature_sets=tuple(tuple(sorted(s)) for s in top_sets),
    )


PROBE_SCENARIOS = ("high_dim", "correlated", "kernel_sweep")


def _absolute_value_blackbox(X: np.ndarray) -> np.ndarray:
    return np.abs(np.asarray(X, dtype=float)[:, 0])


def _pipeline_stability(spec: SyntheticSpec, gbm_config: GbmConfig,
                        lime_config: LimeConfig, runs: int, unit_row: int):
    data = generate_synthetic(spec)
    model = fit_gbm(data, gbm_config)
    stats = FeatureStats.from_dataset(data)
    unit = data.features[unit_row]
    return stability(
        lambda X: gbm_predict_pd(model, X),
        unit,
        stats,
        lime_config,
        runs=runs,
        unit_id=data.row_ids[unit_row],
    )


def weakness_probe(scenario: str, *, seed: int = 0, runs: int = 3,
                   n_rows: int = 8000, bad_rate: float = 0.10,
                   dims=(10, 20, 50, 100), correlations=(0.0, 0.5, 0.9),
                   n_features: int = 10,
                   width_factors=(0.1, 0.5, 1.0, 2.0, 5.0),
                   unit_value: float = 0.01, unit_row: int = 0,
                   gbm_config: GbmConfig | None = None,
                   lime_config: LimeConfig | None = None,
                   blackbox=None) -> dict:
    """Exercise a known LIME failure mode and report what happens.

    high_dim: stability across feature counts; overlap degrades and the
    top contribution flattens as irrelevant features multiply.
    correlated: stability across feature correlations at fixed p;
    contribution dispersion grows with correlation.
    kernel_sweep: the local slope fitted to a non-differentiable black box
    (|x| by default, near its kink) across widths 0.1x..5x the default.
    """
    if scenario not in PROBE_SCENARIOS:
        raise ValidationError(f"scenario must be one of {PROBE_SCENARIOS}")
    gbm_config = gbm_config or GbmConfig(n_trees=120, seed=seed)
    lime_config = lime_config or LimeConfig(seed=seed)
    results = []

    if scenario == "high_dim":
        for p in dims:
            spec = SyntheticSpec(n_rows, p, bad_rate, "nonlinear", 0.0, seed)
            report = _pipeline_stability(spec, gbm_config, lime_config, runs, unit_row)
            results.append(
                {
                    "n_features": int(p),
                    "topk_overlap": report.topk_overlap,
                    "mean_top_contribution": report.mean_top_contribution,
                    "mean_r_squared": report.mean_r_squared,
                }
            )
    elif scenario == "correlated":
        for rho in correlations:
            spec = SyntheticSpec(n_rows, n_features, bad_rate, "nonlinear", rho, seed)
            report = _pipeline_stability(spec, gbm_config, lime_config, runs, unit_row)
            disp = [v for _, v in report.coefficient_dispersion]
            results.append(
                {
                    "correlation": float(rho),
                    "topk_overlap": report.topk_overlap,
                    "mean_dispersion": float(np.mean(disp)),
                    "max_dispersion": float(np.max(disp)),
                }
            )
    else:
        blackbox = blackbox or _absolute_value_blackbox
        stats = FeatureStats(
            feature_names=("x0",),
            means=np.zeros(1),
            stds=np.ones(1),
            bin_edges=((-0.6745, 0.0, 0.6745),),
            bin_values=((-1.0, -0.3, 0.3, 1.0),),
        )
        base_width = default_kernel_width(1)
        for factor in width_factors:
            cfg = replace(lime_config, kernel_width=factor * base_width)
            ex = explain(blackbox, np.array([unit_value]), stats, cfg)
            slope = ex.coefficients[0] / float(stats.stds[0])
            results.append(
                {
                    "width_factor": float(factor),
                    "kernel_width": ex.kernel_width,
                    "slope": float(slope),
                    "surrogate_r_squared": ex.surrogate_r_squared,
                }
            )

    return {"scenario": scenario, "seed": seed, "runs": runs, "results": results}


EXPLANATION_SCHEMA_VERSION = 1


def explanation_to_dict(ex: Explanation) -> dict:
    return {
        "schema_version": EXPLANATION_SCHEMA_VERSION,
        "kind": "explanation",
        "unit_id": ex.unit_id,
        "blackbox_prediction": ex.blackbox_prediction,
        "surrogate_prediction": ex.surrogate_prediction,
        "intercept": ex.intercept,
        "surrogate_r_squared": ex.surrogate_r_squared,
        "kernel_width": ex.kernel_width,
        "contributions": [[n, float(v)] for n, v in ex.contributions],
        "all_contributions": [[n, float(v)] for n, v in ex.all_contributions],
        "coefficients": [float(c) for c in ex.coefficients],
        "config": {
            "n_samples": ex.config.n_samples,
            "kernel_width": ex.config.kernel_width,
            "n_features_shown": ex.config.n_features_shown,
            "lambda": ex.config.lam,
            "seed": ex.config.seed,
            "sampling": ex.config.sampling,
        },
    }


def explanation_from_dict(doc: dict) -> Explanation:
    if doc.get("kind") != "explanation":
        raise ValidationError("document is not an explanation")
    cfg = doc["config"]
    return Explanation(
        unit_id=doc["unit_id"],
        blackbox_prediction=float(doc["blackbox_prediction"]),
        surrogate_prediction=float(doc["surrogate_prediction"]),
        intercept=float(doc["intercept"]),
        contributions=tuple((n, float(v)) for n, v in doc["contributions"]),
        all_contributions=tuple((n, float(v)) for n, v in doc["all_contributions"]),
        coefficients=tuple(float(c) for c in doc["coefficients"]),
        surrogate_r_squared=float(doc["surrogate_r_squared"]),
        kernel_width=float(doc["kernel_width"]),
        config=LimeConfig(
            n_samples=cfg["n_samples"],
            kernel_width=cfg["kernel_width"],
            n_features_shown=cfg["n_features_shown"],
            lam=cfg["lambda"],
            seed=cfg["seed"],
            sampling=cfg["sampling"],
        ),
    )
