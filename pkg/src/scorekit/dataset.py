"""Dataset container, CSV ingestion, stratified splitting, and a synthetic
credit-portfolio generator.

The generator draws equicorrelated Gaussian features and a binary default
flag from a known ground-truth model, calibrating the intercept so the
realized bad rate lands on the requested target. It exists so the whole
pipeline can be exercised at realistic sizes without any proprietary data.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BalanceToleranceError,
    CalibrationError,
    DataFormatError,
    MissingValueError,
    NonBinaryTargetError,
    NonNumericCellError,
    SingleClassError,
    ValidationError,
)

#: Highest achievable distance between realized and requested bad rate.
CALIBRATION_TOLERANCE = 0.005


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Dataset:
    """Immutable numeric feature matrix with a binary default target.

    target is 1 for a defaulted (bad) borrower, 0 otherwise. Features must
    be finite; missing values are rejected upstream at ingestion.
    """

    features: np.ndarray
    target: np.ndarray
    feature_names: tuple[str, ...]
    row_ids: tuple[str, ...]

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=float)
        if feats.ndim != 2:
            raise ValidationError("features must be a 2-D matrix")
        if not np.all(np.isfinite(feats)):
            raise ValidationError("features contain non-finite entries")
        target = np.asarray(self.target)
        if target.ndim != 1 or target.shape[0] != feats.shape[0]:
            raise ValidationError("target length must equal the row count")
        if not np.all(np.isin(target, (0, 1))):
            raise ValidationError("target values must be exactly 0 or 1")
        names = tuple(str(n) for n in self.feature_names)
        if len(names) != feats.shape[1]:
            raise ValidationError("feature_names length must equal column count")
        if len(set(names)) != len(names):
            raise ValidationError("feature names must be unique")
        ids = tuple(str(r) for r in self.row_ids)
        if len(ids) != feats.shape[0]:
            raise ValidationError("row_ids length must equal row count")
        object.__setattr__(self, "features", _frozen(feats))
        object.__setattr__(self, "target", _frozen(target.astype(np.int64)))
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "row_ids", ids)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def bad_rate(self) -> float:
        if self.n_rows == 0:
            return math.nan
        return float(self.target.mean())

    def take(self, indices) -> "Dataset":
        """New Dataset holding the given rows, in the given order."""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            features=self.features[idx],
            target=self.target[idx],
            feature_names=self.feature_names,
            row_ids=tuple(self.row_ids[i] for i in idx),
        )


@dataclass(frozen=True)
class SplitSpec:
    """Parameters of the stratified train/test split."""

    train_fraction: float = 0.70
    seed: int = 0
    balance_check_tolerance: float = 0.005

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValidationError("train_fraction must lie strictly in (0, 1)")
        if self.seed < 0:
            raise ValidationError("seed must be a non-negative integer")
        if self.balance_check_tolerance <= 0:
            raise ValidationError("balance_check_tolerance must be positive")


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the synthetic portfolio generator."""

    n_rows: int
    n_features: int
    bad_rate_target: float
    nonlinearity: str = "linear"
    correlation: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_rows < 1:
            raise ValidationError("n_rows must be positive")
        if self.n_features < 1:
            raise ValidationError("n_features must be positive")
        if not 0.0 < self.bad_rate_target < 1.0:
            raise ValidationError("bad_rate_target must lie strictly in (0, 1)")
        if self.nonlinearity not in ("linear", "nonlinear"):
            raise ValidationError("nonlinearity must be 'linear' or 'nonlinear'")
        if not 0.0 <= self.correlation < 1.0:
            raise ValidationError("correlation must lie in [0, 1)")
        if self.seed < 0:
            raise ValidationError("seed must be a non-negative integer")
        if self.nonlinearity == "nonlinear" and self.n_features < 6:
            raise ValidationError("nonlinear ground truth needs at least 6 features")


@dataclass(frozen=True)
class SyntheticTruth:
    """Ground-truth default model behind a generated dataset.

    The log-odds of default for a row x are
        intercept + linear . x + sum(c * x_i * x_j) + sum(c * [x_j > t]).
    """

    intercept: float
    linear: np.ndarray
    interactions: tuple = ()
    steps: tuple = ()

    def log_odds(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        eta = self.intercept + X @ self.linear
        for i, j, c in self.interactions:
            eta = eta + c * X[:, i] * X[:, j]
        for j, t, c in self.steps:
            eta = eta + c * (X[:, j] > t)
        return eta


@dataclass(frozen=True)
class FeatureSummary:
    name: str
    mean: float
    std: float
    min: float
    max: float


@dataclass(frozen=True)
class DatasetSummary:
    n_rows: int
    n_features: int
    bad_rate: float
    features: tuple = field(default_factory=tuple)


def load_csv(path, target_column: str) -> Dataset:
    """Read a dataset from a headered, comma-separated UTF-8 file.

    Every non-target column becomes a feature, in header order. Rejects
    (with an error naming the offending row and column) empty cells,
    cells that do not parse as finite numbers, and target values other
    than 0 and 1. Raises FileNotFoundError for a missing file.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file, header row required")
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            raise DataFormatError(f"{path}: duplicate column names in header")
        if target_column not in header:
            raise DataFormatError(
                f"{path}: target column {target_column!r} not found in header"
            )
        target_idx = header.index(target_column)
        feature_names = tuple(h for i, h in enumerate(header) if i != target_idx)

        rows = []
        targets = []
        for row_num, cells in enumerate(reader):
            if len(cells) != len(header):
                raise DataFormatError(
                    f"{path}: row {row_num} has {len(cells)} cells, "
                    f"expected {len(header)}"
                )
            parsed = []
            for col_idx, cell in enumerate(cells):
                name = header[col_idx]
                text = cell.strip()
                if not text:
                    raise MissingValueError(row_num, name)
                try:
                    value = float(text)
                except ValueError:
                    raise NonNumericCellError(row_num, name, text)
                if math.isnan(value):
                    raise MissingValueError(row_num, name)
                if math.isinf(value):
                    raise NonNumericCellError(row_num, name, text)
                if col_idx == target_idx:
                    if value not in (0.0, 1.0):
                        raise NonBinaryTargetError(row_num, name, text)
                    targets.append(int(value))
                else:
                    parsed.append(value)
            rows.append(parsed)

    n = len(rows)
    features = np.array(rows, dtype=float).reshape(n, len(feature_names))
    return Dataset(
        features=features,
        target=np.array(targets, dtype=np.int64),
        feature_names=feature_names,
        row_ids=tuple(str(i) for i in range(n)),
    )


def write_csv(data: Dataset, path, target_column: str = "target") -> None:
    """Write a dataset as CSV with deterministic, round-trippable floats."""
    if target_column in data.feature_names:
        raise ValidationError(
            f"target column name {target_column!r} collides with a feature"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join([*data.feature_names, target_column]) + "\n")
        feats = data.features.tolist()
        target = data.target.tolist()
        for row, y in zip(feats, target):
            fh.write(",".join(map(repr, row)) + f",{y}\n")


def split(data: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Stratified random train/test split, deterministic given the seed.

    Sampling is stratified by target so the bad rates of the two parts
    agree within spec.balance_check_tolerance; if the class counts are too
    small for that to be achievable, the split is refused.
    """
    y = data.target
    if not (np.any(y == 1) and np.any(y == 0)):
        raise SingleClassError("split requires both classes present")

    rng = np.random.default_rng(spec.seed)
    train_parts = []
    test_parts = []
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        perm = rng.permutation(idx)
        k = int(math.floor(spec.train_fraction * idx.size + 0.5))
        train_parts.append(perm[:k])
        test_parts.append(perm[k:])
    train_idx = np.sort(np.concatenate(train_parts))
    test_idx = np.sort(np.concatenate(test_parts))
    if train_idx.size == 0 or test_idx.size == 0:
        raise BalanceToleranceError("split produced an empty part; n too small")

    train = data.take(train_idx)
    test = data.take(test_idx)
    gap = abs(train.bad_rate - test.bad_rate)
    if gap > spec.balance_check_tolerance:
        raise BalanceToleranceError(
            f"bad-rate gap {gap:.4f} exceeds tolerance "
            f"{spec.balance_check_tolerance}; dataset too small to balance"
        )
    return train, test


#: Feature count at which the nonlinear ground truth carries its nominal scale.
REFERENCE_DIMENSION = 20


def synthetic_truth(spec: SyntheticSpec) -> SyntheticTruth:
    """Ground-truth model for a spec, before intercept calibration.

    Linear mode uses alternating-sign coefficients with decaying magnitude
    on every feature. Nonlinear mode keeps a weaker linear part on the
    first ten features and adds two pairwise interactions and two step
    terms, so only a tree model can represent the full relation; its
    coefficients are diluted by sqrt(20/p), mimicking wide portfolios that
    spread the same underwriting information over many weak variables.
    """
    p = spec.n_features
    j = np.arange(p, dtype=float)
    signs = np.where(j % 2 == 0, 1.0, -1.0)
    if spec.nonlinearity == "linear":
        linear = 0.8 * signs / np.sqrt(1.0 + j)
        return SyntheticTruth(intercept=0.0, linear=_frozen(linear))
    scale = math.sqrt(REFERENCE_DIMENSION / p)
    linear = scale * 0.8 * signs / np.sqrt(1.0 + j)
    linear[10:] = 0.0
    return SyntheticTruth(
        intercept=0.0,
        linear=_frozen(linear),
        interactions=((0, 1, 0.7 * scale), (2, 3, 0.5 * scale)),
        steps=((4, 0.5, 0.5 * scale), (5, -0.5, -0.5 * scale)),
    )


def _calibrate_intercept(eta0: np.ndarray, u: np.ndarray, target_rate: float):
    """Pick the intercept whose realized Bernoulli draw hits the target rate.

    A row defaults when u < sigmoid(eta0 + c), i.e. when logit(u) - eta0 < c,
    so the realized rate is a monotone step function of c and the best
    achievable rate is an order statistic away.
    """
    n = eta0.size
    thresholds = (np.log(u) - np.log1p(-u)) - eta0
    ordered = np.sort(thresholds)
    k = int(math.floor(target_rate * n + 0.5))
    k = min(max(k, 0), n)
    if abs(k / n - target_rate) > CALIBRATION_TOLERANCE:
        raise CalibrationError(
            f"cannot realize bad rate within {CALIBRATION_TOLERANCE} of "
            f"{target_rate} with {n} rows"
        )
    if k == 0:
        c = ordered[0] - 1.0
    elif k == n:
        c = ordered[-1] + 1.0
    else:
        c = 0.5 * (ordered[k - 1] + ordered[k])
    target = (thresholds < c).astype(np.int64)
    return float(c), target


def generate_synthetic_with_truth(spec: SyntheticSpec):
    """Generate a dataset plus the calibrated ground truth behind it.

    Features are standard Gaussians with the requested equicorrelation,
    built from a shared row factor: x = sqrt(rho) * g + sqrt(1-rho) * e.
    Bit-identical output for identical specs.
    """
    rng = np.random.default_rng(spec.seed)
    shared = rng.standard_normal((spec.n_rows, 1))
    noise = rng.standard_normal((spec.n_rows, spec.n_features))
    X = math.sqrt(spec.correlation) * shared + math.sqrt(1.0 - spec.correlation) * noise

    truth = synthetic_truth(spec)
    eta0 = truth.log_odds(X)
    u = rng.uniform(size=spec.n_rows)
    intercept, target = _calibrate_intercept(eta0, u, spec.bad_rate_target)
    truth = SyntheticTruth(
        intercept=intercept,
        linear=truth.linear,
        interactions=truth.interactions,
        steps=truth.steps,
    )
    data = Dataset(
        features=X,
        target=target,
        feature_names=tuple(f"x{i}" for i in range(spec.n_features)),
        row_ids=tuple(str(i) for i in range(spec.n_rows)),
    )
    return data, truth


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Generate a synthetic credit portfolio. See generate_synthetic_with_truth."""
    data, _ = generate_synthetic_with_truth(spec)
    return data


def summarize(data: Dataset) -> DatasetSummary:
    """Row count, bad rate, and per-feature location/scale statistics."""
    per_feature = []
    for i, name in enumerate(data.feature_names):
        col = data.features[:, i]
        per_feature.append(
            FeatureSummary(
                name=name,
                mean=float(col.mean()) if col.size else math.nan,
                std=float(col.std()) if col.size else math.nan,
                min=float(col.min()) if col.size else math.nan,
                max=float(col.max()) if col.size else math.nan,
            )
        )
    return DatasetSummary(
        n_rows=data.n_rows,
        n_features=data.n_features,
        bad_rate=data.bad_rate,
        features=tuple(per_feature),
    )
