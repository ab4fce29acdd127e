"""Gradient-boosted regression trees for binary PD on raw (log-odds) scores.

The loss is the binomial deviance. Each boosting step fits a shallow CART
regression tree to the negative gradient y - sigmoid(F) by greedy best
squared-error splits, then replaces every leaf value with the one-step
Newton estimate sum(y - p) / sum(p (1 - p)) over the leaf's rows. Trees
enter the ensemble damped by a constant learning rate, so the model
improves slowly and the training deviance never increases under the
default configuration.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .errors import SingleClassError, ValidationError
from .numerics import log1pexp, logit, sigmoid

_HESSIAN_FLOOR = 1e-12


@dataclass(frozen=True)
class GbmConfig:
    n_trees: int = 300
    max_depth: int = 3
    learning_rate: float = 0.1
    min_samples_leaf: int = 20
    subsample_fraction: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 0:
            raise ValidationError("n_trees must be non-negative")
        if self.max_depth < 1:
            raise ValidationError("max_depth must be at least 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValidationError("learning_rate must lie in (0, 1]")
        if self.min_samples_leaf < 1:
            raise ValidationError("min_samples_leaf must be at least 1")
        if not 0.0 < self.subsample_fraction <= 1.0:
            raise ValidationError("subsample_fraction must lie in (0, 1]")
        if self.seed < 0:
            raise ValidationError("seed must be a non-negative integer")


@dataclass
class TreeNode:
    """Internal node (feature_index/threshold/left/right) or leaf (value)."""

    feature_index: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    value: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass(frozen=True)
class BoostedEnsemble:
    """Additive model: initial_score + sum over trees of weight * leaf value."""

    initial_score: float
    trees: tuple
    tree_weights: tuple
    config: GbmConfig
    feature_names: tuple[str, ...] = ()
    train_deviance: tuple = ()

    def __post_init__(self):
        if len(self.trees) != len(self.tree_weights):
            raise ValidationError("trees and tree_weights must have equal length")

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


class _SplitContext:
    """Per-fit scratch for the split search.

    The feature matrix never changes during a fit, so each column is
    argsorted once up front; a node then recovers its own sorted order by
    filtering the global order through a membership mask, which is much
    cheaper than re-sorting large nodes. Small nodes fall back to a local
    sort.
    """

    def __init__(self, X: np.ndarray):
        self.X = X
        self.sort_idx = np.argsort(X, axis=0, kind="stable")
        self.member = np.zeros(X.shape[0], dtype=bool)

    def node_order(self, idx: np.ndarray, j: int) -> np.ndarray:
        n = self.X.shape[0]
        if idx.size * 32 < n:
            values = self.X[idx, j]
            return idx[np.argsort(values, kind="stable")]
        order = self.sort_idx[:, j]
        return order[self.member[order]]


def _find_best_split(ctx: _SplitContext, grad, idx, min_leaf):
    """Best (feature, threshold) by squared-error reduction of the gradient.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values. Ties in gain resolve to the lowest feature index, then the
    lowest threshold. Returns (gain, feature, threshold) or None.
    """
    m = idx.size
    best = None
    total = grad[idx].sum()
    base = total * total / m
    positions = np.arange(1, m)
    ctx.member[idx] = True
    for j in range(ctx.X.shape[1]):
        order = ctx.node_order(idx, j)
        sorted_vals = ctx.X[order, j]
        left_sums = np.cumsum(grad[order])[:-1]
        valid = (
            (sorted_vals[1:] > sorted_vals[:-1])
            & (positions >= min_leaf)
            & (m - positions >= min_leaf)
        )
        if not valid.any():
            continue
        gains = np.where(
            valid,
            left_sums**2 / positions
            + (total - left_sums) ** 2 / (m - positions)
            - base,
            -np.inf,
        )
        i = int(np.argmax(gains))
        if best is None or gains[i] > best[0]:
            best = (
                float(gains[i]),
                j,
                0.5 * (float(sorted_vals[i - 1]) + float(sorted_vals[i])),
            )
    ctx.member[idx] = False
    return best


def _build_tree(ctx, grad, hess, idx, depth, config):
    def leaf():
        return TreeNode(value=float(grad[idx].sum() / max(hess[idx].sum(), _HESSIAN_FLOOR)))

    if depth >= config.max_depth or idx.size < 2 * config.min_samples_leaf:
        return leaf()
    best = _find_best_split(ctx, grad, idx, config.min_samples_leaf)
    if best is None or best[0] <= 0.0:
        return leaf()
    _, feature, threshold = best
    mask = ctx.X[idx, feature] <= threshold
    return TreeNode(
        feature_index=feature,
        threshold=threshold,
        left=_build_tree(ctx, grad, hess, idx[mask], depth + 1, config),
        right=_build_tree(ctx, grad, hess, idx[~mask], depth + 1, config),
    )


def _apply_tree(node: TreeNode, X: np.ndarray) -> np.ndarray:
    """Leaf value per row of X."""
    out = np.empty(X.shape[0])

    def descend(nd, rows):
        if nd.is_leaf:
            out[rows] = nd.value
            return
        mask = X[rows, nd.feature_index] <= nd.threshold
        descend(nd.left, rows[mask])
        descend(nd.right, rows[~mask])

    descend(node, np.arange(X.shape[0]))
    return out


def _deviance(raw_scores: np.ndarray, y: np.ndarray) -> float:
    """Total binomial deviance, -2 * log-likelihood, on raw scores."""
    return float(2.0 * np.sum(log1pexp(raw_scores) - y * raw_scores))


def fit_gbm(train: Dataset, config: GbmConfig = GbmConfig()) -> BoostedEnsemble:
    """Fit the boosted ensemble. Deterministic given (data, config)."""
    y = train.target.astype(float)
    if not (np.any(y == 1) and np.any(y == 0)):
        raise SingleClassError("boosting requires both classes present")
    if train.n_rows < 2 * config.min_samples_leaf:
        raise ValidationError(
            f"need at least {2 * config.min_samples_leaf} rows for "
            f"min_samples_leaf={config.min_samples_leaf}"
        )
    X = train.features
    n = train.n_rows
    ctx = _SplitContext(X)
    initial = float(logit(y.mean()))
    F = np.full(n, initial)
    deviance_path = [_deviance(F, y)]

    rng = np.random.default_rng(config.seed)
    trees = []
    for _ in range(config.n_trees):
        p = sigmoid(F)
        grad = y - p
        hess = p * (1.0 - p)
        if config.subsample_fraction < 1.0:
            size = max(int(math.floor(config.subsample_fraction * n + 0.5)), 1)
            rows = np.sort(rng.choice(n, size=size, replace=False))
        else:
            rows = np.arange(n)
        tree = _build_tree(ctx, grad, hess, rows, 0, config)
        F = F + config.learning_rate * _apply_tree(tree, X)
        deviance_path.append(_deviance(F, y))
        trees.append(tree)

    return BoostedEnsemble(
        initial_score=initial,
        trees=tuple(trees),
        tree_weights=tuple([config.learning_rate] * len(trees)),
        config=config,
        feature_names=train.feature_names,
        train_deviance=tuple(deviance_path),
    )


def _check_input(model: BoostedEnsemble, x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValidationError(
            f"expected {model.n_features} features, got shape {x.shape}"
        )
    if not np.all(np.isfinite(X)):
        raise ValidationError("inputs must be finite")
    return X, single


def predict_raw(model: BoostedEnsemble, x) -> float | np.ndarray:
    """Raw additive score (log-odds scale) at x, a p-vector or (n, p) matrix."""
    X, single = _check_input(model, x)
    out = np.full(X.shape[0], model.initial_score)
    for weight, tree in zip(model.tree_weights, model.trees):
        out += weight * _apply_tree(tree, X)
    return float(out[0]) if single else out


def predict_pd(model: BoostedEnsemble, x) -> float | np.ndarray:
    """sigmoid(predict_raw), always inside (0, 1)."""
    return sigmoid(predict_raw(model, x))


def staged_deviance(model: BoostedEnsemble, data: Dataset) -> np.ndarray:
    """Deviance of the ensemble truncated after 0..n_trees trees.

    Evaluating on held-out data exposes the point where additional trees
    start to overfit.
    """
    X, _ = _check_input(model, data.features)
    y = data.target.astype(float)
    F = np.full(X.shape[0], model.initial_score)
    out = [_deviance(F, y)]
    for weight, tree in zip(model.tree_weights, model.trees):
        F += weight * _apply_tree(tree, X)
        out.append(_deviance(F, y))
    return np.array(out)


GBM_SCHEMA_VERSION = 1


def _encode_tree(node: TreeNode, out: list) -> None:
    if node.is_leaf:
        out.append({"v": float(node.value)})
    else:
        out.append({"f": node.feature_index, "t": float(node.threshold)})
        _encode_tree(node.left, out)
        _encode_tree(node.right, out)


def _decode_tree(nodes) -> TreeNode:
    entry = next(nodes)
    if "v" in entry:
        return TreeNode(value=float(entry["v"]))
    left = _decode_tree(nodes)
    right = _decode_tree(nodes)
    return TreeNode(
        feature_index=int(entry["f"]),
        threshold=float(entry["t"]),
        left=left,
        right=right,
    )


def ensemble_to_dict(model: BoostedEnsemble) -> dict:
    trees = []
    for tree in model.trees:
        encoded: list = []
        _encode_tree(tree, encoded)
        trees.append(encoded)
    return {
        "schema_version": GBM_SCHEMA_VERSION,
        "kind": "gbm",
        "feature_names": list(model.feature_names),
        "initial_score": float(model.initial_score),
        "tree_weights": [float(w) for w in model.tree_weights],
        "config": {
            "n_trees": model.config.n_trees,
            "max_depth": model.config.max_depth,
            "learning_rate": model.config.learning_rate,
            "min_samples_leaf": model.config.min_samples_leaf,
            "subsample_fraction": model.config.subsample_fraction,
            "seed": model.config.seed,
        },
        "train_deviance": [float(d) for d in model.train_deviance],
        "trees": trees,
    }


def ensemble_from_dict(doc: dict) -> BoostedEnsemble:
    if doc.get("kind") != "gbm":
        raise ValidationError("document is not a GBM model")
    if doc.get("schema_version") != GBM_SCHEMA_VERSION:
        raise ValidationError(
            f"unsupported GBM schema version {doc.get('schema_version')!r}"
        )
    trees = tuple(_decode_tree(iter(nodes)) for nodes in doc["trees"])
    return BoostedEnsemble(
        initial_score=float(doc["initial_score"]),
        trees=trees,
        tree_weights=tuple(float(w) for w in doc["tree_weights"]),
        config=GbmConfig(**doc["config"]),
        feature_names=tuple(doc["feature_names"]),
        train_deviance=tuple(float(d) for d in doc["train_deviance"]),
    )


def save_ensemble(model: BoostedEnsemble, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(ensemble_to_dict(model), fh)
        fh.write("\n")


def load_ensemble(path) -> BoostedEnsemble:
    with open(path, "r", encoding="utf-8") as fh:
        return ensemble_from_dict(json.load(fh))
