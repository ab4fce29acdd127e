"""Parametric probability-of-default models and a weighted ridge solver.

A GLM here is one of three links on the same linear predictor eta = b0 + x.b:
identity (plain least squares, predictions unbounded), logit, or probit.
The binary links are fit by Newton-Raphson on the log-likelihood with
step-halving, which keeps accepted iterations monotone in likelihood.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import (
    SeparationError,
    SingleClassError,
    SingularSystemError,
    ValidationError,
)
from .numerics import inverse_mills, log1pexp, log_normal_cdf, normal_cdf, sigmoid

LINKS = ("identity", "logit", "probit")

#: Coefficient magnitude beyond which a binary-link fit is declared separated.
SEPARATION_COEF_GUARD = 1e8
#: Mean log-likelihood this close to zero means the fit is (numerically) perfect.
SEPARATION_LL_GUARD = 1e-9

_PD_FLOOR = np.nextafter(0.0, 1.0)
_PD_CEIL = np.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class FitConfig:
    max_iterations: int = 100
    tolerance: float = 1e-8
    step_halvings: int = 10

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be at least 1")
        if self.tolerance <= 0:
            raise ValidationError("tolerance must be positive")
        if self.step_halvings < 0:
            raise ValidationError("step_halvings must be non-negative")


@dataclass(frozen=True)
class GlmModel:
    """Fitted PD model. coefficients[0] is the intercept.

    final_log_likelihood holds the log-likelihood at the final coefficients
    for the binary links; for the identity link it holds the residual sum
    of squares instead. ll_path records the value after each accepted
    Newton iteration (diagnostics only).
    """

    link: str
    coefficients: np.ndarray
    converged: bool
    iterations: int
    final_log_likelihood: float
    feature_names: tuple[str, ...] = ()
    ll_path: tuple = ()

    def __post_init__(self):
        if self.link not in LINKS:
            raise ValidationError(f"unknown link {self.link!r}")
        coefs = np.asarray(self.coefficients, dtype=float)
        if coefs.ndim != 1 or not np.all(np.isfinite(coefs)):
            raise ValidationError("coefficients must be a finite vector")
        coefs = coefs.copy()
        coefs.flags.writeable = False
        object.__setattr__(self, "coefficients", coefs)

    @property
    def n_features(self) -> int:
        return self.coefficients.size - 1


@dataclass(frozen=True)
class RidgeModel:
    """Weighted ridge fit; the intercept (coefficients[0]) is unpenalized."""

    coefficients: np.ndarray
    lam: float
    r_squared: float

    def __post_init__(self):
        coefs = np.asarray(self.coefficients, dtype=float).copy()
        coefs.flags.writeable = False
        object.__setattr__(self, "coefficients", coefs)

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return self.coefficients[0] + X @ self.coefficients[1:]


def design_matrix(features: np.ndarray) -> np.ndarray:
    """Prepend the intercept column of ones."""
    features = np.asarray(features, dtype=float)
    return np.hstack([np.ones((features.shape[0], 1)), features])


def log_likelihood(link: str, design: np.ndarray, y: np.ndarray, beta: np.ndarray) -> float:
    """Binomial log-likelihood of a binary-link GLM at the given coefficients."""
    eta = design @ beta
    if link == "logit":
        return float(np.sum(y * eta - log1pexp(eta)))
    if link == "probit":
        return float(np.sum(y * log_normal_cdf(eta) + (1 - y) * log_normal_cdf(-eta)))
    raise ValidationError(f"log-likelihood undefined for link {link!r}")


def log_likelihood_gradient(link, design, y, beta) -> np.ndarray:
    """Analytic gradient of log_likelihood with respect to the coefficients."""
    eta = design @ beta
    if link == "logit":
        u = y - sigmoid(eta)
    elif link == "probit":
        u = y * inverse_mills(eta) - (1 - y) * inverse_mills(-eta)
    else:
        raise ValidationError(f"gradient undefined for link {link!r}")
    return design.T @ u


def _newton_weights(link, eta, y):
    """Per-row curvature (negative second derivative in eta) of the log-likelihood."""
    if link == "logit":
        p = sigmoid(eta)
        return p * (1.0 - p)
    r1 = inverse_mills(eta)
    r0 = inverse_mills(-eta)
    return y * r1 * (eta + r1) + (1 - y) * r0 * (r0 - eta)


def fit_glm(data: Dataset, link: str, config: FitConfig = FitConfig()) -> GlmModel:
    """Fit a PD model by OLS (identity) or Newton-Raphson (logit/probit).

    Convergence means the largest absolute coefficient change of an
    accepted iteration fell below config.tolerance. Complete separation
    (diverging coefficients or a numerically perfect likelihood) raises
    SeparationError rather than returning a silently runaway fit.
    """
    if link not in LINKS:
        raise ValidationError(f"unknown link {link!r}; expected one of {LINKS}")
    X = design_matrix(data.features)
    y = data.target.astype(float)
    n, q = X.shape
    if n <= q:
        raise ValidationError(f"need more than {q} rows to fit {q} coefficients")

    if link == "identity":
        beta, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
        if rank < q:
            raise SingularSystemError("design matrix is rank deficient")
        rss = float(np.sum((y - X @ beta) ** 2))
        return GlmModel(
            link=link,
            coefficients=beta,
            converged=True,
            iterations=1,
            final_log_likelihood=rss,
            feature_names=data.feature_names,
        )

    if not (np.any(y == 1) and np.any(y == 0)):
        raise SingleClassError("binary-link fit requires both classes present")

    beta = np.zeros(q)
    ll = log_likelihood(link, X, y, beta)
    path = [ll]
    converged = False
    iterations = 0
    for _ in range(config.max_iterations):
        eta = X @ beta
        grad = log_likelihood_gradient(link, X, y, beta)
        w = _newton_weights(link, eta, y)
        hessian = (X * w[:, None]).T @ X
        try:
            direction = np.linalg.solve(hessian, grad)
        except np.linalg.LinAlgError:
            raise SingularSystemError("Newton system is singular")

        step = 1.0
        accepted = False
        for _ in range(config.step_halvings + 1):
            candidate = beta + step * direction
            ll_new = log_likelihood(link, X, y, candidate)
            if np.isfinite(ll_new) and ll_new >= ll:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break

        change = float(np.max(np.abs(step * direction)))
        beta = candidate
        ll = ll_new
        path.append(ll)
        iterations += 1

        if np.max(np.abs(beta)) > SEPARATION_COEF_GUARD:
            raise SeparationError(
                "complete separation detected: coefficients diverged"
            )
        if ll > -SEPARATION_LL_GUARD * n:
            raise SeparationError(
                "complete separation detected: likelihood reached its supremum"
            )
        if change < config.tolerance:
            converged = True
            break

    return GlmModel(
        link=link,
        coefficients=beta,
        converged=converged,
        iterations=iterations,
        final_log_likelihood=ll,
        feature_names=data.feature_names,
        ll_path=tuple(path),
    )


def predict_pd(model: GlmModel, x) -> float | np.ndarray:
    """Probability of default at x (a p-vector, or an (n, p) matrix).

    Identity-link predictions are the raw linear predictor and deliberately
    unbounded; logit/probit predictions are clipped into the open interval
    (0, 1) by one float step so downstream log terms stay finite.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValidationError(
            f"expected {model.n_features} features, got shape {x.shape}"
        )
    if not np.all(np.isfinite(X)):
        raise ValidationError("inputs must be finite")
    eta = model.coefficients[0] + X @ model.coefficients[1:]
    if model.link == "identity":
        out = eta
    elif model.link == "logit":
        out = np.clip(sigmoid(eta), _PD_FLOOR, _PD_CEIL)
    else:
        out = np.clip(normal_cdf(eta), _PD_FLOOR, _PD_CEIL)
    return float(out[0]) if single else out


def odds_ratios(model: GlmModel) -> np.ndarray:
    """exp(b_j) per non-intercept coefficient of a logit model.

    The value for feature j is the multiplicative change of the default
    odds P(Y=1|x)/P(Y=0|x) caused by a one-unit increase of feature j with
    every other regressor held fixed.
    """
    if model.link != "logit":
        raise ValidationError("odds ratios are defined for the logit link only")
    return np.exp(model.coefficients[1:])


def fit_ridge(features, response, weights, lam: float) -> RidgeModel:
    """Minimize sum_i w_i (y_i - b0 - x_i.b)^2 + lam * ||b||^2 in closed form.

    The intercept b0 is not penalized. r_squared is the weighted
    1 - SSres/SStot of the fit.
    """
    X = np.asarray(features, dtype=float)
    y = np.asarray(response, dtype=float)
    w = np.asarray(weights, dtype=float)
    if X.ndim != 2:
        raise ValidationError("features must be a 2-D matrix")
    n, p = X.shape
    if y.shape != (n,) or w.shape != (n,):
        raise ValidationError("response and weights must match the row count")
    if lam < 0:
        raise ValidationError("lambda must be non-negative")
    if np.any(w < 0):
        raise ValidationError("weights must be non-negative")
    if np.count_nonzero(w > 0) < p + 1:
        raise ValidationError(
            f"need at least {p + 1} strictly positive weights, "
            f"got {np.count_nonzero(w > 0)}"
        )

    Z = design_matrix(X)
    ZW = Z * w[:, None]
    lhs = ZW.T @ Z
    lhs[1:, 1:] += lam * np.eye(p)
    rhs = ZW.T @ y
    try:
        beta = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError:
        raise SingularSystemError(
            "penalized normal equations are singular (collinear inputs at lambda=0)"
        )

    fitted = Z @ beta
    w_sum = w.sum()
    y_bar = float(np.dot(w, y) / w_sum)
    ss_res = float(np.dot(w, (y - fitted) ** 2))
    ss_tot = float(np.dot(w, (y - y_bar) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return RidgeModel(coefficients=beta, lam=float(lam), r_squared=r2)


GLM_SCHEMA_VERSION = 1


def glm_to_dict(model: GlmModel) -> dict:
    return {
        "schema_version": GLM_SCHEMA_VERSION,
        "kind": "glm",
        "link": model.link,
        "feature_names": list(model.feature_names),
        "coefficients": [float(c) for c in model.coefficients],
        "converged": model.converged,
        "iterations": model.iterations,
        "final_log_likelihood": float(model.final_log_likelihood),
    }


def glm_from_dict(doc: dict) -> GlmModel:
    if doc.get("kind") != "glm":
        raise ValidationError("document is not a GLM model")
    if doc.get("schema_version") != GLM_SCHEMA_VERSION:
        raise ValidationError(
            f"unsupported GLM schema version {doc.get('schema_version')!r}"
        )
    return GlmModel(
        link=doc["link"],
        coefficients=np.array(doc["coefficients"], dtype=float),
        converged=bool(doc["converged"]),
        iterations=int(doc["iterations"]),
        final_log_likelihood=float(doc["final_log_likelihood"]),
        feature_names=tuple(doc["feature_names"]),
    )


def save_glm(model: GlmModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(glm_to_dict(model), fh, indent=1)
        fh.write("\n")


def load_glm(path) -> GlmModel:
    with open(path, "r", encoding="utf-8") as fh:
        return glm_from_dict(json.load(fh))
