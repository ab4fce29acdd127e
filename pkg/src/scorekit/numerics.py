"""Scalar special functions used by the model code.

Everything here is vectorized over numpy arrays and safe in the tails:
the logistic function never overflows, and the Gaussian CDF is computed
through a rational approximation of the error function (Cody's scheme,
absolute error below 1e-15) with a dedicated log-domain path for deep
negative arguments.
"""

from __future__ import annotations

import numpy as np

_SQRT2 = np.sqrt(2.0)
_INV_SQRT_PI = 0.5641895835477562869480794515607726
_LOG_SQRT_2PI = 0.9189385332046727417803297364056176

# Rational coefficients for erf on |x| <= 0.46875.
_ERF_A = (
    3.16112374387056560e00,
    1.13864154151050156e02,
    3.77485237685302021e02,
    3.20937758913846947e03,
)
_ERF_A5 = 1.85777706184603153e-1
_ERF_B = (
    2.36012909523441209e01,
    2.44024637934444173e02,
    1.28261652607737228e03,
    2.84423683343917062e03,
)

# Rational coefficients for exp(x^2) * erfc(x) on 0.46875 < x <= 4.
_ERFC_C = (
    5.64188496988670089e-1,
    8.88314979438837594e00,
    6.61191906371416295e01,
    2.98635138197400131e02,
    8.81952221241769090e02,
    1.71204761263407058e03,
    2.05107837782607147e03,
    1.23033935479799725e03,
)
_ERFC_C9 = 2.15311535474403846e-8
_ERFC_D = (
    1.57449261107098347e01,
    1.17693950891312499e02,
    5.37181101862009858e02,
    1.62138957456669019e03,
    3.29079923573345963e03,
    4.36261909014324716e03,
    3.43936767414372164e03,
    1.23033935480374942e03,
)

# Rational coefficients for the asymptotic regime x > 4.
_ERFC_P = (
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
)
_ERFC_P6 = 1.63153871373020978e-2
_ERFC_Q = (
    2.56852019228982242e00,
    1.87295284992346047e00,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
)


def sigmoid(x):
    """Logistic function exp(x)/(1+exp(x)), overflow-safe for any x."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out if out.ndim else float(out)


def log1pexp(x):
    """log(1 + exp(x)) without overflow."""
    return np.logaddexp(0.0, x)


def logit(p):
    """Inverse of the logistic function."""
    p = np.asarray(p, dtype=float)
    out = np.log(p) - np.log1p(-p)
    return out if out.ndim else float(out)


def _erf_small(x):
    # |x| <= 0.46875
    y = x * x
    num = _ERF_A5 * y
    den = y
    for a, b in zip(_ERF_A[:3], _ERF_B[:3]):
        num = (num + a) * y
        den = (den + b) * y
    return x * (num + _ERF_A[3]) / (den + _ERF_B[3])


def _erfc_mid(x):
    # 0.46875 < x <= 4
    num = _ERFC_C9 * x
    den = x
    for c, d in zip(_ERFC_C[:7], _ERFC_D[:7]):
        num = (num + c) * x
        den = (den + d) * x
    result = (num + _ERFC_C[7]) / (den + _ERFC_D[7])
    # split exp(-x^2) to keep the tail accurate
    xtrunc = np.trunc(x * 16.0) / 16.0
    return np.exp(-xtrunc * xtrunc) * np.exp(-(x - xtrunc) * (x + xtrunc)) * result


def _erfc_large(x):
    # x > 4; underflows to 0 past ~26.5
    y = 1.0 / (x * x)
    num = _ERFC_P6 * y
    den = y
    for p, q in zip(_ERFC_P[:4], _ERFC_Q[:4]):
        num = (num + p) * y
        den = (den + q) * y
    result = y * (num + _ERFC_P[4]) / (den + _ERFC_Q[4])
    result = (_INV_SQRT_PI - result) / x
    xtrunc = np.trunc(x * 16.0) / 16.0
    with np.errstate(under="ignore"):
        return (
            np.exp(-xtrunc * xtrunc) * np.exp(-(x - xtrunc) * (x + xtrunc)) * result
        )


def erfc(x):
    """Complementary error function, rational approximation."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    ax = np.abs(x)
    out = np.empty_like(x)

    small = ax <= 0.46875
    mid = (ax > 0.46875) & (ax <= 4.0)
    large = ax > 4.0
    out[small] = 1.0 - _erf_small(x[small])
    out[mid] = _erfc_mid(ax[mid])
    out[large] = _erfc_large(ax[large])
    neg = (x < 0) & ~small
    out[neg] = 2.0 - out[neg]
    return float(out[0]) if scalar else out


def erf(x):
    """Error function, rational approximation."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)
    small = np.abs(x) <= 0.46875
    out[small] = _erf_small(x[small])
    out[~small] = 1.0 - erfc(np.atleast_1d(x[~small]))
    return float(out[0]) if scalar else out


def normal_cdf(x):
    """Standard Gaussian CDF."""
    x = np.asarray(x, dtype=float)
    out = 0.5 * erfc(-x / _SQRT2)
    return out


def normal_pdf(x):
    """Standard Gaussian density."""
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x - _LOG_SQRT_2PI)


def log_normal_cdf(x):
    """log of the standard Gaussian CDF, accurate for deep negative x.

    Below x = -25 the direct log underflows in relative accuracy, so the
    asymptotic expansion Phi(x) ~ phi(x)/(-x) * (1 - 1/x^2 + 3/x^4 - ...)
    is used instead; its truncation error there is below 1e-11 relative.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)

    deep = x < -25.0
    xd = x[deep]
    if xd.size:
        y = 1.0 / (xd * xd)
        series = 1.0 + y * (-1.0 + y * (3.0 + y * (-15.0 + y * 105.0)))
        out[deep] = -0.5 * xd * xd - _LOG_SQRT_2PI - np.log(-xd) + np.log(series)
    rest = ~deep
    out[rest] = np.log(normal_cdf(x[rest]))
    return float(out[0]) if scalar else out


def inverse_mills(x):
    """phi(x) / Phi(x), stable over the whole real line."""
    x = np.asarray(x, dtype=float)
    log_pdf = -0.5 * x * x - _LOG_SQRT_2PI
    with np.errstate(under="ignore"):
        out = np.exp(log_pdf - log_normal_cdf(x))
    return out if np.ndim(out) else float(out)
