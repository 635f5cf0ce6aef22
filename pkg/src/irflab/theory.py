"""Closed-form bias, coverage, MSE-preference, and disagreement curves.

Every function evaluates a large-sample formula exactly; nothing here is
simulated. ``bias_ratio`` is |bias| / sd(VAR), ``se_ratio`` is
sd(VAR) / sd(LP) in (0, 1], and ``sqrtTM`` is the misspecification magnitude
sqrt(T * M).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.special

from irflab.errors import InputError


@dataclass(frozen=True)
class TheoryPoint:
    """One point on the theory curves; variance ratios are user-supplied
    (they have no closed form here and are estimated by the Monte Carlo
    harness)."""

    bias_ratio: float = 0.0
    se_ratio: float = 1.0
    sqrtTM: float = 0.0
    level: float = 0.90

    def __post_init__(self):
        if not 0.0 < self.se_ratio <= 1.0:
            raise InputError("se_ratio must be in (0, 1]")
        if not 0.0 < self.level < 1.0:
            raise InputError("level must be in (0, 1)")
        if self.bias_ratio < 0 or self.sqrtTM < 0:
            raise InputError("bias_ratio and sqrtTM must be >= 0")


def norm_cdf(x):
    """Standard normal CDF (erf-based, absolute error below 1e-12)."""
    return scipy.special.ndtr(np.asarray(x, dtype=float))


def norm_quantile(q):
    """Standard normal quantile (inverse-CDF, error below 1e-9)."""
    q = np.asarray(q, dtype=float)
    if np.any(q <= 0.0) or np.any(q >= 1.0):
        raise InputError("quantile argument must be in (0, 1)")
    return scipy.special.ndtri(q)


def _maybe_scalar(x, *inputs):
    if all(np.isscalar(v) or np.ndim(v) == 0 for v in inputs):
        return float(x)
    return x


def var_bias_arma1(rho: float, alpha: float, h: int) -> float:
    """Asymptotic bias of the AR(1)-based VAR estimator at horizon h under a
    local ARMA(1,1) alternative: h rho^(h-1) (1-rho^2) alpha - rho^(h-1) alpha.
    """
    if h < 1:
        raise InputError("h must be >= 1")
    if not abs(rho) < 1:
        raise InputError("|rho| must be < 1")
    return float(h * rho ** (h - 1) * (1.0 - rho**2) * alpha - rho ** (h - 1) * alpha)


def _check_se_ratio(se_ratio, allow_one: bool = True):
    r = np.asarray(se_ratio, dtype=float)
    hi_ok = (r <= 1.0) if allow_one else (r < 1.0)
    if np.any(r <= 0.0) or not np.all(hi_ok):
        bound = "(0, 1]" if allow_one else "(0, 1)"
        raise InputError(f"se_ratio must be in {bound}: VAR standard errors are weakly smaller")
    return r


def bias_bound(sqrtTM, se_ratio):
    """Worst-case |bias| / sd(VAR): sqrtTM * sqrt(1 / se_ratio^2 - 1)."""
    r = _check_se_ratio(se_ratio)
    s = np.asarray(sqrtTM, dtype=float)
    if np.any(s < 0):
        raise InputError("sqrtTM must be >= 0")
    return _maybe_scalar(s * np.sqrt(1.0 / r**2 - 1.0), sqrtTM, se_ratio)


def coverage_curve(bias_ratio, level):
    """Coverage of the nominal ``level`` VAR interval at a given bias ratio:
    Phi(z - b) - Phi(-z - b) with z the 1-(1-level)/2 normal quantile."""
    b = np.asarray(bias_ratio, dtype=float)
    if np.any(b < 0):
        raise InputError("bias_ratio must be >= 0")
    lv = np.asarray(level, dtype=float)
    if np.any(lv <= 0) or np.any(lv >= 1):
        raise InputError("level must be in (0, 1)")
    z = scipy.special.ndtri(0.5 + lv / 2.0)
    return _maybe_scalar(norm_cdf(z - b) - norm_cdf(-z - b), bias_ratio, level)


def mse_components(bias, variance):
    """(mse, bias^2, variance) with mse = bias^2 + variance."""
    b = np.asarray(bias, dtype=float)
    v = np.asarray(variance, dtype=float)
    if np.any(v < 0):
        raise InputError("variance must be >= 0")
    mse = b**2 + v
    return (
        _maybe_scalar(mse, bias, variance),
        _maybe_scalar(b**2, bias, variance),
        _maybe_scalar(v, bias, variance),
    )


def mse_prefers_var(bias_ratio, se_ratio):
    """True when the VAR weakly wins on MSE:
    bias_ratio <= sqrt(1 / se_ratio^2 - 1)."""
    b = np.asarray(bias_ratio, dtype=float)
    if np.any(b < 0):
        raise InputError("bias_ratio must be >= 0")
    threshold = bias_bound(1.0, se_ratio)
    out = b <= np.asarray(threshold)
    if np.isscalar(bias_ratio) or np.ndim(bias_ratio) == 0:
        return bool(out)
    return out


def prob_var_outside_lp(sqrtTM, se_ratio, level):
    """Worst-case probability that the VAR point estimate falls outside the
    nominal ``level`` LP interval:
    P(|N(sqrtTM, 1)| > z_{1-a/2} / sqrt(1 - se_ratio^2))."""
    lv = np.asarray(level, dtype=float)
    if np.any(lv <= 0) or np.any(lv >= 1):
        raise InputError("level must be in (0, 1)")
    s = np.asarray(sqrtTM, dtype=float)
    if np.any(s < 0):
        raise InputError("sqrtTM must be >= 0")
    r = _check_se_ratio(se_ratio)
    if np.any(r == 1.0):
        warnings.warn(
            "se_ratio = 1: LP and VAR estimators coincide, disagreement probability is 0",
            stacklevel=2,
        )
        r = np.where(r == 1.0, np.nan, r)
    z = scipy.special.ndtri(0.5 + lv / 2.0)
    cut = z / np.sqrt(1.0 - r**2)
    prob = norm_cdf(s - cut) + norm_cdf(-cut - s)
    prob = np.where(np.isnan(cut), 0.0, prob)
    return _maybe_scalar(prob, sqrtTM, se_ratio, level)


def coverage_grid(levels, bias_ratios=None) -> list[tuple[float, float, float]]:
    """Rows (bias_ratio, level, coverage) over a bias-ratio grid."""
    if bias_ratios is None:
        bias_ratios = np.round(np.arange(0.0, 4.0 + 1e-9, 0.01), 10)
    rows = []
    for level in levels:
        for b in np.asarray(bias_ratios, dtype=float):
            rows.append((float(b), float(level), float(coverage_curve(b, level))))
    return rows


def bias_bound_grid(sqrtTMs, se_ratios) -> list[tuple[float, float, float]]:
    """Rows (sqrtTM, se_ratio, bound)."""
    return [
        (float(s), float(r), float(bias_bound(s, r)))
        for s in np.asarray(sqrtTMs, dtype=float)
        for r in np.asarray(se_ratios, dtype=float)
    ]


def prob_outside_grid(sqrtTMs, se_ratios, levels) -> list[tuple[float, float, float, float]]:
    """Rows (sqrtTM, se_ratio, level, prob_outside)."""
    return [
        (float(s), float(r), float(lv), float(prob_var_outside_lp(s, r, lv)))
        for s in np.asarray(sqrtTMs, dtype=float)
        for r in np.asarray(se_ratios, dtype=float)
        for lv in np.asarray(levels, dtype=float)
    ]
