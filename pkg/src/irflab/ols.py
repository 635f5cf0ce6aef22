"""Dense least squares with heteroskedasticity-robust covariance.

Shared numerical substrate for the LP and VAR estimators. Systems are solved
through a rank-revealing pivoted QR decomposition, never by inverting the
normal equations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from irflab.dataset import Dataset
from irflab.errors import InputError, InsufficientSampleError, SingularDesignError

RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class OlsFit:
    """Equation-by-equation least squares fit.

    ``coefficients`` is (regressors x equations); ``ehw_vcov`` stacks one
    (regressors x regressors) Eicker-Huber-White sandwich per equation.
    """

    coefficients: np.ndarray
    residuals: np.ndarray
    ehw_vcov: np.ndarray | None
    effective_T: int
    xtx_inv: np.ndarray | None = None


def _solve_qr(X: np.ndarray, Y: np.ndarray, column_names=None):
    """Pivoted-QR least squares. Returns (coefficients, xtx_inv)."""
    k = X.shape[1]
    Q, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True, check_finite=False)
    diag = np.abs(np.diag(R))
    scale = diag[0] if diag.size and diag[0] > 0 else 0.0
    if scale == 0.0 or np.any(diag < RANK_TOL * scale):
        bad = np.where(diag < RANK_TOL * max(scale, 1e-300))[0]
        cols = tuple(
            str(column_names[piv[i]]) if column_names is not None else f"column {piv[i]}"
            for i in bad
        )
        raise SingularDesignError(
            "rank-deficient design; offending columns: " + ", ".join(cols), cols
        )
    coef_piv = scipy.linalg.solve_triangular(R, Q.T @ Y, check_finite=False)
    coef = np.empty_like(coef_piv)
    coef[piv] = coef_piv
    r_inv = scipy.linalg.solve_triangular(R, np.eye(k), check_finite=False)
    xtx_inv_piv = r_inv @ r_inv.T
    xtx_inv = np.empty_like(xtx_inv_piv)
    xtx_inv[np.ix_(piv, piv)] = xtx_inv_piv
    return coef, xtx_inv


def ols_fit(Y, X, robust: bool = True, column_names=None) -> OlsFit:
    """Fit Y = X b + e equation by equation.

    Y may be a vector (one equation) or a matrix with one equation per
    column. When ``robust``, the EHW (HC0) sandwich
    (X'X)^-1 (sum_t x_t x_t' e_t^2) (X'X)^-1 is attached per equation.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    squeeze = Y.ndim == 1
    if squeeze:
        Y = Y[:, None]
    if X.ndim != 2:
        raise InputError("X must be 2-d")
    if Y.shape[0] != X.shape[0]:
        raise InputError(f"Y has {Y.shape[0]} rows but X has {X.shape[0]}")
    if X.shape[1] < 1:
        raise InputError("X needs at least one column")
    if X.shape[0] < X.shape[1]:
        raise InsufficientSampleError(
            f"{X.shape[0]} rows cannot identify {X.shape[1]} regressors"
        )
    coef, xtx_inv = _solve_qr(X, Y, column_names)
    resid = Y - X @ coef
    vcov = None
    if robust:
        m = Y.shape[1]
        k = X.shape[1]
        vcov = np.empty((m, k, k))
        for j in range(m):
            meat = (X * resid[:, j, None] ** 2).T @ X
            vcov[j] = xtx_inv @ meat @ xtx_inv
    return OlsFit(coef, resid, vcov, X.shape[0], xtx_inv)


def build_lag_design(
    data: Dataset,
    contemporaneous,
    lagged,
    p: int,
    intercept: bool = True,
):
    """Align outcomes at t with contemporaneous regressors and lags t-1..t-p.

    Returns ``(Y, X, index_map)``: ``Y`` holds every dataset column on the
    effective sample t = p+1..T (callers pick targets and shift for
    horizons), ``X`` is the design [intercept | contemporaneous at t | lags],
    and ``index_map`` lists one (column name, lag) pair per design column,
    with ("const", None) for the intercept and lag 0 for contemporaneous
    regressors.
    """
    if p < 0:
        raise InputError("lag count p must be >= 0")
    T = data.T
    if T - p < 1 or (p > 0 and T <= p + 1):
        raise InsufficientSampleError(f"T={T} leaves no usable rows with p={p} lags")
    contemporaneous = list(contemporaneous)
    lagged = list(lagged)
    values = data.values
    rows = T - p
    blocks = []
    index_map: list[tuple[str, int | None]] = []
    if intercept:
        blocks.append(np.ones((rows, 1)))
        index_map.append(("const", None))
    if contemporaneous:
        idx = data.column_indices(contemporaneous)
        blocks.append(values[p:T, idx])
        index_map.extend((name, 0) for name in contemporaneous)
    lag_idx = data.column_indices(lagged)
    for lag in range(1, p + 1):
        if lag_idx:
            blocks.append(values[p - lag : T - lag, lag_idx])
            index_map.extend((name, lag) for name in lagged)
    X = np.hstack(blocks) if blocks else np.empty((rows, 0))
    Y = values[p:T, :]
    return Y, X, index_map


def aic_select_var_lag(data: Dataset, columns, p_max: int) -> int:
    """Select the VAR lag length by AIC on the common sample t = p_max+1..T.

    AIC(p) = log det(Sigma_p) + 2 (n^2 p + n) / T_eff, with Sigma_p the
    residual covariance of the VAR(p) fit; ties break toward smaller p.
    """
    columns = list(columns)
    n = len(columns)
    if p_max < 1:
        raise InputError("p_max must be >= 1")
    T = data.T
    if T <= p_max * n + n + 1:
        raise InsufficientSampleError(
            f"T={T} too small for AIC selection with p_max={p_max} and n={n}"
        )
    Y, X, index_map = build_lag_design(data, [], columns, p_max)
    targets = Y[:, data.column_indices(columns)]
    t_eff = targets.shape[0]
    best_p, best_aic = 1, np.inf
    for p in range(1, p_max + 1):
        cols = [j for j, (_, lag) in enumerate(index_map) if lag is None or lag <= p]
        names = [f"{name}.l{lag}" if lag else str(name) for name, lag in index_map]
        fit = ols_fit(targets, X[:, cols], robust=False, column_names=[names[j] for j in cols])
        sigma = fit.residuals.T @ fit.residuals / t_eff
        sign, logdet = np.linalg.slogdet(sigma)
        if sign <= 0:
            raise SingularDesignError(f"singular residual covariance at p={p}")
        aic = logdet + 2.0 * (n * n * p + n) / t_eff
        if aic < best_aic:
            best_p, best_aic = p, aic
    return best_p
