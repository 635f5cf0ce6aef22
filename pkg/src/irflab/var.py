"""Reduced-form VAR estimation, analytical coefficient bias correction,
structural identification, and delta-method standard errors."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from irflab.dataset import Dataset
from irflab.dgp import companion_matrix, spectral_radius
from irflab.errors import (
    IdentificationError,
    InputError,
    NormalizationError,
)
from irflab.ols import build_lag_design, ols_fit
from irflab.results import IrfResult

STATIONARITY_TARGET = 1.0 - 1e-6


@dataclass(frozen=True, eq=False)
class VarFit:
    """A fitted VAR(p): w_t = c + sum_l A_l w_{t-l} + u_t.

    ``A`` is stacked (p, n, n) with A[l-1][i, j] the effect of variable j at
    lag l on equation i. ``Sigma`` is the residual covariance u'u / T_eff.
    ``design`` retains the regression design for delta-method standard
    errors.
    """

    A: np.ndarray
    c: np.ndarray
    Sigma: np.ndarray
    residuals: np.ndarray
    p: int
    column_names: tuple[str, ...]
    effective_T: int
    intercept: bool = True
    design: np.ndarray | None = None
    xtx_inv: np.ndarray | None = None
    warnings: tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return len(self.column_names)

    def companion(self) -> np.ndarray:
        return companion_matrix(tuple(self.A))

    def spectral_radius(self) -> float:
        return spectral_radius(self.companion())

    def unconditional_mean(self) -> np.ndarray:
        return np.linalg.solve(np.eye(self.n) - self.A.sum(axis=0), self.c)


@dataclass(frozen=True, eq=False)
class Identification:
    """How to map reduced-form innovations into the structural shock.

    ``recursive`` orthogonalizes via the Cholesky factor in ``ordering``
    (dataset order when omitted); ``observed_shock`` is recursive with the
    shock forced first; ``weight_vector`` takes the shock to be beta'u_t.
    """

    scheme: str
    impulse: str
    outcome: str
    ordering: tuple[str, ...] | None = None
    beta: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.scheme not in ("recursive", "observed_shock", "weight_vector"):
            raise InputError(f"unknown identification scheme '{self.scheme}'")
        if self.impulse == self.outcome and self.scheme != "recursive":
            # Recursive identification permits the self-impulse case (a
            # variable's response to its own orthogonalized innovation, the
            # univariate AR design); the other schemes define the shock
            # through a column or weight vector distinct from the outcome.
            raise InputError("impulse and outcome must name different columns")
        if self.ordering is not None:
            object.__setattr__(self, "ordering", tuple(self.ordering))
        if self.scheme == "weight_vector":
            if self.beta is None:
                raise InputError("weight_vector identification requires beta")
            object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))

    def resolve_ordering(self, column_names: tuple[str, ...]) -> tuple[str, ...] | None:
        if self.scheme == "weight_vector":
            if len(self.beta) != len(column_names):
                raise InputError(
                    f"beta has length {len(self.beta)}, expected {len(column_names)}"
                )
            return None
        if self.impulse not in column_names:
            raise InputError(f"impulse column '{self.impulse}' not in {list(column_names)}")
        if self.outcome not in column_names:
            raise InputError(f"outcome column '{self.outcome}' not in {list(column_names)}")
        if self.scheme == "observed_shock":
            ordering = (self.impulse,) + tuple(c for c in column_names if c != self.impulse)
        else:
            ordering = self.ordering or tuple(column_names)
        if sorted(ordering) != sorted(column_names):
            raise InputError(
                f"ordering {list(ordering)} is not a permutation of {list(column_names)}"
            )
        return ordering


def fit_var(data: Dataset, columns, p: int, intercept: bool = True) -> VarFit:
    """Equation-by-equation least squares VAR(p) on the common sample
    t = p+1..T, with Sigma = u'u / T_eff."""
    columns = tuple(columns)
    n = len(columns)
    if p < 1:
        raise InputError("VAR lag count p must be >= 1")
    if data.T <= n * p + 1:
        raise InputError(f"T={data.T} too small for VAR({p}) in {n} variables")
    Y, X, index_map = build_lag_design(data, [], columns, p, intercept=intercept)
    targets = Y[:, data.column_indices(columns)]
    names = [name if lag is None else f"{name}.l{lag}" for name, lag in index_map]
    fit = ols_fit(targets, X, robust=False, column_names=names)
    coef = fit.coefficients
    t_eff = fit.effective_T
    offset = 1 if intercept else 0
    A = np.empty((p, n, n))
    for ell in range(1, p + 1):
        block = coef[offset + (ell - 1) * n : offset + ell * n, :]
        A[ell - 1] = block.T
    c = coef[0].copy() if intercept else np.zeros(n)
    sigma = fit.residuals.T @ fit.residuals / t_eff
    return VarFit(
        A=A,
        c=c,
        Sigma=sigma,
        residuals=fit.residuals,
        p=p,
        column_names=columns,
        effective_T=t_eff,
        intercept=intercept,
        design=X,
        xtx_inv=fit.xtx_inv,
    )


def _pope_b(companion: np.ndarray, sigma_c: np.ndarray, gamma0: np.ndarray, intercept: bool):
    """First-order bias numerator of the least-squares companion estimator:
    E[A_hat] ~ A - b/T."""
    m = companion.shape[0]
    eye = np.eye(m)
    At = companion.T
    core = At @ np.linalg.inv(eye - At @ At)
    if intercept:
        core = core + np.linalg.inv(eye - At)
    eigvals = np.linalg.eigvals(companion)
    acc = np.zeros((m, m), dtype=complex)
    for lam in eigvals:
        acc += lam * np.linalg.inv(eye - lam * At)
    core = core + acc.real
    return sigma_c @ core @ np.linalg.inv(gamma0)


def pope_correct(fit: VarFit) -> VarFit:
    """Analytical first-order bias correction of the VAR coefficients.

    Corrects A_hat by +b/T_eff where b is the classical least-squares bias
    numerator for stationary autoregressions (reducing to the familiar
    (1+3 rho)/T for an AR(1) with intercept). If the corrected system is
    explosive the correction is damped toward zero until the companion
    spectral radius is at most 1 - 1e-6. The intercept is adjusted so the
    implied unconditional mean is unchanged.
    """
    comp = fit.companion()
    if spectral_radius(comp) >= 1.0:
        return replace(fit, warnings=fit.warnings + ("pope: non-stationary fit left unchanged",))
    n, p = fit.n, fit.p
    sigma_c = np.zeros_like(comp)
    sigma_c[:n, :n] = fit.Sigma
    try:
        gamma0 = scipy.linalg.solve_discrete_lyapunov(comp, sigma_c)
        b = _pope_b(comp, sigma_c, gamma0, fit.intercept)
    except np.linalg.LinAlgError:
        return replace(
            fit,
            warnings=fit.warnings + ("pope: singular moment matrix, fit left unchanged",),
        )
    correction = b / fit.effective_T
    warnings = fit.warnings
    corrected = None
    for scale in np.linspace(1.0, 0.0, 101):
        candidate = comp + scale * correction
        if spectral_radius(candidate) <= STATIONARITY_TARGET:
            corrected = candidate
            if scale < 1.0:
                warnings = warnings + (f"pope: correction damped by factor {scale:.2f}",)
            break
    if corrected is None:
        return replace(
            fit, warnings=fit.warnings + ("pope: correction skipped, fit nearly non-stationary",)
        )
    A = np.stack([corrected[:n, ell * n : (ell + 1) * n] for ell in range(p)])
    c = fit.c
    if fit.intercept:
        mu = fit.unconditional_mean()
        c = (np.eye(n) - A.sum(axis=0)) @ mu
    return replace(fit, A=A, c=c, warnings=warnings)


def _reduced_irf_matrices(A: np.ndarray, H: int) -> np.ndarray:
    p, n = A.shape[0], A.shape[1]
    C = np.empty((H + 1, n, n))
    C[0] = np.eye(n)
    for h in range(1, H + 1):
        acc = np.zeros((n, n))
        for ell in range(1, min(h, p) + 1):
            acc += A[ell - 1] @ C[h - ell]
        C[h] = acc
    return C


def reduced_irf(fit: VarFit, H: int) -> np.ndarray:
    """Reduced-form moving average matrices C_0..C_H from the recursion
    C_h = sum_{l=1..min(h,p)} A_l C_{h-l}, C_0 = I."""
    if H < 0:
        raise InputError("H must be >= 0")
    return _reduced_irf_matrices(fit.A, H)


def cholesky_factor(Sigma) -> np.ndarray:
    """Lower-triangular B with positive diagonal and BB' = Sigma."""
    sigma = np.atleast_2d(np.asarray(Sigma, dtype=float))
    if sigma.shape[0] != sigma.shape[1]:
        raise IdentificationError(f"covariance must be square, got {sigma.shape}")
    scale = float(np.abs(sigma).max()) or 1.0
    if not np.allclose(sigma, sigma.T, atol=1e-8 * scale):
        raise IdentificationError("covariance must be symmetric")
    sym = 0.5 * (sigma + sigma.T)
    try:
        return np.linalg.cholesky(sym)
    except np.linalg.LinAlgError:
        eigmin = float(np.linalg.eigvalsh(sym).min())
        if eigmin < -1e-10 * scale:
            raise IdentificationError(
                f"covariance not positive definite: smallest eigenvalue {eigmin:.3e}"
            ) from None
        jitter = abs(eigmin) + 1e-14 * scale
        for _ in range(4):
            try:
                return np.linalg.cholesky(sym + jitter * np.eye(sym.shape[0]))
            except np.linalg.LinAlgError:
                jitter *= 10.0
        raise IdentificationError(
            f"covariance numerically singular (smallest eigenvalue {eigmin:.3e})"
        ) from None


def _structural_impact(Sigma: np.ndarray, ident: Identification, column_names: tuple[str, ...]):
    """Impact vector of the identified shock on each variable (original
    column order)."""
    n = len(column_names)
    if ident.scheme == "weight_vector":
        beta = np.asarray(ident.beta, dtype=float)
        if beta.shape != (n,):
            raise InputError(f"beta must have length {n}")
        return Sigma @ beta
    ordering = ident.resolve_ordering(column_names)
    perm = [column_names.index(name) for name in ordering]
    b_perm = cholesky_factor(Sigma[np.ix_(perm, perm)])
    shock_idx = ordering.index(ident.impulse)
    impact = np.empty(n)
    impact[perm] = b_perm[:, shock_idx]
    return impact


def _structural_thetas(
    A: np.ndarray,
    Sigma: np.ndarray,
    column_names: tuple[str, ...],
    ident: Identification,
    H: int,
    unit: str,
) -> np.ndarray:
    impact = _structural_impact(Sigma, ident, column_names)
    C = _reduced_irf_matrices(A, H)
    responses = C @ impact
    y_idx = column_names.index(ident.outcome)
    theta = responses[:, y_idx]
    if unit == "unit_impulse":
        x_idx = column_names.index(ident.impulse)
        denom = impact[x_idx]
        if abs(denom) <= 1e-10 * max(1e-300, float(np.abs(impact).max())):
            raise NormalizationError(
                f"impact response of '{ident.impulse}' is zero; cannot normalize to a unit impulse"
            )
        theta = theta / denom
    elif unit != "one_sd":
        raise InputError(f"unknown normalization '{unit}'")
    return theta


def structural_irf(fit: VarFit, ident: Identification, H: int, unit: str = "one_sd") -> IrfResult:
    """Structural impulse responses of ``ident.outcome`` to the identified
    shock, horizons 0..H.

    ``one_sd`` reports the response to a one-standard-deviation structural
    shock (the Cholesky column); ``unit_impulse`` rescales so the impulse
    variable moves by one unit on impact.
    """
    if H < 0:
        raise InputError("H must be >= 0")
    if ident.scheme != "weight_vector":
        if ident.impulse not in fit.column_names:
            raise InputError(f"impulse column '{ident.impulse}' not in fit")
    if ident.outcome not in fit.column_names:
        raise InputError(f"outcome column '{ident.outcome}' not in fit")
    theta = _structural_thetas(fit.A, fit.Sigma, fit.column_names, ident, H, unit)
    return IrfResult(
        horizons=np.arange(H + 1),
        theta=theta,
        method="var",
        p=fit.p,
        effective_T=np.full(H + 1, float(fit.effective_T)),
        warnings=fit.warnings,
    )


def _vech_indices(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i + 1)]


def var_delta_se(fit: VarFit, ident: Identification, H: int, unit: str = "one_sd") -> np.ndarray:
    """Delta-method standard errors for the structural impulse responses.

    The Jacobian of theta_h with respect to the stacked (A, vech Sigma)
    parameters is computed by central differences with step
    1e-6 * (1 + |param|); it is sandwiched with the joint sampling covariance
    of the coefficients and residual covariance built from EHW-style
    per-observation moments.
    """
    if fit.design is None or fit.xtx_inv is None:
        raise InputError("fit does not retain its design; re-estimate with fit_var")
    n, p = fit.n, fit.p
    vech = _vech_indices(n)
    n_a = p * n * n
    dim = n_a + len(vech)

    def unpack(params: np.ndarray):
        A = params[:n_a].reshape(p, n, n)
        sig = np.empty((n, n))
        for k, (i, j) in enumerate(vech):
            sig[i, j] = sig[j, i] = params[n_a + k]
        return A, sig

    def thetas(params: np.ndarray) -> np.ndarray:
        A, sig = unpack(params)
        return _structural_thetas(A, sig, fit.column_names, ident, H, unit)

    base = np.concatenate([fit.A.ravel(), [fit.Sigma[i, j] for i, j in vech]])
    jac = np.empty((H + 1, dim))
    for k in range(dim):
        step = 1e-6 * (1.0 + abs(base[k]))
        for _ in range(4):
            try:
                hi = base.copy()
                hi[k] += step
                lo = base.copy()
                lo[k] -= step
                jac[:, k] = (thetas(hi) - thetas(lo)) / (2.0 * step)
                break
            except (IdentificationError, NormalizationError):
                step *= 0.1
        else:
            jac[:, k] = 0.0

    # Per-observation influences: slope estimators via (X'X)^-1 x_t u_t',
    # covariance entries via (u_i u_j - Sigma_ij)/T.
    X = fit.design
    u = fit.residuals
    t_eff = fit.effective_T
    sens = X @ fit.xtx_inv  # rows (X'X)^-1 x_t
    offset = 1 if fit.intercept else 0
    Z = np.empty((t_eff, dim))
    for ell in range(p):
        for i in range(n):
            for j in range(n):
                row = offset + ell * n + j
                Z[:, ell * n * n + i * n + j] = sens[:, row] * u[:, i]
    for k, (i, j) in enumerate(vech):
        Z[:, n_a + k] = (u[:, i] * u[:, j] - fit.Sigma[i, j]) / t_eff
    V = Z.T @ Z
    variances = np.einsum("hk,kl,hl->h", jac, V, jac)
    return np.sqrt(np.clip(variances, 0.0, None))
