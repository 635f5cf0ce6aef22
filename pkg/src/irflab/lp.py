"""Horizon-by-horizon local projections with lag augmentation, shock
residualization, heteroskedasticity-robust standard errors, and an iterative
small-sample bias correction."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from irflab.dataset import Dataset
from irflab.errors import DegenerateShockError, InputError, InsufficientSampleError
from irflab.ols import build_lag_design, ols_fit
from irflab.results import IrfResult

COMPOSITE_COLUMN = "__beta_shock"


@dataclass(frozen=True, eq=False)
class LpSpec:
    """One local-projection estimator: regress the outcome led h periods on
    the impulse at t, contemporaneous controls at t, and p lags of the
    lagged controls, for every horizon h = 0..H.

    ``long_difference`` replaces the dependent variable with
    y_{t+h} - y_{t-1}; with at least one lag of the outcome among the
    controls this leaves the impulse coefficient unchanged.
    ``hj_max_lag`` caps the autocovariance order used by the bias
    correction (default H + p).
    """

    outcome: str
    impulse: str
    contemporaneous_controls: tuple[str, ...] = ()
    lagged_controls: tuple[str, ...] = ()
    p: int = 1
    H: int = 0
    bias_correct: bool = True
    long_difference: bool = False
    hj_max_lag: int | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "contemporaneous_controls", tuple(self.contemporaneous_controls)
        )
        object.__setattr__(self, "lagged_controls", tuple(self.lagged_controls))
        if self.p < 0:
            raise InputError("lag count p must be >= 0")
        if self.H < 0:
            raise InputError("H must be >= 0")
        if self.long_difference and self.p < 1:
            raise InputError("long_difference requires p >= 1 (uses y_{t-1})")
        if self.impulse in self.contemporaneous_controls:
            raise InputError("impulse cannot also be a contemporaneous control")
        if self.hj_max_lag is not None and self.hj_max_lag < 1:
            raise InputError("hj_max_lag must be >= 1")


def observed_shock_spec(
    outcome: str,
    impulse: str,
    observables,
    p: int,
    H: int,
    variant: str = "full",
    **kwargs,
) -> LpSpec:
    """Standard specs for a directly observed shock.

    ``full`` controls for p lags of the shock and every observable;
    ``small`` controls only for lags of the shock and the outcome.
    """
    if variant == "full":
        lagged = tuple(dict.fromkeys((impulse, *observables)))
    elif variant == "small":
        lagged = tuple(dict.fromkeys((impulse, outcome)))
    else:
        raise InputError(f"unknown variant '{variant}' (expected 'full' or 'small')")
    return LpSpec(
        outcome=outcome,
        impulse=impulse,
        lagged_controls=lagged,
        p=p,
        H=H,
        **kwargs,
    )


def _design(data: Dataset, spec: LpSpec):
    """Full-sample (h=0) design [1 | x_t | r_t | lags] with column labels."""
    contemp = (spec.impulse,) + spec.contemporaneous_controls
    _, X, index_map = build_lag_design(data, contemp, spec.lagged_controls, spec.p)
    names = [name if lag is None else f"{name}.l{lag}" for name, lag in index_map]
    return X, names, index_map


def residualize_shock(data: Dataset, spec: LpSpec) -> np.ndarray:
    """Component of the impulse orthogonal to the controls.

    Residual from regressing x_t on the intercept, contemporaneous controls,
    and p lags of the lagged controls, over t = p+1..T.
    """
    _, Z, index_map = build_lag_design(
        data, spec.contemporaneous_controls, spec.lagged_controls, spec.p
    )
    x = data.column(spec.impulse)[spec.p :]
    names = [name if lag is None else f"{name}.l{lag}" for name, lag in index_map]
    fit = ols_fit(x, Z, robust=False, column_names=names)
    return fit.residuals[:, 0]


def _check_shock_not_degenerate(data: Dataset, spec: LpSpec) -> np.ndarray:
    x_tilde = residualize_shock(data, spec)
    x = data.column(spec.impulse)[spec.p :]
    vx = float(np.var(x))
    if vx == 0.0 or float(np.var(x_tilde)) <= 1e-12 * vx:
        raise DegenerateShockError(
            f"impulse '{spec.impulse}' has no variation orthogonal to the controls"
        )
    return x_tilde


def lp_estimate(data: Dataset, spec: LpSpec) -> IrfResult:
    """Local-projection impulse responses with EHW standard errors.

    For each horizon the coefficient on the impulse equals the bivariate
    regression of the led outcome on the residualized shock. Horizons whose
    effective sample cannot support the regression are dropped and reported
    in ``truncated``. When ``spec.bias_correct`` the iterative bias
    correction is applied before returning.
    """
    _check_shock_not_degenerate(data, spec)
    raw = _lp_raw(data, spec)
    if spec.bias_correct:
        return hj_bias_correct(raw, data, spec)
    return raw


def _lp_raw(data: Dataset, spec: LpSpec) -> IrfResult:
    X, names, _ = _design(data, spec)
    y = data.column(spec.outcome)
    T, p = data.T, spec.p
    rows = T - p
    k = X.shape[1]
    theta, se, eff = [], [], []
    warnings: tuple[str, ...] = ()
    truncated: tuple[int, ...] = ()
    for h in range(spec.H + 1):
        n_rows = rows - h
        if n_rows <= k:
            if h == 0:
                raise InsufficientSampleError(
                    f"T={T} cannot support an LP with {k} regressors and p={p} lags"
                )
            truncated = tuple(range(h, spec.H + 1))
            warnings = (
                f"horizons {h}..{spec.H} dropped: {n_rows} rows for {k} regressors",
            )
            break
        lead = y[p + h : T]
        if spec.long_difference:
            lead = lead - y[p - 1 : T - h - 1]
        fit = ols_fit(lead, X[:n_rows], robust=True, column_names=names)
        theta.append(float(fit.coefficients[1, 0]))
        se.append(float(np.sqrt(fit.ehw_vcov[0][1, 1])))
        eff.append(float(n_rows))
    return IrfResult(
        horizons=np.arange(len(theta)),
        theta=np.array(theta),
        se=np.array(se),
        method="lp",
        p=p,
        effective_T=np.array(eff),
        truncated=truncated,
        warnings=warnings,
    )


def lp_estimate_weighted(data: Dataset, beta, spec: LpSpec) -> IrfResult:
    """Local projection on the composite impulse beta'w_t, where w_t stacks
    the ``spec.lagged_controls`` columns."""
    beta = np.asarray(beta, dtype=float)
    w_cols = spec.lagged_controls
    if beta.shape != (len(w_cols),):
        raise InputError(
            f"beta has shape {beta.shape}, expected ({len(w_cols)},) matching {list(w_cols)}"
        )
    W = data.values[:, data.column_indices(w_cols)]
    composite = W @ beta
    augmented = data.with_column(COMPOSITE_COLUMN, composite)
    weighted_spec = replace(spec, impulse=COMPOSITE_COLUMN)
    return lp_estimate(augmented, weighted_spec)


def _hj_factors(data: Dataset, spec: LpSpec, max_lag: int) -> np.ndarray:
    """Autocorrelation factors a_i = 1 + tr(V_z^{-1} Gamma_z(i)) of the
    demeaned control vector, entering the estimation-error feedback term of
    the first-order LP bias."""
    X, _, index_map = _design(data, spec)
    ctrl = [
        j
        for j, (name, lag) in enumerate(index_map)
        if lag is not None and not (lag == 0 and name == spec.impulse)
    ]
    a = np.zeros(max_lag + 1)
    t0 = X.shape[0]
    upper = min(max_lag, t0 - 1)
    if not ctrl:
        a[1 : upper + 1] = 1.0
        return a
    Z = X[:, ctrl]
    Z = Z - Z.mean(axis=0)
    Vz = Z.T @ Z / t0
    for i in range(1, upper + 1):
        gamma_i = Z[i:].T @ Z[:-i] / (t0 - i)
        a[i] = 1.0 + float(np.trace(np.linalg.solve(Vz, gamma_i)))
    return a


def hj_bias_correct(raw: IrfResult, data: Dataset, spec: LpSpec) -> IrfResult:
    """Iterative first-order bias correction of LP point estimates.

    The horizon-h bias of the LP coefficient is approximately
    -(1/T_h) * sum_{i=1..h} a_i theta_{h-i}, driven by the feedback of
    estimated-control sampling error into the led outcome. Corrections are
    applied in horizon order, reusing already-corrected lower horizons;
    horizon 0 is unchanged. Sample autocovariances replace population ones;
    the order is capped at ``spec.hj_max_lag`` (default H + p).
    """
    max_lag = spec.hj_max_lag if spec.hj_max_lag is not None else raw.H + spec.p
    max_lag = max(max_lag, 1)
    a = _hj_factors(data, spec, max_lag)
    theta = raw.theta.copy()
    eff = (
        raw.effective_T
        if raw.effective_T is not None
        else np.full(raw.H + 1, float(data.T - spec.p))
    )
    corrected = theta.copy()
    for h in range(1, raw.H + 1):
        feedback = 0.0
        for i in range(1, min(h, max_lag) + 1):
            feedback += a[i] * corrected[h - i]
        corrected[h] = theta[h] + feedback / eff[h]
    diagnostics = dict(raw.diagnostics)
    diagnostics["hj_factors"] = tuple(float(v) for v in a[1:])
    return replace(
        raw,
        theta=corrected,
        correction=corrected - theta,
        diagnostics=diagnostics,
    )
