"""Residual block bootstrap driving percentile-t intervals for local
projections and Efron percentile intervals for VAR impulse responses.

Both interval constructions simulate bootstrap worlds from the same
bias-corrected VAR fitted to the data, so comparisons between them use
matched randomness when given the same seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from irflab.dataset import Dataset
from irflab.errors import (
    BootstrapError,
    DegenerateShockError,
    IdentificationError,
    InputError,
    InsufficientSampleError,
    NormalizationError,
    SingularDesignError,
)
from irflab.lp import LpSpec, lp_estimate
from irflab.results import IrfResult
from irflab.var import Identification, VarFit, fit_var, pope_correct, structural_irf

MAX_ATTEMPTS_PER_DRAW = 10

_RETRYABLE = (
    SingularDesignError,
    DegenerateShockError,
    IdentificationError,
    NormalizationError,
    InsufficientSampleError,
)


@dataclass(frozen=True)
class BootConfig:
    """Bootstrap settings: draw count B, block length (None picks the
    sample-size rule), target coverage level, and base seed."""

    B: int = 500
    block_len: int | None = None
    level: float = 0.90
    seed: int = 0

    def __post_init__(self):
        if self.B < 100:
            raise InputError("B must be >= 100")
        if not 0.0 < self.level < 1.0:
            raise InputError("level must be in (0, 1)")
        if self.block_len is not None and self.block_len < 1:
            raise InputError("block_len must be >= 1")
        if self.seed < 0:
            raise InputError("seed must be a non-negative integer")


def block_length_rule(T: int) -> int:
    """Block length ceil(5.03 * T^(1/4)), capped at floor(T/2)."""
    if T < 2:
        raise InputError("block length rule requires T >= 2")
    return min(math.ceil(5.03 * T**0.25), T // 2)


def resample_residuals(residuals, block_len: int, rng: np.random.Generator) -> np.ndarray:
    """Draw overlapping blocks uniformly and recenter by within-block
    position.

    Rows are resampled jointly across columns. Position s of every block is
    recentred by the average of the original rows that can occupy position s
    (the mean over admissible block starts), so the output is exactly
    mean-zero by construction, position by position.
    """
    R = np.asarray(residuals, dtype=float)
    squeeze = R.ndim == 1
    if squeeze:
        R = R[:, None]
    T = R.shape[0]
    if not 1 <= block_len <= T:
        raise InputError(f"block_len must be in 1..{T}, got {block_len}")
    n_starts = T - block_len + 1
    n_blocks = math.ceil(T / block_len)
    starts = rng.integers(0, n_starts, size=n_blocks)
    out = np.vstack([R[s : s + block_len] for s in starts])[:T]
    position_means = np.stack(
        [R[s : s + n_starts].mean(axis=0) for s in range(block_len)]
    )
    out = out - np.vstack([position_means] * n_blocks)[:T]
    return out[:, 0] if squeeze else out


def _simulate_world(
    fit: VarFit, source: np.ndarray, block_len: int, rng: np.random.Generator
) -> np.ndarray:
    """One bootstrap sample: iterate the fitted VAR on block-resampled
    residuals, with the initial p observations drawn as a contiguous block
    of the original data."""
    p, n = fit.p, fit.n
    u = resample_residuals(fit.residuals, block_len, rng)
    T = u.shape[0] + p
    start = int(rng.integers(0, T - p + 1))
    w = np.empty((T, n))
    w[:p] = source[start : start + p]
    for t in range(p, T):
        acc = fit.c + u[t - p]
        for ell in range(1, p + 1):
            acc = acc + fit.A[ell - 1] @ w[t - ell]
        w[t] = acc
    return w


def _draw_rng(seed: int, draw: int, attempt: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, draw, attempt]))


def _resolve_block_len(config: BootConfig, T: int, rows: int) -> int:
    if config.block_len is None:
        return max(1, min(block_length_rule(T), rows))
    if config.block_len > rows:
        raise InputError(
            f"block_len {config.block_len} exceeds the effective sample ({rows} rows)"
        )
    return config.block_len


def _var_columns_for(data: Dataset, lp_spec: LpSpec) -> tuple[str, ...]:
    used = {
        lp_spec.impulse,
        lp_spec.outcome,
        *lp_spec.contemporaneous_controls,
        *lp_spec.lagged_controls,
    }
    return tuple(name for name in data.names if name in used)


def _bootstrap_draws(fit, source, columns, block_len, config, estimate_one):
    """Run B bootstrap draws, redrawing on numerically degenerate samples
    (up to 10 attempts per draw), and collect estimate_one's output."""
    results = []
    retries = 0
    for d in range(config.B):
        for attempt in range(MAX_ATTEMPTS_PER_DRAW):
            rng = _draw_rng(config.seed, d, attempt)
            w = _simulate_world(fit, source, block_len, rng)
            boot_data = Dataset(columns, w)
            try:
                value = estimate_one(boot_data)
            except _RETRYABLE:
                retries += 1
                continue
            if value is None:
                retries += 1
                continue
            results.append(value)
            break
        else:
            raise BootstrapError(
                f"bootstrap draw {d} failed {MAX_ATTEMPTS_PER_DRAW} times in a row"
            )
    return np.array(results), retries


def lp_percentile_t_ci(
    data: Dataset,
    lp_spec: LpSpec,
    var_p: int,
    config: BootConfig,
    var_columns=None,
) -> IrfResult:
    """Percentile-t bootstrap interval for local-projection estimates.

    The data is re-generated from a bias-corrected VAR(var_p) in the
    columns the LP touches, driven by block-resampled residuals. Each draw
    re-runs the full LP (including its bias correction) and stores
    t* = (theta* - theta_VAR) / se*, centered at the structural impulse
    response implied by the bootstrap DGP itself. The interval is
    [theta - se q_{1-a/2}, theta - se q_{a/2}] with type-7 empirical
    quantiles of the t* draws.
    """
    base = lp_estimate(data, lp_spec)
    H = base.H
    columns = tuple(var_columns) if var_columns is not None else _var_columns_for(data, lp_spec)
    fit = pope_correct(fit_var(data, columns, var_p))
    rows = fit.residuals.shape[0]
    block_len = _resolve_block_len(config, data.T, rows)
    scheme = "recursive" if lp_spec.impulse == lp_spec.outcome else "observed_shock"
    ident = Identification(
        scheme, impulse=lp_spec.impulse, outcome=lp_spec.outcome, ordering=columns
    )
    center = structural_irf(fit, ident, H, unit="unit_impulse").theta
    source = data.values[:, data.column_indices(columns)]

    def one_lp(boot_data: Dataset):
        est = lp_estimate(boot_data, lp_spec)
        if est.H < H or np.any(est.se[: H + 1] <= 0.0) or not np.all(np.isfinite(est.theta)):
            return None
        return (est.theta[: H + 1] - center) / est.se[: H + 1]

    t_draws, retries = _bootstrap_draws(fit, source, columns, block_len, config, one_lp)
    a = 1.0 - config.level
    q_lo, q_hi = np.quantile(t_draws, [a / 2.0, 1.0 - a / 2.0], axis=0)
    diagnostics = dict(base.diagnostics)
    diagnostics.update(
        B=config.B,
        block_len=block_len,
        level=config.level,
        t_mean=tuple(float(v) for v in t_draws.mean(axis=0)),
        retries=retries,
        var_theta=tuple(float(v) for v in center),
    )
    return replace(
        base,
        ci_lo=base.theta - base.se * q_hi,
        ci_hi=base.theta - base.se * q_lo,
        method="lp_boot_t",
        warnings=base.warnings + fit.warnings,
        diagnostics=diagnostics,
    )


def var_efron_ci(
    data: Dataset,
    columns,
    ident: Identification,
    p: int,
    H: int,
    config: BootConfig,
    unit: str = "one_sd",
) -> IrfResult:
    """Efron percentile interval for bias-corrected VAR impulse responses.

    Bootstrap samples come from the bias-corrected VAR(p) with
    block-resampled residuals; each draw refits the VAR, re-applies the
    bias correction, and recomputes the structural impulse response. The
    interval is the empirical (a/2, 1-a/2) quantile band of those draws
    around the bias-corrected point estimate (not clipped to contain it;
    containment is reported as a diagnostic).
    """
    columns = tuple(columns)
    fit = pope_correct(fit_var(data, columns, p))
    point = structural_irf(fit, ident, H, unit=unit)
    rows = fit.residuals.shape[0]
    block_len = _resolve_block_len(config, data.T, rows)
    source = data.values[:, data.column_indices(columns)]

    def one_var(boot_data: Dataset):
        boot_fit = pope_correct(fit_var(boot_data, columns, p))
        theta = structural_irf(boot_fit, ident, H, unit=unit).theta
        if not np.all(np.isfinite(theta)):
            return None
        return theta

    draws, retries = _bootstrap_draws(fit, source, columns, block_len, config, one_var)
    a = 1.0 - config.level
    ci_lo, ci_hi = np.quantile(draws, [a / 2.0, 1.0 - a / 2.0], axis=0)
    contains = bool(np.all((ci_lo <= point.theta) & (point.theta <= ci_hi)))
    diagnostics = dict(point.diagnostics)
    diagnostics.update(
        B=config.B,
        block_len=block_len,
        level=config.level,
        contains_point=contains,
        retries=retries,
    )
    return replace(
        point,
        se=np.std(draws, axis=0, ddof=1),
        ci_lo=ci_lo,
        ci_hi=ci_hi,
        method="var_efron",
        diagnostics=diagnostics,
    )


def var_in_lp_share(var_theta, ci_lo, ci_hi) -> np.ndarray:
    """Per-horizon fraction of replications whose VAR point estimate lies
    inside the matched LP interval.

    Inputs are (replications x horizons) arrays with matching shapes.
    """
    var_theta = np.atleast_2d(np.asarray(var_theta, dtype=float))
    ci_lo = np.atleast_2d(np.asarray(ci_lo, dtype=float))
    ci_hi = np.atleast_2d(np.asarray(ci_hi, dtype=float))
    if not (var_theta.shape == ci_lo.shape == ci_hi.shape):
        raise InputError(
            f"mismatched replication grids: {var_theta.shape}, {ci_lo.shape}, {ci_hi.shape}"
        )
    inside = (var_theta >= ci_lo) & (var_theta <= ci_hi)
    return inside.mean(axis=0)
