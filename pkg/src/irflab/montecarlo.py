"""Deterministic Monte Carlo harness over DGP x estimator x horizon grids.

Replications are seeded by counter-hash (base seed and replication index fed
to a seed sequence), so reports are bitwise identical regardless of how many
workers execute them. Every estimator within a replication sees the same
simulated dataset; bootstrap-based estimators additionally share one
bootstrap seed per replication so interval comparisons use matched
randomness.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from dataclasses import replace as dc_replace

import numpy as np

from irflab.bootstrap import BootConfig, lp_percentile_t_ci, var_efron_ci, var_in_lp_share
from irflab.config import config_hash, expect_keys, typed
from irflab.dataset import Dataset
from irflab.dgp import SHOCK_COLUMN, DgpSpec, simulate, true_irf
from irflab.errors import InputError, IrflabError, NumericalError
from irflab.lp import lp_estimate, observed_shock_spec
from irflab.ols import aic_select_var_lag
from irflab.results import IrfResult
from irflab.var import Identification, fit_var, pope_correct, structural_irf, var_delta_se

FAILURE_BUDGET = 0.01

STATISTIC_ORDER = (
    "true_theta",
    "mean_estimate",
    "bias",
    "abs_bias",
    "bias_mc_se",
    "sd",
    "mse",
    "coverage",
    "coverage_mc_se",
    "median_ci_width",
    "se_ratio_vs_reference",
    "scaled_diff_vs_reference",
    "var_in_lp_share",
)


@dataclass(frozen=True)
class EstimatorDef:
    """One estimator column of the experiment grid.

    ``p=None`` selects the lag length per replication by AIC up to
    ``p_max``. ``inference`` is "analytic" (normal interval from EHW or
    delta-method standard errors), "boot" (percentile-t for LP, Efron for
    VAR), or "none"; the empty string picks "analytic".
    """

    name: str
    method: str
    p: int | None = 1
    p_max: int = 8
    bias_correct: bool = True
    variant: str = "full"
    inference: str = ""
    level: float = 0.90
    normalization: str = "unit_impulse"
    boot_B: int = 500
    boot_block_len: int | None = None

    def __post_init__(self):
        if not self.name:
            raise InputError("estimator name must be non-empty")
        if self.method not in ("lp", "var"):
            raise InputError(f"estimator '{self.name}': method must be 'lp' or 'var'")
        if self.inference not in ("", "analytic", "boot", "none"):
            raise InputError(
                f"estimator '{self.name}': inference must be 'analytic', 'boot', or 'none'"
            )
        if self.p is not None and self.p < 1:
            raise InputError(f"estimator '{self.name}': p must be >= 1 (or null for AIC)")
        if self.p is None and self.p_max < 1:
            raise InputError(f"estimator '{self.name}': p_max must be >= 1")
        if not 0.0 < self.level < 1.0:
            raise InputError(f"estimator '{self.name}': level must be in (0, 1)")
        if self.variant not in ("full", "small"):
            raise InputError(f"estimator '{self.name}': variant must be 'full' or 'small'")
        if self.normalization not in ("unit_impulse", "one_sd"):
            raise InputError(
                f"estimator '{self.name}': normalization must be 'unit_impulse' or 'one_sd'"
            )
        if self.method == "var" and self.inference == "boot" and not self.bias_correct:
            raise InputError(
                f"estimator '{self.name}': the bootstrap VAR interval always bias-corrects"
            )

    @property
    def resolved_inference(self) -> str:
        if self.inference:
            return self.inference
        return "analytic"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "method": self.method,
            "p": self.p if self.p is not None else "aic",
            "p_max": self.p_max,
            "bias_correct": self.bias_correct,
            "variant": self.variant,
            "inference": self.resolved_inference,
            "level": self.level,
            "normalization": self.normalization,
            "boot": {"B": self.boot_B, "block_len": self.boot_block_len},
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "EstimatorDef":
        context = f"estimator '{payload.get('name', '?')}'"
        expect_keys(
            payload,
            context,
            required=("name", "method"),
            optional=(
                "p",
                "p_max",
                "bias_correct",
                "variant",
                "inference",
                "level",
                "normalization",
                "boot",
            ),
        )
        p_raw = payload.get("p", 1)
        if p_raw == "aic" or p_raw is None:
            p = None
        elif isinstance(p_raw, int) and not isinstance(p_raw, bool):
            p = p_raw
        else:
            raise InputError(f"{context}: 'p' must be an integer or 'aic'")
        boot = typed(payload, "boot", dict, context, default={}) or {}
        expect_keys(boot, f"{context} boot settings", required=(), optional=("B", "block_len"))
        return cls(
            name=typed(payload, "name", str, context),
            method=typed(payload, "method", str, context),
            p=p,
            p_max=typed(payload, "p_max", int, context, default=8),
            bias_correct=typed(payload, "bias_correct", bool, context, default=True),
            variant=typed(payload, "variant", str, context, default="full"),
            inference=typed(payload, "inference", str, context, default=""),
            level=typed(payload, "level", (int, float), context, default=0.90),
            normalization=typed(payload, "normalization", str, context, default="unit_impulse"),
            boot_B=typed(boot, "B", int, context, default=500),
            boot_block_len=typed(boot, "block_len", int, context, default=None),
        )


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """A full Monte Carlo experiment: DGP, sample size, replication count,
    horizon grid 0..horizons, estimator list, and seeding."""

    dgp: DgpSpec
    T: int
    reps: int
    horizons: int
    estimators: tuple[EstimatorDef, ...]
    base_seed: int = 0
    workers: int = 1
    impulse: str = SHOCK_COLUMN
    outcome: str | None = None
    reference: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "estimators", tuple(self.estimators))
        if self.T < 2:
            raise InputError("T must be >= 2")
        if self.reps < 1:
            raise InputError("reps must be >= 1")
        if self.horizons < 0:
            raise InputError("horizons must be >= 0")
        if self.base_seed < 0:
            raise InputError("base_seed must be a non-negative integer")
        if self.workers < 1:
            raise InputError("workers must be >= 1")
        if not self.estimators:
            raise InputError("at least one estimator is required")
        names = [e.name for e in self.estimators]
        if len(set(names)) != len(names):
            raise InputError(f"estimator names must be unique, got {names}")
        if self.reference is not None and self.reference not in names:
            raise InputError(f"reference estimator '{self.reference}' not among {names}")

    @property
    def resolved_outcome(self) -> str:
        return self.outcome or self.dgp.observable_columns[0]

    @property
    def resolved_reference(self) -> str | None:
        if self.reference is not None:
            return self.reference
        for est in self.estimators:
            if est.method == "lp":
                return est.name
        return None

    def to_dict(self) -> dict:
        # workers is an execution hint, not part of the experiment identity:
        # reports must hash identically no matter how they were scheduled.
        return {
            "dgp": self.dgp.to_dict(),
            "T": self.T,
            "reps": self.reps,
            "horizons": self.horizons,
            "base_seed": self.base_seed,
            "impulse": self.impulse,
            "outcome": self.resolved_outcome,
            "reference": self.resolved_reference,
            "estimators": [est.to_dict() for est in self.estimators],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ExperimentConfig":
        context = "experiment config"
        expect_keys(
            payload,
            context,
            required=("dgp", "T", "reps", "horizons", "estimators"),
            optional=("base_seed", "workers", "impulse", "outcome", "reference"),
        )
        estimators = typed(payload, "estimators", list, context)
        if not estimators:
            raise InputError(f"{context}: 'estimators' must be a non-empty list")
        return cls(
            dgp=DgpSpec.from_dict(typed(payload, "dgp", dict, context)),
            T=typed(payload, "T", int, context),
            reps=typed(payload, "reps", int, context),
            horizons=typed(payload, "horizons", int, context),
            estimators=tuple(EstimatorDef.from_dict(e) for e in estimators),
            base_seed=typed(payload, "base_seed", int, context, default=0),
            workers=typed(payload, "workers", int, context, default=1),
            impulse=typed(payload, "impulse", str, context, default=SHOCK_COLUMN),
            outcome=typed(payload, "outcome", str, context, default=None),
            reference=typed(payload, "reference", str, context, default=None),
        )


@dataclass(frozen=True, eq=False)
class McReport:
    """Aggregated Monte Carlo results: per-estimator, per-horizon statistic
    arrays plus the true impulse response and a failure ledger."""

    estimators: tuple[str, ...]
    horizons: np.ndarray
    true_irf: np.ndarray
    stats: dict
    failures: tuple[tuple[str, int, str], ...]
    reps: int
    config_payload: dict = field(default_factory=dict)
    group: str = ""

    def value(self, estimator: str, statistic: str) -> np.ndarray:
        if estimator not in self.stats:
            raise InputError(f"no estimator '{estimator}' in report {list(self.stats)}")
        cells = self.stats[estimator]
        if statistic not in cells:
            raise InputError(
                f"no statistic '{statistic}' for '{estimator}'; have {sorted(cells)}"
            )
        return cells[statistic]

    def at(self, estimator: str, statistic: str, horizon: int) -> float:
        return float(self.value(estimator, statistic)[horizon])

    def to_rows(self):
        """Tidy rows (group, estimator, horizon, statistic, value)."""
        rows = []
        for name in self.estimators:
            cells = self.stats[name]
            for statistic in STATISTIC_ORDER:
                if statistic not in cells:
                    continue
                values = cells[statistic]
                for h in self.horizons:
                    rows.append((self.group, name, int(h), statistic, float(values[h])))
        return rows

    def summary_dict(self, version: str = "") -> dict:
        def listify(arr):
            return [None if not math.isfinite(v) else float(v) for v in arr]

        return {
            "version": version,
            "group": self.group,
            "config_hash": config_hash(self.config_payload) if self.config_payload else "",
            "config": self.config_payload,
            "reps": self.reps,
            "estimators": list(self.estimators),
            "true_irf": listify(self.true_irf),
            "failures": [
                {"estimator": name, "rep": rep, "message": message}
                for name, rep, message in self.failures
            ],
            "cells": {
                name: {
                    statistic: listify(values)
                    for statistic, values in sorted(self.stats[name].items())
                }
                for name in self.estimators
            },
        }


def write_report_csv(reports, path_or_buffer, header_comment: str | None = None) -> None:
    """Tidy CSV (one row per estimator x horizon x statistic) for one report
    or a sequence of grouped reports."""
    if isinstance(reports, McReport):
        reports = [reports]
    own = not hasattr(path_or_buffer, "write")
    fh = open(path_or_buffer, "w", encoding="utf-8", newline="") if own else path_or_buffer
    try:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["group", "estimator", "horizon", "statistic", "value"])
        for report in reports:
            for group, name, h, statistic, value in report.to_rows():
                writer.writerow(
                    [group, name, h, statistic, "" if not math.isfinite(value) else repr(value)]
                )
    finally:
        if own:
            fh.close()


def _derived_seed(base_seed: int, rep: int, stream: int) -> int:
    return int(np.random.SeedSequence([base_seed, rep, stream]).generate_state(2, np.uint64)[0])


def _var_columns(data: Dataset, impulse: str) -> tuple[str, ...]:
    if impulse not in data.names:
        raise InputError(f"impulse column '{impulse}' not in dataset {list(data.names)}")
    if impulse == SHOCK_COLUMN:
        return (impulse,) + tuple(name for name in data.names if name != impulse)
    # Impulse is an observable: the estimators run on the observables alone,
    # identifying the shock recursively.  The simulator's shock column is
    # excluded -- keeping it alongside the variables it drives would make
    # lagged designs exactly collinear (the data-generating recursion ties a
    # lag of the outcome to lags of the shock with no residual freedom).
    return tuple(name for name in data.names if name != SHOCK_COLUMN)


def _resolve_p(est: EstimatorDef, data: Dataset, columns) -> int:
    if est.p is not None:
        return est.p
    return aic_select_var_lag(data, columns, est.p_max)


def _estimate_one(
    data: Dataset, est: EstimatorDef, config: ExperimentConfig, boot_seed: int
) -> IrfResult:
    columns = _var_columns(data, config.impulse)
    p = _resolve_p(est, data, columns)
    outcome = config.resolved_outcome
    scheme = "observed_shock" if config.impulse == SHOCK_COLUMN else "recursive"
    if est.method == "lp":
        spec = observed_shock_spec(
            outcome,
            config.impulse,
            columns,
            p=p,
            H=config.horizons,
            variant=est.variant,
            bias_correct=est.bias_correct,
        )
        if scheme == "recursive":
            before = columns[: columns.index(config.impulse)]
            spec = dc_replace(spec, contemporaneous_controls=before)
        if est.resolved_inference == "boot":
            boot = BootConfig(
                B=est.boot_B, block_len=est.boot_block_len, level=est.level, seed=boot_seed
            )
            return lp_percentile_t_ci(data, spec, var_p=p, config=boot, var_columns=columns)
        result = lp_estimate(data, spec)
        if est.resolved_inference == "analytic":
            result = result.with_analytic_ci(est.level)
        return result
    ident = Identification(scheme, impulse=config.impulse, outcome=outcome, ordering=columns)
    if est.resolved_inference == "boot":
        boot = BootConfig(
            B=est.boot_B, block_len=est.boot_block_len, level=est.level, seed=boot_seed
        )
        return var_efron_ci(
            data, columns, ident, p, config.horizons, boot, unit=est.normalization
        )
    fit = fit_var(data, columns, p)
    if est.bias_correct:
        fit = pope_correct(fit)
    result = structural_irf(fit, ident, config.horizons, unit=est.normalization)
    if est.resolved_inference == "analytic":
        se = var_delta_se(fit, ident, config.horizons, unit=est.normalization)
        result = dc_replace(result, se=se).with_analytic_ci(est.level)
    return result


def _padded(values, n: int) -> np.ndarray:
    out = np.full(n, np.nan)
    if values is not None:
        m = min(len(values), n)
        out[:m] = values[:m]
    return out


def _run_rep(config: ExperimentConfig, rep: int):
    """One replication: simulate once, run every estimator on that sample."""
    sim_seed = _derived_seed(config.base_seed, rep, 0)
    boot_seed = _derived_seed(config.base_seed, rep, 1)
    data = simulate(config.dgp, config.T, sim_seed)
    n_h = config.horizons + 1
    per_est = {}
    failures = []
    for est in config.estimators:
        try:
            result = _estimate_one(data, est, config, boot_seed)
        except IrflabError as exc:
            failures.append((est.name, rep, f"{type(exc).__name__}: {exc}"))
            per_est[est.name] = None
            continue
        per_est[est.name] = {
            "theta": _padded(result.theta, n_h),
            "se": _padded(result.se, n_h),
            "ci_lo": _padded(result.ci_lo, n_h),
            "ci_hi": _padded(result.ci_hi, n_h),
        }
    return rep, per_est, failures


def _rep_batch(args):
    config, reps = args
    return [_run_rep(config, rep) for rep in reps]


def run_experiment(config: ExperimentConfig, group: str = "", workers: int | None = None) -> McReport:
    """Run the full replication grid and aggregate.

    bias = mean(estimate) - true theta, sd is the population standard
    deviation over replications, mse = bias^2 + sd^2, coverage is the share
    of intervals containing the true value. Any estimator failing on more
    than 1% of replications aborts with a per-estimator failure ledger.
    """
    n_workers = workers if workers is not None else config.workers
    n_h = config.horizons + 1
    names = [est.name for est in config.estimators]
    arrays = {
        name: {key: np.full((config.reps, n_h), np.nan) for key in ("theta", "se", "ci_lo", "ci_hi")}
        for name in names
    }
    failures: list[tuple[str, int, str]] = []

    if n_workers <= 1 or config.reps == 1:
        outputs = (_run_rep(config, rep) for rep in range(config.reps))
        _collect(outputs, arrays, failures)
    else:
        n_workers = min(n_workers, config.reps)
        chunk = math.ceil(config.reps / (n_workers * 4))
        batches = [
            (config, list(range(start, min(start + chunk, config.reps))))
            for start in range(0, config.reps, chunk)
        ]
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            for batch_result in pool.map(_rep_batch, batches):
                _collect(batch_result, arrays, failures)

    failures.sort(key=lambda item: (item[1], item[0]))
    counts = {name: sum(1 for f in failures if f[0] == name) for name in names}
    over_budget = {n: c for n, c in counts.items() if c / config.reps > FAILURE_BUDGET}
    if over_budget:
        ledger = "; ".join(
            f"{name}: {count}/{config.reps} failed" for name, count in sorted(over_budget.items())
        )
        detail = "\n".join(
            f"  {name} rep {rep}: {message}" for name, rep, message in failures[:20]
        )
        raise NumericalError(
            f"experiment aborted, failure budget ({FAILURE_BUDGET:.0%}) exceeded: {ledger}\n{detail}"
        )

    truth = true_irf(config.dgp, config.horizons).values
    reference = config.resolved_reference
    stats = {}
    for name in names:
        stats[name] = _aggregate_cells(arrays[name], truth)
    if reference is not None:
        ref = arrays[reference]
        for est in config.estimators:
            if est.name == reference:
                continue
            cells = arrays[est.name]
            extra = _reference_cells(cells, ref, est.method)
            stats[est.name].update(extra)
    return McReport(
        estimators=tuple(names),
        horizons=np.arange(n_h),
        true_irf=truth,
        stats=stats,
        failures=tuple(failures),
        reps=config.reps,
        config_payload=config.to_dict(),
        group=group,
    )


def _collect(outputs, arrays, failures):
    for rep, per_est, fails in outputs:
        failures.extend(fails)
        for name, cells in per_est.items():
            if cells is None:
                continue
            for key, values in cells.items():
                arrays[name][key][rep] = values


def _aggregate_cells(cells: dict, truth: np.ndarray) -> dict:
    theta = cells["theta"]
    ok = np.isfinite(theta)
    n_ok = ok.sum(axis=0)
    with np.errstate(invalid="ignore"):
        mean = np.nanmean(np.where(ok, theta, np.nan), axis=0)
        sd = np.sqrt(np.nanmean((theta - mean) ** 2, axis=0))
    bias = mean - truth
    out = {
        "true_theta": truth.copy(),
        "mean_estimate": mean,
        "bias": bias,
        "abs_bias": np.abs(bias),
        "bias_mc_se": sd / np.sqrt(np.maximum(n_ok, 1)),
        "sd": sd,
        "mse": bias**2 + sd**2,
    }
    lo, hi = cells["ci_lo"], cells["ci_hi"]
    has_ci = np.isfinite(lo) & np.isfinite(hi)
    if has_ci.any():
        hits = (lo <= truth) & (truth <= hi) & has_ci
        denom = np.maximum(has_ci.sum(axis=0), 1)
        coverage = hits.sum(axis=0) / denom
        coverage = np.where(has_ci.any(axis=0), coverage, np.nan)
        out["coverage"] = coverage
        out["coverage_mc_se"] = np.sqrt(np.clip(coverage * (1 - coverage), 0, None) / denom)
        with np.errstate(invalid="ignore"):
            out["median_ci_width"] = np.nanmedian(np.where(has_ci, hi - lo, np.nan), axis=0)
    return out


def _reference_cells(cells: dict, ref: dict, method: str) -> dict:
    extra = {}
    se, ref_se = cells["se"], ref["se"]
    with np.errstate(invalid="ignore", divide="ignore"):
        if np.isfinite(se).any() and np.isfinite(ref_se).any():
            extra["se_ratio_vs_reference"] = np.nanmedian(se / ref_se, axis=0)
        if np.isfinite(se).any():
            diff = np.abs(ref["theta"] - cells["theta"]) / se
            extra["scaled_diff_vs_reference"] = np.nanmedian(diff, axis=0)
    if method == "var" and np.isfinite(ref["ci_lo"]).any():
        keep = np.isfinite(cells["theta"]) & np.isfinite(ref["ci_lo"]) & np.isfinite(ref["ci_hi"])
        theta = np.where(keep, cells["theta"], np.nan)
        lo = np.where(keep, ref["ci_lo"], np.inf)
        hi = np.where(keep, ref["ci_hi"], -np.inf)
        share = var_in_lp_share(theta, lo, hi)
        denom = np.maximum(keep.sum(axis=0), 1)
        extra["var_in_lp_share"] = np.where(
            keep.any(axis=0), share * theta.shape[0] / denom, np.nan
        )
    return extra


def sweep(configs, groups=None, workers: int | None = None):
    """Run several experiments and append a cross-experiment median report.

    All configs must share the horizon grid and estimator names. The final
    report (group "median") holds the per-statistic median across the
    experiments, so e.g. its "abs_bias" is the median absolute bias across
    DGPs.
    """
    configs = list(configs)
    if not configs:
        raise InputError("sweep requires at least one config")
    horizons = {c.horizons for c in configs}
    if len(horizons) > 1:
        raise InputError(f"configs have heterogeneous horizon grids: {sorted(horizons)}")
    name_sets = {tuple(e.name for e in c.estimators) for c in configs}
    if len(name_sets) > 1:
        raise InputError("configs must share estimator names for a sweep")
    if groups is None:
        groups = [f"dgp{i + 1}" for i in range(len(configs))]
    groups = [str(g) for g in groups]
    if len(groups) != len(configs):
        raise InputError(f"{len(groups)} group labels for {len(configs)} configs")
    if len(set(groups)) != len(groups):
        raise InputError("group labels must be unique")
    reports = [
        run_experiment(config, group=group, workers=workers)
        for config, group in zip(configs, groups)
    ]
    names = reports[0].estimators
    median_stats = {}
    for name in names:
        keys = sorted(set().union(*(set(r.stats[name]) for r in reports)))
        median_stats[name] = {}
        for key in keys:
            stacked = np.vstack(
                [
                    r.stats[name].get(key, np.full(len(r.horizons), np.nan))
                    for r in reports
                ]
            )
            with np.errstate(invalid="ignore"):
                median_stats[name][key] = np.nanmedian(stacked, axis=0)
    median_report = McReport(
        estimators=names,
        horizons=reports[0].horizons.copy(),
        true_irf=np.nanmedian(np.vstack([r.true_irf for r in reports]), axis=0),
        stats=median_stats,
        failures=tuple(f for r in reports for f in r.failures),
        reps=sum(r.reps for r in reports),
        config_payload={"sweep": [r.config_payload for r in reports]},
        group="median",
    )
    return tuple(reports) + (median_report,)


def write_summary_json(report: McReport, path, version: str = "") -> None:
    payload = report.summary_dict(version)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
