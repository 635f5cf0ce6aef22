"""Command-line interface: estimate / simulate / montecarlo / theory.

CSV in, CSV/JSON out. Every output starts with a header comment carrying the
tool version and a hash of the configuration that produced it. Exit codes:
0 success, 2 input/config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import replace as dc_replace

import numpy as np

from irflab import __version__
from irflab.bootstrap import BootConfig, lp_percentile_t_ci, var_efron_ci
from irflab.config import expect_keys, load_json, output_header, typed
from irflab.dataset import read_dataset_csv, write_dataset_csv
from irflab.dgp import DgpSpec, simulate
from irflab.errors import InputError, IrflabError
from irflab.lp import LpSpec, lp_estimate
from irflab.montecarlo import (
    ExperimentConfig,
    run_experiment,
    write_report_csv,
    write_summary_json,
)
from irflab.ols import aic_select_var_lag
from irflab.results import IrfResult
from irflab.theory import bias_bound_grid, coverage_grid, prob_outside_grid
from irflab.var import Identification, fit_var, pope_correct, structural_irf, var_delta_se

WORKERS_ENV = "IRFLAB_WORKERS"


def _log(args, message: str) -> None:
    if args.verbose:
        print(message, file=sys.stderr)


def _out_dir(args) -> str:
    path = args.out or "."
    os.makedirs(path, exist_ok=True)
    return path


def _resolve_workers(args, fallback: int) -> int:
    if getattr(args, "workers", None) is not None:
        return args.workers
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise InputError(f"{WORKERS_ENV}={env!r} is not an integer") from None
    return fallback


def _float_list(text: str, flag: str) -> list[float]:
    """Parse '1,2,3' or 'start:stop:step' into a list of floats."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(v) for v in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            start, stop, step = parts
            if step <= 0:
                raise ValueError
            return [float(v) for v in np.round(np.arange(start, stop + step / 2, step), 12)]
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise InputError(
            f"{flag} expects comma-separated numbers or start:stop:step, got {text!r}"
        ) from None


# ---------------------------------------------------------------- estimate


def _estimation_columns(data, payload, context) -> tuple[str, ...]:
    columns = typed(payload, "columns", list, context)
    impulse = typed(payload, "impulse", str, context)
    if columns is None:
        return (impulse,) + tuple(name for name in data.names if name != impulse)
    return tuple(str(c) for c in columns)


def _resolve_lag(data, payload, columns, context) -> int:
    p_raw = payload.get("p", 1)
    if p_raw == "aic":
        return aic_select_var_lag(data, columns, typed(payload, "p_max", int, context, default=8))
    if isinstance(p_raw, int) and not isinstance(p_raw, bool) and p_raw >= 1:
        return p_raw
    raise InputError(f"{context}: 'p' must be a positive integer or 'aic'")


def _boot_config(payload, level, seed, context) -> BootConfig:
    boot = typed(payload, "boot", dict, context, default={}) or {}
    expect_keys(boot, f"{context} boot settings", required=(), optional=("B", "block_len"))
    return BootConfig(
        B=typed(boot, "B", int, context, default=500),
        block_len=typed(boot, "block_len", int, context, default=None),
        level=level,
        seed=seed,
    )


def _estimate_lp(data, payload, columns, p, seed, context) -> IrfResult:
    lagged = typed(payload, "lagged_controls", list, context)
    spec = LpSpec(
        outcome=typed(payload, "outcome", str, context),
        impulse=typed(payload, "impulse", str, context),
        contemporaneous_controls=tuple(
            typed(payload, "contemporaneous_controls", list, context, default=[])
        ),
        lagged_controls=tuple(lagged) if lagged is not None else columns,
        p=p,
        H=typed(payload, "H", int, context, default=8),
        bias_correct=typed(payload, "bias_correct", bool, context, default=True),
        long_difference=typed(payload, "long_difference", bool, context, default=False),
    )
    inference = typed(payload, "inference", str, context, default="analytic")
    level = float(typed(payload, "level", (int, float), context, default=0.90))
    if inference == "boot":
        return lp_percentile_t_ci(
            data, spec, var_p=p, config=_boot_config(payload, level, seed, context),
            var_columns=columns,
        )
    result = lp_estimate(data, spec)
    if inference in ("analytic", "delta"):
        return result.with_analytic_ci(level)
    if inference == "none":
        return result
    raise InputError(f"{context}: unknown inference '{inference}'")


def _identification(payload, context) -> Identification:
    scheme = typed(payload, "scheme", str, context, default="observed_shock")
    ordering = typed(payload, "ordering", list, context)
    beta = typed(payload, "beta", list, context)
    return Identification(
        scheme=scheme,
        impulse=typed(payload, "impulse", str, context),
        outcome=typed(payload, "outcome", str, context),
        ordering=tuple(ordering) if ordering is not None else None,
        beta=tuple(beta) if beta is not None else None,
    )


def _estimate_var(data, payload, columns, p, seed, context) -> IrfResult:
    ident = _identification(payload, context)
    H = typed(payload, "H", int, context, default=8)
    unit = typed(payload, "normalization", str, context, default="unit_impulse")
    level = float(typed(payload, "level", (int, float), context, default=0.90))
    inference = typed(payload, "inference", str, context, default="analytic")
    if inference == "boot":
        return var_efron_ci(
            data, columns, ident, p, H, _boot_config(payload, level, seed, context), unit=unit
        )
    fit = fit_var(data, columns, p)
    if typed(payload, "bias_correct", bool, context, default=True):
        fit = pope_correct(fit)
    result = structural_irf(fit, ident, H, unit=unit)
    if inference in ("analytic", "delta"):
        se = var_delta_se(fit, ident, H, unit=unit)
        return dc_replace(result, se=se).with_analytic_ci(level)
    if inference == "none":
        return result
    raise InputError(f"{context}: unknown inference '{inference}'")


def _write_disagreement(lp_result, var_result, path, header: str) -> None:
    """Per-horizon |theta_LP - theta_VAR| / se_VAR."""
    H = min(lp_result.H, var_result.H)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# {header}\n")
        writer = csv.writer(fh)
        writer.writerow(["horizon", "theta_lp", "theta_var", "se_var", "scaled_diff"])
        for h in range(H + 1):
            se = float(var_result.se[h]) if var_result.se is not None else float("nan")
            diff = abs(float(lp_result.theta[h]) - float(var_result.theta[h]))
            scaled = diff / se if se > 0 else float("nan")
            writer.writerow(
                [
                    h,
                    repr(float(lp_result.theta[h])),
                    repr(float(var_result.theta[h])),
                    repr(se) if np.isfinite(se) else "",
                    repr(scaled) if np.isfinite(scaled) else "",
                ]
            )


def cmd_estimate(args) -> int:
    data = read_dataset_csv(args.data)
    payload = load_json(args.config)
    context = "estimate spec"
    expect_keys(
        payload,
        context,
        required=("method", "outcome", "impulse"),
        optional=(
            "p",
            "p_max",
            "H",
            "bias_correct",
            "inference",
            "level",
            "normalization",
            "contemporaneous_controls",
            "lagged_controls",
            "columns",
            "scheme",
            "ordering",
            "beta",
            "boot",
            "long_difference",
            "seed",
        ),
    )
    method = typed(payload, "method", str, context)
    if method not in ("lp", "var", "both"):
        raise InputError(f"{context}: method must be 'lp', 'var', or 'both', got '{method}'")
    seed = args.seed if args.seed is not None else typed(payload, "seed", int, context, default=0)
    effective = dict(payload)
    effective["seed"] = seed
    header = output_header(effective)
    columns = _estimation_columns(data, payload, context)
    p = _resolve_lag(data, payload, columns, context)
    out = _out_dir(args)
    written = []
    lp_result = var_result = None
    if method in ("lp", "both"):
        lp_result = _estimate_lp(data, payload, columns, p, seed, context)
    if method in ("var", "both"):
        var_result = _estimate_var(data, payload, columns, p, seed, context)
    if method == "both":
        lp_path = os.path.join(out, "irf_lp.csv")
        var_path = os.path.join(out, "irf_var.csv")
        dis_path = os.path.join(out, "disagreement.csv")
        lp_result.to_csv(lp_path, header_comment=header)
        var_result.to_csv(var_path, header_comment=header)
        if var_result.se is None:
            fit = pope_correct(fit_var(data, columns, p))
            se = var_delta_se(fit, _identification(payload, context), var_result.H)
            var_result = dc_replace(var_result, se=se)
        _write_disagreement(lp_result, var_result, dis_path, header)
        written = [lp_path, var_path, dis_path]
    else:
        path = os.path.join(out, "irf.csv")
        (lp_result or var_result).to_csv(path, header_comment=header)
        written = [path]
    for path in written:
        _log(args, f"wrote {path}")
    return 0


# ---------------------------------------------------------------- simulate


def cmd_simulate(args) -> int:
    payload = load_json(args.config)
    spec = DgpSpec.from_dict(payload)
    if args.T is None:
        raise InputError("simulate requires --T")
    seed = args.seed if args.seed is not None else 0
    data = simulate(spec, args.T, seed)
    header = output_header({"dgp": payload, "T": args.T, "seed": seed})
    out = _out_dir(args)
    path = os.path.join(out, "dataset.csv")
    write_dataset_csv(data, path, header_comment=header)
    _log(args, f"wrote {path}")
    return 0


# -------------------------------------------------------------- montecarlo


def cmd_montecarlo(args) -> int:
    payload = load_json(args.config)
    config = ExperimentConfig.from_dict(payload)
    if args.seed is not None:
        config = dc_replace(config, base_seed=args.seed)
    workers = _resolve_workers(args, config.workers)
    _log(args, f"running {config.reps} replications with {workers} worker(s)")
    report = run_experiment(config, workers=workers)
    header = output_header(report.config_payload)
    out = _out_dir(args)
    report_path = os.path.join(out, "report.csv")
    summary_path = os.path.join(out, "summary.json")
    write_report_csv(report, report_path, header_comment=header)
    write_summary_json(report, summary_path, version=__version__)
    if report.failures:
        _log(args, f"{len(report.failures)} replication failures (within budget)")
    _log(args, f"wrote {report_path}")
    _log(args, f"wrote {summary_path}")
    return 0


# ------------------------------------------------------------------ theory


def cmd_theory(args) -> int:
    modes = [
        name
        for name, on in (
            ("coverage", args.coverage),
            ("bias-bound", args.bias_bound),
            ("prob-outside", args.prob_outside),
        )
        if on
    ]
    if len(modes) != 1:
        raise InputError(
            "theory requires exactly one of --coverage, --bias-bound, --prob-outside"
        )
    mode = modes[0]
    levels = []
    if args.levels:
        levels.extend(_float_list(args.levels, "--levels"))
    if args.level is not None:
        levels.append(args.level)
    out = _out_dir(args)
    path = os.path.join(out, "curves.csv")
    if mode == "coverage":
        if not levels:
            levels = [0.68, 0.90, 0.95]
        ratios = _float_list(args.bias_ratios, "--bias-ratios") if args.bias_ratios else None
        rows = coverage_grid(levels, ratios)
        header_row = ["bias_ratio", "level", "coverage"]
        meta = {"theory": mode, "levels": levels, "bias_ratios": ratios}
    elif mode == "bias-bound":
        if not args.sqrtTM or not args.se_ratio:
            raise InputError("--bias-bound requires --sqrtTM and --se-ratio")
        tms = _float_list(args.sqrtTM, "--sqrtTM")
        ratios = _float_list(args.se_ratio, "--se-ratio")
        rows = bias_bound_grid(tms, ratios)
        header_row = ["sqrtTM", "se_ratio", "bias_bound"]
        meta = {"theory": mode, "sqrtTM": tms, "se_ratio": ratios}
    else:
        if not args.sqrtTM or not args.se_ratio or not levels:
            raise InputError("--prob-outside requires --sqrtTM, --se-ratio, and --level(s)")
        tms = _float_list(args.sqrtTM, "--sqrtTM")
        ratios = _float_list(args.se_ratio, "--se-ratio")
        rows = prob_outside_grid(tms, ratios, levels)
        header_row = ["sqrtTM", "se_ratio", "level", "prob_outside"]
        meta = {"theory": mode, "sqrtTM": tms, "se_ratio": ratios, "levels": levels}
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# {output_header(meta)}\n")
        writer = csv.writer(fh)
        writer.writerow(header_row)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])
    _log(args, f"wrote {path}")
    return 0


# -------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irflab",
        description="Impulse response estimation via local projections and VARs.",
    )
    parser.add_argument("--version", action="version", version=f"irflab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--out", default=".", help="output directory (created if missing)")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--verbose", action="store_true", help="log progress to stderr")

    est = sub.add_parser("estimate", help="estimate impulse responses from a dataset CSV")
    est.add_argument("data", help="input dataset CSV")
    common(est)
    est.set_defaults(func=cmd_estimate)

    sim = sub.add_parser("simulate", help="simulate a dataset from a DGP spec")
    sim.add_argument("--T", type=int, default=None, help="sample length")
    common(sim)
    sim.set_defaults(func=cmd_simulate)

    mc = sub.add_parser("montecarlo", help="run a Monte Carlo experiment")
    mc.add_argument(
        "--workers",
        type=int,
        default=None,
        help=f"parallel workers (falls back to ${WORKERS_ENV}, then the config)",
    )
    common(mc)
    mc.set_defaults(func=cmd_montecarlo)

    th = sub.add_parser("theory", help="tabulate closed-form theory curves")
    th.add_argument("--coverage", action="store_true", help="coverage vs bias ratio")
    th.add_argument("--bias-bound", dest="bias_bound", action="store_true")
    th.add_argument("--prob-outside", dest="prob_outside", action="store_true")
    th.add_argument("--levels", default=None, help="comma-separated coverage levels")
    th.add_argument("--level", type=float, default=None, help="single coverage level")
    th.add_argument("--bias-ratios", dest="bias_ratios", default=None)
    th.add_argument("--sqrtTM", dest="sqrtTM", default=None)
    th.add_argument("--se-ratio", dest="se_ratio", default=None)
    common(th, needs_config=False)
    th.set_defaults(func=cmd_theory)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except IrflabError as exc:
        message = " ".join(str(exc).split())
        print(f"irflab: error: {type(exc).__name__}: {message}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"irflab: error: OSError: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
