"""Impulse response estimation via local projections and VARs.

Estimators (LP and VAR) under recursive and observed-shock identification,
analytical small-sample bias corrections, heteroskedasticity-robust and block
bootstrap inference, closed-form theory curves for the bias-variance
trade-off, and a deterministic Monte Carlo harness.
"""

__version__ = "0.1.0"

from irflab.bootstrap import (
    BootConfig,
    block_length_rule,
    lp_percentile_t_ci,
    resample_residuals,
    var_efron_ci,
    var_in_lp_share,
)
from irflab.dataset import Dataset
from irflab.dgp import DgpSpec, TrueIrf, misspec_magnitude, simulate, true_irf_arma11, true_irf_varma
from irflab.errors import (
    DegenerateShockError,
    IdentificationError,
    InputError,
    InsufficientSampleError,
    IrflabError,
    NormalizationError,
    NumericalError,
    SingularDesignError,
)
from irflab.lp import LpSpec, hj_bias_correct, lp_estimate, lp_estimate_weighted, residualize_shock
from irflab.montecarlo import EstimatorDef, ExperimentConfig, McReport, run_experiment, sweep
from irflab.ols import OlsFit, aic_select_var_lag, build_lag_design, ols_fit
from irflab.results import IrfResult
from irflab.theory import (
    bias_bound,
    coverage_curve,
    mse_components,
    mse_prefers_var,
    prob_var_outside_lp,
    var_bias_arma1,
)
from irflab.var import (
    Identification,
    VarFit,
    cholesky_factor,
    fit_var,
    pope_correct,
    reduced_irf,
    structural_irf,
    var_delta_se,
)

__all__ = [
    "BootConfig",
    "Dataset",
    "DegenerateShockError",
    "DgpSpec",
    "EstimatorDef",
    "ExperimentConfig",
    "Identification",
    "IdentificationError",
    "InputError",
    "InsufficientSampleError",
    "IrfResult",
    "IrflabError",
    "LpSpec",
    "McReport",
    "NormalizationError",
    "NumericalError",
    "OlsFit",
    "SingularDesignError",
    "TrueIrf",
    "VarFit",
    "aic_select_var_lag",
    "bias_bound",
    "block_length_rule",
    "build_lag_design",
    "cholesky_factor",
    "coverage_curve",
    "fit_var",
    "hj_bias_correct",
    "lp_estimate",
    "lp_estimate_weighted",
    "lp_percentile_t_ci",
    "misspec_magnitude",
    "mse_components",
    "mse_prefers_var",
    "ols_fit",
    "pope_correct",
    "prob_var_outside_lp",
    "reduced_irf",
    "resample_residuals",
    "residualize_shock",
    "run_experiment",
    "simulate",
    "structural_irf",
    "sweep",
    "true_irf_arma11",
    "true_irf_varma",
    "var_bias_arma1",
    "var_delta_se",
    "var_efron_ci",
    "var_in_lp_share",
]
