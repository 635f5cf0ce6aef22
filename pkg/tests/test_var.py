"""VAR estimation, bias correction, identification, and delta-method
standard errors."""

from __future__ import annotations

import numpy as np
import pytest
from dataclasses import replace
from hypothesis import given, settings
from hypothesis import strategies as st

from irflab import (
    Dataset,
    IdentificationError,
    Identification,
    InputError,
    NormalizationError,
    VarFit,
    cholesky_factor,
    fit_var,
    ols_fit,
    pope_correct,
    reduced_irf,
    structural_irf,
    var_delta_se,
)
from irflab.ols import build_lag_design
from tests.conftest import ar1_series, var1_dataset


def make_fit(rho: float, T: int = 50, sigma2: float = 1.0) -> VarFit:
    """Minimal hand-built univariate VarFit for correction edge cases."""
    return VarFit(
        A=np.array([[[rho]]]),
        c=np.zeros(1),
        Sigma=np.array([[sigma2]]),
        residuals=np.zeros((T, 1)),
        p=1,
        column_names=("y",),
        effective_T=T,
    )


class TestFitVar:
    def test_consistency_bivariate(self):
        A = np.array([[0.5, 0.0], [0.0, 0.5]])
        ds = var1_dataset(A, np.eye(2), T=100_000, seed=21)
        fit = fit_var(ds, ["x", "y"], p=1)
        assert np.max(np.abs(fit.A[0] - A)) < 0.01
        assert np.max(np.abs(fit.Sigma - np.eye(2))) < 0.02

    def test_white_noise_coefficients_near_zero(self):
        ds = var1_dataset(np.zeros((2, 2)), np.eye(2), T=100_000, seed=22)
        fit = fit_var(ds, ["x", "y"], p=2)
        # each coefficient has sd ~ 1/sqrt(T)
        assert np.max(np.abs(fit.A)) < 3.5 / np.sqrt(100_000)

    def test_univariate_matches_ols(self):
        y, _ = ar1_series(0.7, T=300, seed=23)
        ds = Dataset(("y",), y.reshape(-1, 1))
        fit = fit_var(ds, ["y"], p=2)
        Y, X, _ = build_lag_design(ds, [], ["y"], p=2)
        direct = ols_fit(Y[:, 0], X, robust=False)
        assert fit.c[0] == pytest.approx(direct.coefficients[0, 0], abs=1e-12)
        assert fit.A[0, 0, 0] == pytest.approx(direct.coefficients[1, 0], abs=1e-12)
        assert fit.A[1, 0, 0] == pytest.approx(direct.coefficients[2, 0], abs=1e-12)

    def test_residual_means_zero_with_intercept(self):
        ds = var1_dataset(0.4 * np.eye(2), np.eye(2), T=400, seed=24)
        fit = fit_var(ds, ["x", "y"], p=3)
        assert np.max(np.abs(fit.residuals.mean(axis=0))) <= 1e-8

    def test_no_intercept_option(self):
        ds = var1_dataset(np.array([[0.6, 0.1], [0.0, 0.5]]), np.eye(2), T=50_000, seed=25)
        fit = fit_var(ds, ["x", "y"], p=1, intercept=False)
        assert np.array_equal(fit.c, np.zeros(2))
        assert np.max(np.abs(fit.A[0] - np.array([[0.6, 0.1], [0.0, 0.5]]))) < 0.02

    def test_effective_sample(self):
        ds = var1_dataset(0.5 * np.eye(2), np.eye(2), T=100, seed=26)
        assert fit_var(ds, ["x", "y"], p=4).effective_T == 96

    def test_rejects_bad_inputs(self):
        ds = var1_dataset(0.5 * np.eye(2), np.eye(2), T=100, seed=27)
        with pytest.raises(InputError):
            fit_var(ds, ["x", "y"], p=0)
        tiny = var1_dataset(0.5 * np.eye(2), np.eye(2), T=5, seed=28)
        with pytest.raises(InputError):
            fit_var(tiny, ["x", "y"], p=3)


class TestPopeCorrection:
    def test_ar1_exact_scalar_identity(self):
        # for a stationary AR(1) with intercept the first-order bias
        # numerator collapses to 1 + 3 rho, so the corrected coefficient is
        # rho_hat + (1 + 3 rho_hat)/T exactly (no damping at moderate rho)
        y, _ = ar1_series(0.6, T=200, seed=31)
        fit = fit_var(Dataset(("y",), y.reshape(-1, 1)), ["y"], p=1)
        corrected = pope_correct(fit)
        rho_hat = fit.A[0, 0, 0]
        jump = corrected.A[0, 0, 0] - rho_hat
        assert jump * fit.effective_T == pytest.approx(1.0 + 3.0 * rho_hat, rel=1e-8)

    def test_reduces_downward_bias(self):
        raw, fixed = [], []
        for rep in range(300):
            y, _ = ar1_series(0.9, T=100, seed=40_000 + rep)
            fit = fit_var(Dataset(("y",), y.reshape(-1, 1)), ["y"], p=1)
            raw.append(fit.A[0, 0, 0])
            fixed.append(pope_correct(fit).A[0, 0, 0])
        assert np.mean(fixed) > np.mean(raw)
        assert abs(np.mean(fixed) - 0.9) < abs(np.mean(raw) - 0.9)

    def test_correction_shrinks_with_sample(self):
        jumps = []
        for T in (240, 10_000):
            y, _ = ar1_series(0.85, T=T, seed=32)
            fit = fit_var(Dataset(("y",), y.reshape(-1, 1)), ["y"], p=1)
            jumps.append(abs(pope_correct(fit).A[0, 0, 0] - fit.A[0, 0, 0]))
        assert jumps[1] < jumps[0] / 5.0

    def test_white_noise_stays_near_zero(self):
        y, _ = ar1_series(0.0, T=2000, seed=33)
        fit = fit_var(Dataset(("y",), y.reshape(-1, 1)), ["y"], p=1)
        corrected = pope_correct(fit)
        assert abs(corrected.A[0, 0, 0] - fit.A[0, 0, 0]) <= 5.0 / fit.effective_T

    def test_non_stationary_fit_left_unchanged(self):
        fit = make_fit(1.01)
        out = pope_correct(fit)
        assert out.A[0, 0, 0] == 1.01
        assert any("non-stationary" in w for w in out.warnings)

    def test_damping_keeps_companion_stable(self):
        # near-unit-root fit with a tiny sample: the full correction would be
        # explosive, so it must be damped and flagged
        fit = make_fit(0.9989, T=5)
        out = pope_correct(fit)
        assert out.spectral_radius() <= 1.0 - 1e-6 + 1e-12
        assert any("damped" in w for w in out.warnings)
        assert out.A[0, 0, 0] >= 0.9989 - 1e-12

    def test_preserves_unconditional_mean(self):
        rng = np.random.default_rng(34)
        y, _ = ar1_series(0.7, T=300, seed=35)
        ds = Dataset(("y",), (y + 5.0).reshape(-1, 1))
        fit = fit_var(ds, ["y"], p=1)
        corrected = pope_correct(fit)
        assert np.allclose(
            corrected.unconditional_mean(), fit.unconditional_mean(), rtol=1e-10
        )
        assert not np.allclose(corrected.c, fit.c)

    def test_multivariate_runs_and_warns_nothing(self):
        ds = var1_dataset(np.array([[0.6, 0.15], [0.1, 0.5]]), np.eye(2), T=300, seed=36)
        fit = fit_var(ds, ["x", "y"], p=2)
        out = pope_correct(fit)
        assert out.warnings == ()
        assert out.A.shape == fit.A.shape


class TestReducedIrf:
    def test_scalar_powers(self):
        fit = make_fit(0.8)
        C = reduced_irf(fit, H=5)
        assert np.allclose(C[:, 0, 0], 0.8 ** np.arange(6), atol=1e-12)

    def test_impact_is_identity(self):
        ds = var1_dataset(0.5 * np.eye(2), np.eye(2), T=200, seed=41)
        fit = fit_var(ds, ["x", "y"], p=2)
        assert np.array_equal(reduced_irf(fit, 0)[0], np.eye(2))

    def test_hand_computed_var1(self):
        A1 = np.array([[0.5, 0.2], [0.0, 0.3]])
        fit = VarFit(
            A=A1[None, :, :],
            c=np.zeros(2),
            Sigma=np.eye(2),
            residuals=np.zeros((10, 2)),
            p=1,
            column_names=("x", "y"),
            effective_T=10,
        )
        C = reduced_irf(fit, H=2)
        assert np.allclose(C[1], A1, atol=1e-15)
        assert np.allclose(C[2], A1 @ A1, atol=1e-15)
        assert np.allclose(C[2], [[0.25, 0.16], [0.0, 0.09]], atol=1e-15)

    def test_zero_padding_invariance(self):
        ds = var1_dataset(np.array([[0.6, 0.15], [0.1, 0.5]]), np.eye(2), T=300, seed=42)
        fit = fit_var(ds, ["x", "y"], p=1)
        padded = replace(fit, A=np.concatenate([fit.A, np.zeros((2, 2, 2))]), p=3)
        assert np.allclose(reduced_irf(fit, 6), reduced_irf(padded, 6), atol=1e-14)

    def test_bad_horizon(self):
        with pytest.raises(InputError):
            reduced_irf(make_fit(0.5), H=-1)


class TestCholeskyFactor:
    def test_identity(self):
        assert np.array_equal(cholesky_factor(np.eye(3)), np.eye(3))

    def test_hand_factor(self):
        B = cholesky_factor([[4.0, 2.0], [2.0, 5.0]])
        assert np.allclose(B, [[2.0, 0.0], [1.0, 2.0]], atol=1e-12)

    def test_clearly_indefinite_rejected(self):
        with pytest.raises(IdentificationError, match="positive definite"):
            cholesky_factor([[1.0, 0.0], [0.0, -1e-6]])

    def test_asymmetric_rejected(self):
        with pytest.raises(IdentificationError, match="symmetric"):
            cholesky_factor([[1.0, 0.5], [0.2, 1.0]])

    def test_semidefinite_gets_jitter(self):
        sigma = np.array([[1.0, 1.0], [1.0, 1.0]])
        B = cholesky_factor(sigma)
        assert np.allclose(B @ B.T, sigma, atol=1e-6)

    @given(seed=st.integers(0, 5000))
    @settings(max_examples=40, deadline=None)
    def test_factorization_property(self, seed):
        rng = np.random.default_rng(seed)
        M = rng.standard_normal((3, 3))
        sigma = M @ M.T + 0.1 * np.eye(3)
        B = cholesky_factor(sigma)
        scale = np.abs(sigma).max()
        assert np.allclose(B @ B.T, sigma, atol=1e-8 * scale)
        assert np.allclose(B, np.tril(B), atol=0.0)
        assert np.all(np.diag(B) > 0)


class TestStructuralIrf:
    def test_one_sd_impact_is_cholesky_column(self, var1_sample):
        fit = fit_var(var1_sample, ["x", "y"], p=1)
        ident = Identification("recursive", impulse="x", outcome="y")
        irf = structural_irf(fit, ident, H=4)
        expected = np.linalg.cholesky(fit.Sigma)[1, 0]
        assert irf.theta[0] == pytest.approx(expected, abs=1e-10)

    def test_observed_shock_equals_recursive_shock_first(self, var1_sample):
        fit = fit_var(var1_sample, ["x", "y"], p=1)
        obs = structural_irf(
            fit, Identification("observed_shock", impulse="x", outcome="y"), H=5
        )
        rec = structural_irf(
            fit,
            Identification("recursive", impulse="x", outcome="y", ordering=("x", "y")),
            H=5,
        )
        assert np.allclose(obs.theta, rec.theta, atol=1e-14)

    def test_ordering_changes_answer(self, var1_sample):
        fit = fit_var(var1_sample, ["x", "y"], p=1)
        first = structural_irf(
            fit, Identification("recursive", impulse="x", outcome="y", ordering=("x", "y")), H=2
        )
        last = structural_irf(
            fit, Identification("recursive", impulse="x", outcome="y", ordering=("y", "x")), H=2
        )
        assert not np.allclose(first.theta, last.theta, atol=1e-10)

    def test_weight_vector_reproduces_recursive(self, var1_sample):
        # beta = Sigma^-1 B e_x makes the weighted shock equal the first
        # orthogonalized shock
        fit = fit_var(var1_sample, ["x", "y"], p=1)
        B = np.linalg.cholesky(fit.Sigma)
        beta = np.linalg.solve(fit.Sigma, B[:, 0])
        wv = structural_irf(
            fit,
            Identification("weight_vector", impulse="x", outcome="y", beta=tuple(beta)),
            H=6,
        )
        rec = structural_irf(
            fit,
            Identification("recursive", impulse="x", outcome="y", ordering=("x", "y")),
            H=6,
        )
        assert np.allclose(wv.theta, rec.theta, atol=1e-8)

    def test_unit_impulse_scales_impact_to_one(self, var1_sample):
        fit = fit_var(var1_sample, ["x", "y"], p=1)
        ident = Identification("recursive", impulse="x", outcome="x", ordering=("x", "y"))
        irf = structural_irf(fit, ident, H=3, unit="unit_impulse")
        assert irf.theta[0] == pytest.approx(1.0, abs=1e-12)

    def test_self_impulse_allowed_only_for_recursive(self):
        Identification("recursive", impulse="y", outcome="y")
        with pytest.raises(InputError, match="different"):
            Identification("observed_shock", impulse="y", outcome="y")
        with pytest.raises(InputError, match="different"):
            Identification("weight_vector", impulse="y", outcome="y", beta=(1.0,))

    def test_univariate_self_impulse_is_ar_irf(self):
        y, _ = ar1_series(0.7, T=50_000, seed=43)
        fit = fit_var(Dataset(("y",), y.reshape(-1, 1)), ["y"], p=1)
        ident = Identification("recursive", impulse="y", outcome="y")
        irf = structural_irf(fit, ident, H=4, unit="unit_impulse")
        rho_hat = fit.A[0, 0, 0]
        assert np.allclose(irf.theta, rho_hat ** np.arange(5), atol=1e-12)

    def test_zero_impact_normalization_error(self):
        fit = VarFit(
            A=np.zeros((1, 2, 2)),
            c=np.zeros(2),
            Sigma=np.eye(2),
            residuals=np.zeros((10, 2)),
            p=1,
            column_names=("x", "y"),
            effective_T=10,
        )
        ident = Identification("weight_vector", impulse="x", outcome="y", beta=(0.0, 1.0))
        with pytest.raises(NormalizationError, match="'x'"):
            structural_irf(fit, ident, H=1, unit="unit_impulse")

    def test_relabeling_invariance(self):
        A = np.array([[0.6, 0.15], [0.1, 0.5]])
        Sigma = np.array([[1.0, 0.4], [0.4, 1.5]])
        ds = var1_dataset(A, Sigma, T=400, seed=44, names=("x", "y"))
        renamed = Dataset(("infl", "gap"), ds.values)
        a = structural_irf(
            fit_var(ds, ["x", "y"], p=1),
            Identification("recursive", impulse="x", outcome="y"),
            H=5,
        )
        b = structural_irf(
            fit_var(renamed, ["infl", "gap"], p=1),
            Identification("recursive", impulse="infl", outcome="gap"),
            H=5,
        )
        assert np.allclose(a.theta, b.theta, atol=0.0)

    def test_validation(self, var1_sample):
        fit = fit_var(var1_sample, ["x", "y"], p=1)
        with pytest.raises(InputError, match="scheme"):
            Identification("triangular", impulse="x", outcome="y")
        with pytest.raises(InputError, match="beta"):
            Identification("weight_vector", impulse="x", outcome="y")
        with pytest.raises(InputError, match="permutation"):
            structural_irf(
                fit,
                Identification("recursive", impulse="x", outcome="y", ordering=("x", "x")),
                H=1,
            )
        with pytest.raises(InputError, match="'z'"):
            structural_irf(fit, Identification("recursive", impulse="z", outcome="y"), H=1)
        with pytest.raises(InputError):
            structural_irf(fit, Identification("recursive", impulse="x", outcome="y"), H=-1)
        with pytest.raises(InputError, match="normalization"):
            structural_irf(
                fit, Identification("recursive", impulse="x", outcome="y"), H=1, unit="median"
            )


class TestDeltaSe:
    def test_finite_positive_on_white_noise(self):
        ds = var1_dataset(np.zeros((2, 2)), np.eye(2), T=400, seed=51)
        fit = fit_var(ds, ["x", "y"], p=1)
        se = var_delta_se(fit, Identification("recursive", impulse="x", outcome="y"), H=6)
        assert se.shape == (7,)
        assert np.all(np.isfinite(se))
        assert np.all(se[1:] > 0)

    def test_shrinks_like_sqrt_T(self):
        A = np.array([[0.6, 0.15], [0.1, 0.5]])
        ident = Identification("recursive", impulse="x", outcome="y")
        ratios = []
        for rep in range(60):
            ses = []
            for T in (240, 960):
                ds = var1_dataset(A, np.eye(2), T=T, seed=60_000 + 7 * rep + T)
                ses.append(var_delta_se(fit_var(ds, ["x", "y"], p=1), ident, H=2)[1])
            ratios.append(ses[0] / ses[1])
        assert 1.6 <= np.mean(ratios) <= 2.4

    def test_matches_monte_carlo_spread(self):
        A = np.array([[0.5, 0.0], [0.2, 0.4]])
        Sigma = np.array([[1.0, 0.3], [0.3, 1.0]])
        ident = Identification("recursive", impulse="x", outcome="y")
        thetas, ses = [], []
        for rep in range(400):
            ds = var1_dataset(A, Sigma, T=500, seed=70_000 + rep)
            fit = fit_var(ds, ["x", "y"], p=1)
            thetas.append(structural_irf(fit, ident, H=2).theta[1])
            ses.append(var_delta_se(fit, ident, H=2)[1])
        mc_sd = np.std(thetas, ddof=1)
        assert np.median(ses) == pytest.approx(mc_sd, rel=0.20)

    def test_requires_retained_design(self):
        with pytest.raises(InputError, match="design"):
            var_delta_se(make_fit(0.5), Identification("recursive", impulse="y", outcome="y"), H=1)
