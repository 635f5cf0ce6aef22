"""Block bootstrap: length rule, joint resampling with positional
recentering, percentile-t and Efron intervals, and the pivot-centering
invariant."""

from __future__ import annotations

import numpy as np
import pytest

from irflab import (
    BootConfig,
    Dataset,
    Identification,
    InputError,
    LpSpec,
    block_length_rule,
    lp_percentile_t_ci,
    resample_residuals,
    var_efron_ci,
    var_in_lp_share,
)
from irflab.bootstrap import _bootstrap_draws
from irflab.errors import BootstrapError
from irflab.var import VarFit
from tests.conftest import var1_dataset


class TestBlockLengthRule:
    def test_anchors(self):
        assert block_length_rule(240) == 20
        assert block_length_rule(100) == 16
        # the T/2 cap binds for small samples
        assert block_length_rule(16) == 8

    def test_cap_never_exceeded(self):
        for T in range(2, 300):
            assert 1 <= block_length_rule(T) <= T // 2 or T < 4

    def test_tiny_sample_rejected(self):
        with pytest.raises(InputError):
            block_length_rule(1)


class TestResampleResiduals:
    def test_iid_blocks_stay_serially_uncorrelated(self):
        rng = np.random.default_rng(0)
        R = np.random.default_rng(1).standard_normal(100_000)
        out = resample_residuals(R, block_len=1, rng=rng)
        out = out - out.mean()
        r1 = np.dot(out[1:], out[:-1]) / np.dot(out, out)
        assert abs(r1) < 0.01

    def test_deterministic_given_rng(self):
        R = np.random.default_rng(2).standard_normal((50, 2))
        a = resample_residuals(R, 7, np.random.default_rng(99))
        b = resample_residuals(R, 7, np.random.default_rng(99))
        assert np.array_equal(a, b)

    def test_rows_resampled_jointly(self):
        rng = np.random.default_rng(3)
        z = np.random.default_rng(4).standard_normal((20_000, 2))
        R = np.column_stack([z[:, 0], 0.8 * z[:, 0] + 0.6 * z[:, 1]])
        out = resample_residuals(R, block_len=10, rng=rng)
        original = np.corrcoef(R.T)[0, 1]
        resampled = np.corrcoef(out.T)[0, 1]
        assert resampled == pytest.approx(original, abs=0.05)

    def test_positional_recentering_makes_draws_mean_zero(self):
        # with block length 3 each within-block position s is recentred by
        # the average of the rows that can occupy s, so averaging many draws
        # gives zero position by position
        R = np.random.default_rng(5).standard_normal((9, 1)) * 2.0
        rng = np.random.default_rng(6)
        acc = np.zeros(9)
        draws = 5000
        for _ in range(draws):
            acc += resample_residuals(R, 3, rng)[:, 0]
        assert np.max(np.abs(acc / draws)) < 0.1

    def test_single_block_degenerates_to_zero(self):
        # when the block spans all rows there is one admissible start, so
        # positional recentering removes the block exactly
        R = np.random.default_rng(7).standard_normal((12, 2))
        out = resample_residuals(R, 12, np.random.default_rng(8))
        assert np.allclose(out, 0.0, atol=1e-15)

    def test_shape_and_squeeze(self):
        R = np.random.default_rng(9).standard_normal(11)
        out = resample_residuals(R, 4, np.random.default_rng(10))
        assert out.shape == (11,)

    def test_block_len_validated(self):
        R = np.zeros((10, 1))
        with pytest.raises(InputError):
            resample_residuals(R, 0, np.random.default_rng(0))
        with pytest.raises(InputError):
            resample_residuals(R, 11, np.random.default_rng(0))


class TestBootConfig:
    def test_validation(self):
        with pytest.raises(InputError, match="B"):
            BootConfig(B=99)
        with pytest.raises(InputError, match="level"):
            BootConfig(level=1.0)
        with pytest.raises(InputError, match="block_len"):
            BootConfig(block_len=0)
        with pytest.raises(InputError, match="seed"):
            BootConfig(seed=-1)


def _boot_dataset(T: int = 160, seed: int = 15) -> Dataset:
    A = np.array([[0.0, 0.0], [0.15, 0.8]])
    Sigma = np.array([[1.0, 0.6], [0.6, 1.0]])
    return var1_dataset(A, Sigma, T=T, seed=seed)


def _lp_spec(H: int = 4) -> LpSpec:
    return LpSpec(
        outcome="y", impulse="x", lagged_controls=("x", "y"), p=1, H=H, bias_correct=True
    )


class TestLpPercentileT:
    def test_deterministic_for_fixed_seed(self):
        ds = _boot_dataset()
        a = lp_percentile_t_ci(ds, _lp_spec(), 1, BootConfig(B=100, seed=5))
        b = lp_percentile_t_ci(ds, _lp_spec(), 1, BootConfig(B=100, seed=5))
        assert np.array_equal(a.ci_lo, b.ci_lo) and np.array_equal(a.ci_hi, b.ci_hi)
        c = lp_percentile_t_ci(ds, _lp_spec(), 1, BootConfig(B=100, seed=6))
        assert not np.array_equal(a.ci_lo, c.ci_lo)

    def test_widens_with_level(self):
        # same seed means the same t* draws, so the nested quantile bands
        # give nested intervals (percentile-t intervals need not contain the
        # point estimate, so only nesting is guaranteed)
        ds = _boot_dataset()
        lo = lp_percentile_t_ci(ds, _lp_spec(), 1, BootConfig(B=200, level=0.68, seed=7))
        hi = lp_percentile_t_ci(ds, _lp_spec(), 1, BootConfig(B=200, level=0.90, seed=7))
        assert np.all(hi.ci_lo <= lo.ci_lo + 1e-12)
        assert np.all(hi.ci_hi >= lo.ci_hi - 1e-12)

    def test_method_and_diagnostics(self):
        ds = _boot_dataset()
        out = lp_percentile_t_ci(ds, _lp_spec(H=3), 1, BootConfig(B=120, seed=8))
        assert out.method == "lp_boot_t"
        assert out.diagnostics["B"] == 120
        assert out.diagnostics["level"] == 0.90
        assert len(out.diagnostics["t_mean"]) == 4
        assert len(out.diagnostics["var_theta"]) == 4
        assert out.diagnostics["retries"] >= 0

    def test_block_len_larger_than_sample_rejected(self):
        ds = _boot_dataset(T=30)
        with pytest.raises(InputError, match="block_len"):
            lp_percentile_t_ci(ds, _lp_spec(H=1), 1, BootConfig(B=100, block_len=40, seed=9))

    @pytest.mark.slow
    def test_pivot_centered_on_bootstrap_dgp(self):
        # with block length 1 the bootstrap worlds are generated by exactly
        # the estimated VAR, so t* = (theta* - theta_dgp)/se* must average
        # to ~0 at every horizon when that VAR nests the truth
        ds = _boot_dataset(T=240, seed=11)
        out = lp_percentile_t_ci(
            ds, _lp_spec(H=8), 1, BootConfig(B=2000, block_len=1, seed=17)
        )
        t_mean = np.array(out.diagnostics["t_mean"])
        assert np.max(np.abs(t_mean)) < 0.15


class TestVarEfron:
    def test_deterministic_and_tagged(self):
        ds = _boot_dataset()
        ident = Identification("recursive", impulse="x", outcome="y", ordering=("x", "y"))
        a = var_efron_ci(ds, ("x", "y"), ident, p=1, H=4, config=BootConfig(B=150, seed=12))
        b = var_efron_ci(ds, ("x", "y"), ident, p=1, H=4, config=BootConfig(B=150, seed=12))
        assert np.array_equal(a.ci_lo, b.ci_lo)
        assert a.method == "var_efron"
        assert np.all(a.se > 0)

    def test_contains_point_on_clean_data(self):
        ds = _boot_dataset(T=300, seed=13)
        ident = Identification("recursive", impulse="x", outcome="y", ordering=("x", "y"))
        out = var_efron_ci(ds, ("x", "y"), ident, p=1, H=4, config=BootConfig(B=200, seed=14))
        assert out.diagnostics["contains_point"] is True
        assert np.all(out.ci_lo <= out.theta + 1e-12)
        assert np.all(out.theta <= out.ci_hi + 1e-12)

    def test_widens_with_level(self):
        ds = _boot_dataset()
        ident = Identification("recursive", impulse="x", outcome="y", ordering=("x", "y"))
        lo = var_efron_ci(ds, ("x", "y"), ident, 1, 3, BootConfig(B=150, level=0.68, seed=15))
        hi = var_efron_ci(ds, ("x", "y"), ident, 1, 3, BootConfig(B=150, level=0.95, seed=15))
        assert np.all(hi.ci_hi - hi.ci_lo >= lo.ci_hi - lo.ci_lo - 1e-12)


class TestRedrawPolicy:
    def test_persistent_failure_aborts(self):
        fit = VarFit(
            A=np.array([[[0.5]]]),
            c=np.zeros(1),
            Sigma=np.eye(1),
            residuals=np.random.default_rng(16).standard_normal((40, 1)),
            p=1,
            column_names=("y",),
            effective_T=40,
        )
        source = np.zeros((41, 1))
        with pytest.raises(BootstrapError, match="failed"):
            _bootstrap_draws(
                fit, source, ("y",), 5, BootConfig(B=100, seed=1), lambda d: None
            )

    def test_flaky_estimator_is_retried(self):
        fit = VarFit(
            A=np.array([[[0.5]]]),
            c=np.zeros(1),
            Sigma=np.eye(1),
            residuals=np.random.default_rng(17).standard_normal((40, 1)),
            p=1,
            column_names=("y",),
            effective_T=40,
        )
        source = np.zeros((41, 1))
        calls = {"n": 0}

        def flaky(ds):
            calls["n"] += 1
            return None if calls["n"] % 3 == 1 else 1.0

        draws, retries = _bootstrap_draws(
            fit, source, ("y",), 5, BootConfig(B=100, seed=2), flaky
        )
        assert len(draws) == 100
        assert retries > 0


class TestVarInLpShare:
    def test_hand_case(self):
        share = var_in_lp_share(
            var_theta=[[0.0, 5.0], [0.5, 5.0]],
            ci_lo=[[-1.0, 6.0], [1.0, 6.0]],
            ci_hi=[[1.0, 7.0], [2.0, 7.0]],
        )
        assert np.allclose(share, [0.5, 0.0])

    def test_degenerate_interval_counts_exact_hits(self):
        share = var_in_lp_share([[2.0]], [[2.0]], [[2.0]])
        assert share[0] == 1.0
        share = var_in_lp_share([[2.0 + 1e-9]], [[2.0]], [[2.0]])
        assert share[0] == 0.0

    def test_shape_mismatch_rejected(self):
        with pytest.raises(InputError, match="mismatch"):
            var_in_lp_share([[1.0, 2.0]], [[0.0]], [[3.0]])
