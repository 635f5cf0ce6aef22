"""Shared fixtures and hand-rolled simulators used as independent oracles.

The simulators here deliberately avoid ``irflab.dgp`` so that tests of the
package's own generators and estimators check against independent code.
"""

from __future__ import annotations

import numpy as np
import pytest

from irflab import Dataset


def ar1_series(rho: float, T: int, seed: int, sigma: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Hand-rolled AR(1): y_t = rho y_{t-1} + eps_t, started at 0 with a
    500-observation burn-in. Returns (y, eps) for the kept sample."""
    rng = np.random.default_rng(seed)
    burn = 500
    eps = rng.standard_normal(T + burn) * sigma
    y = np.empty(T + burn)
    prev = 0.0
    for t in range(T + burn):
        prev = rho * prev + eps[t]
        y[t] = prev
    return y[burn:], eps[burn:]


def var1_dataset(
    A: np.ndarray,
    Sigma: np.ndarray,
    T: int,
    seed: int,
    names: tuple[str, ...] = ("x", "y"),
) -> Dataset:
    """Hand-rolled VAR(1) with iid Gaussian innovations and a 500-obs burn-in."""
    A = np.asarray(A, dtype=float)
    Sigma = np.asarray(Sigma, dtype=float)
    n = A.shape[0]
    rng = np.random.default_rng(seed)
    chol = np.linalg.cholesky(Sigma)
    burn = 500
    u = rng.standard_normal((T + burn, n)) @ chol.T
    z = np.zeros((T + burn, n))
    prev = np.zeros(n)
    for t in range(T + burn):
        prev = A @ prev + u[t]
        z[t] = prev
    return Dataset(names=tuple(names), values=z[burn:])


def arma11_series(
    rho: float, alpha: float, T: int, seed: int, sigma: float = 1.0
) -> tuple[np.ndarray, np.ndarray]:
    """Hand-rolled ARMA(1,1): y_t = rho y_{t-1} + eps_t + alpha eps_{t-1}."""
    rng = np.random.default_rng(seed)
    burn = 500
    eps = rng.standard_normal(T + burn) * sigma
    y = np.empty(T + burn)
    prev_y = 0.0
    prev_e = 0.0
    for t in range(T + burn):
        prev_y = rho * prev_y + eps[t] + alpha * prev_e
        prev_e = eps[t]
        y[t] = prev_y
    return y[burn:], eps[burn:]


@pytest.fixture(scope="session")
def var1_sample() -> Dataset:
    """Persistent, correlated bivariate VAR(1) sample for estimator identities."""
    A = np.array([[0.6, 0.15], [0.1, 0.5]])
    Sigma = np.array([[1.0, 0.4], [0.4, 1.5]])
    return var1_dataset(A, Sigma, T=400, seed=9090)
