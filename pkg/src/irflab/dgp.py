"""ARMA(1,1) and VARMA data-generating processes with known impulse responses.

Simulated datasets carry the realized shock series in a column named
``__shock`` so observed-shock identification can be exercised directly. For
VARMA processes the emitted shock is the first structural innovation under
the Cholesky convention (unit variance).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.signal

from irflab.dataset import Dataset
from irflab.errors import InputError

SHOCK_COLUMN = "__shock"
STATIONARITY_MARGIN = 1e-6


def _as_matrix_list(mats, n: int | None = None) -> tuple[np.ndarray, ...]:
    out = []
    for i, m in enumerate(mats):
        m = np.atleast_2d(np.asarray(m, dtype=float))
        if m.shape[0] != m.shape[1]:
            raise InputError(f"matrix {i} is not square: shape {m.shape}")
        if n is not None and m.shape[0] != n:
            raise InputError(f"matrix {i} has dimension {m.shape[0]}, expected {n}")
        n = m.shape[0]
        out.append(m)
    return tuple(out)


def companion_matrix(A: tuple[np.ndarray, ...]) -> np.ndarray:
    """Stack AR matrices A_1..A_p into the (np x np) companion form."""
    p = len(A)
    n = A[0].shape[0]
    comp = np.zeros((n * p, n * p))
    comp[:n, :] = np.hstack(A)
    if p > 1:
        comp[n:, :-n] = np.eye(n * (p - 1))
    return comp


def spectral_radius(mat: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(mat)))) if mat.size else 0.0


@dataclass(frozen=True, eq=False)
class DgpSpec:
    """Parametric description of an ARMA(1,1) or VARMA process.

    For ``kind="arma11"``: y_t = rho y_{t-1} + e_t + alpha e_{t-1} with
    e_t iid N(0, sigma^2). For ``kind="varma"``: w_t = sum A_l w_{t-l} + e_t
    + sum Theta_l e_{t-l} with e_t iid N(0, Sigma).
    """

    kind: str
    rho: float | None = None
    alpha: float | None = None
    sigma: float = 1.0
    A: tuple[np.ndarray, ...] | None = None
    Theta: tuple[np.ndarray, ...] | None = None
    Sigma: np.ndarray | None = None
    burn_in: int = 200

    def __post_init__(self):
        if self.burn_in < 0:
            raise InputError("burn_in must be >= 0")
        if self.kind == "arma11":
            if self.rho is None or self.alpha is None:
                raise InputError("arma11 spec requires rho and alpha")
            if not abs(self.rho) < 1.0:
                raise InputError(f"arma11 requires |rho| < 1 for stationarity, got rho={self.rho}")
            if not self.sigma > 0:
                raise InputError("sigma must be > 0")
        elif self.kind == "varma":
            if self.A is None or self.Sigma is None:
                raise InputError("varma spec requires A and Sigma")
            A = _as_matrix_list(self.A)
            n = A[0].shape[0]
            theta = _as_matrix_list(self.Theta, n) if self.Theta else ()
            sig = np.asarray(self.Sigma, dtype=float)
            if sig.shape != (n, n):
                raise InputError(f"Sigma shape {sig.shape} does not match n={n}")
            if not np.allclose(sig, sig.T, atol=1e-12 * max(1.0, float(np.abs(sig).max()))):
                raise InputError("Sigma must be symmetric")
            try:
                np.linalg.cholesky(sig)
            except np.linalg.LinAlgError:
                raise InputError("Sigma must be positive definite") from None
            radius = spectral_radius(companion_matrix(A))
            if radius >= 1.0 - STATIONARITY_MARGIN:
                raise InputError(
                    f"varma spec non-stationary: companion spectral radius {radius:.6f}"
                )
            object.__setattr__(self, "A", A)
            object.__setattr__(self, "Theta", theta)
            object.__setattr__(self, "Sigma", sig)
        else:
            raise InputError(f"unknown DGP kind '{self.kind}'")

    @classmethod
    def arma11(cls, rho: float, alpha: float, sigma: float = 1.0, burn_in: int = 200) -> "DgpSpec":
        return cls(kind="arma11", rho=rho, alpha=alpha, sigma=sigma, burn_in=burn_in)

    @classmethod
    def varma(cls, A, Theta, Sigma, burn_in: int = 200) -> "DgpSpec":
        return cls(kind="varma", A=tuple(A), Theta=tuple(Theta or ()), Sigma=Sigma, burn_in=burn_in)

    @property
    def n(self) -> int:
        return 1 if self.kind == "arma11" else self.A[0].shape[0]

    @property
    def observable_columns(self) -> tuple[str, ...]:
        if self.kind == "arma11":
            return ("y",)
        return tuple(f"y{i + 1}" for i in range(self.n))

    def to_dict(self) -> dict:
        if self.kind == "arma11":
            return {
                "kind": "arma11",
                "rho": self.rho,
                "alpha": self.alpha,
                "sigma": self.sigma,
                "burn_in": self.burn_in,
            }
        return {
            "kind": "varma",
            "A": [m.tolist() for m in self.A],
            "Theta": [m.tolist() for m in self.Theta],
            "Sigma": self.Sigma.tolist(),
            "burn_in": self.burn_in,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "DgpSpec":
        if not isinstance(payload, dict):
            raise InputError("DGP spec must be a JSON object")
        kind = payload.get("kind")
        if kind == "arma11":
            allowed = {"kind", "rho", "alpha", "sigma", "burn_in"}
            required = {"rho", "alpha"}
        elif kind == "varma":
            allowed = {"kind", "A", "Theta", "Sigma", "burn_in"}
            required = {"A", "Sigma"}
        else:
            raise InputError(f"DGP spec 'kind' must be 'arma11' or 'varma', got {kind!r}")
        unknown = set(payload) - allowed
        if unknown:
            raise InputError(f"unknown DGP spec keys: {sorted(unknown)}")
        missing = required - set(payload)
        if missing:
            raise InputError(f"DGP spec missing keys: {sorted(missing)}")
        if kind == "arma11":
            return cls.arma11(
                rho=float(payload["rho"]),
                alpha=float(payload["alpha"]),
                sigma=float(payload.get("sigma", 1.0)),
                burn_in=int(payload.get("burn_in", 200)),
            )
        return cls.varma(
            A=payload["A"],
            Theta=payload.get("Theta", []),
            Sigma=payload["Sigma"],
            burn_in=int(payload.get("burn_in", 200)),
        )


@dataclass(frozen=True, eq=False)
class TrueIrf:
    """True impulse responses theta_0..theta_H of the target variable,
    plus the full per-variable responses when the process is multivariate."""

    horizons: np.ndarray
    values: np.ndarray
    full: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "horizons", np.asarray(self.horizons, dtype=int))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if not np.all(np.isfinite(self.values)):
            raise InputError("true IRF contains non-finite values")


def simulate(spec: DgpSpec, T: int, seed: int) -> Dataset:
    """Simulate ``T`` observations, deterministic for fixed (spec, T, seed).

    ``burn_in`` presample draws are generated and discarded. The realized
    shock series is returned as the ``__shock`` column: the innovation e_t
    for arma11, the first unit-variance structural innovation for varma.
    """
    if T < 1:
        raise InputError("T must be >= 1")
    rng = np.random.default_rng(int(seed))
    total = T + spec.burn_in
    if spec.kind == "arma11":
        eps = spec.sigma * rng.standard_normal(total)
        y = scipy.signal.lfilter([1.0, spec.alpha], [1.0, -spec.rho], eps)
        values = np.column_stack([y[spec.burn_in :], eps[spec.burn_in :]])
        return Dataset(("y", SHOCK_COLUMN), values)
    n = spec.n
    p, q = len(spec.A), len(spec.Theta)
    chol = np.linalg.cholesky(spec.Sigma)
    z = rng.standard_normal((total, n))
    eps = z @ chol.T
    w = np.zeros((total, n))
    for t in range(total):
        acc = eps[t].copy()
        for ell in range(1, min(t, p) + 1):
            acc += spec.A[ell - 1] @ w[t - ell]
        for ell in range(1, min(t, q) + 1):
            acc += spec.Theta[ell - 1] @ eps[t - ell]
        w[t] = acc
    values = np.column_stack([w[spec.burn_in :], z[spec.burn_in :, 0]])
    return Dataset(spec.observable_columns + (SHOCK_COLUMN,), values)


def true_irf_arma11(rho: float, alpha: float, H: int) -> TrueIrf:
    """theta_0 = 1 and theta_h = rho^h + alpha rho^(h-1) for h >= 1."""
    if H < 0:
        raise InputError("H must be >= 0")
    h = np.arange(H + 1)
    values = np.empty(H + 1)
    values[0] = 1.0
    if H >= 1:
        values[1:] = rho ** h[1:] + alpha * rho ** (h[1:] - 1)
    return TrueIrf(h, values)


def varma_wold(spec: DgpSpec, H: int) -> np.ndarray:
    """Reduced-form moving average matrices Psi_0..Psi_H.

    Psi_0 = I and Psi_h = Theta_h + sum_{l=1..min(h,p)} A_l Psi_{h-l}, with
    Theta_h = 0 beyond the MA order.
    """
    n = spec.n
    if spec.kind == "arma11":
        A = (np.array([[spec.rho]]),)
        Theta = (np.array([[spec.alpha]]),)
    else:
        A, Theta = spec.A, spec.Theta
    psi = np.empty((H + 1, n, n))
    psi[0] = np.eye(n)
    for h in range(1, H + 1):
        acc = Theta[h - 1].copy() if h <= len(Theta) else np.zeros((n, n))
        for ell in range(1, min(h, len(A)) + 1):
            acc += A[ell - 1] @ psi[h - ell]
        psi[h] = acc
    return psi


def true_irf_varma(spec: DgpSpec, shock_weight, H: int, outcome: int = 0) -> TrueIrf:
    """Responses to the structural shock chol(Sigma) @ shock_weight.

    ``shock_weight`` selects a unit-variance linear combination of the
    Cholesky-orthogonalized innovations (use a unit vector for a single
    structural shock); ``outcome`` indexes the reported variable.
    """
    sigma = np.array([[spec.sigma**2]]) if spec.kind == "arma11" else spec.Sigma
    w = np.asarray(shock_weight, dtype=float).ravel()
    n = spec.n
    if w.shape != (n,):
        raise InputError(f"shock_weight must have length {n}, got {w.shape}")
    if not 0 <= outcome < n:
        raise InputError(f"outcome index {outcome} out of range for n={n}")
    impact = np.linalg.cholesky(sigma) @ w
    psi = varma_wold(spec, H)
    full = psi @ impact
    return TrueIrf(np.arange(H + 1), full[:, outcome], full)


def true_irf(spec: DgpSpec, H: int, outcome: int = 0) -> TrueIrf:
    """True responses of ``outcome`` to a unit movement in the emitted
    ``__shock`` column (per-unit-e_t for arma11, first Cholesky shock for
    varma)."""
    if spec.kind == "arma11":
        irf = true_irf_arma11(spec.rho, spec.alpha, H)
        return irf
    e1 = np.zeros(spec.n)
    e1[0] = 1.0
    return true_irf_varma(spec, e1, H, outcome=outcome)


def misspec_magnitude(Theta, Sigma, T: int) -> float:
    """Misspecification magnitude sqrt(T * M) with
    M = sum_l tr(D Theta_l' D^-1 Theta_l) and D the innovation covariance."""
    if T < 1:
        raise InputError("T must be >= 1")
    sigma = np.atleast_2d(np.asarray(Sigma, dtype=float))
    mats = _as_matrix_list(Theta, sigma.shape[0]) if len(Theta) else ()
    try:
        cho = scipy.linalg.cho_factor(sigma)
    except (scipy.linalg.LinAlgError, ValueError):
        raise InputError("innovation covariance must be positive definite") from None
    m = 0.0
    for theta in mats:
        m += float(np.trace(sigma @ theta.T @ scipy.linalg.cho_solve(cho, theta)))
    return float(np.sqrt(T * m))


def misspec_magnitude_of_spec(spec: DgpSpec, T: int) -> float:
    """Evaluate misspec_magnitude on a DgpSpec's MA block."""
    if spec.kind == "arma11":
        return misspec_magnitude([np.array([[spec.alpha]])], [[spec.sigma**2]], T)
    return misspec_magnitude(spec.Theta, spec.Sigma, T)
