"""Per-horizon impulse response results and their CSV serialization."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.special

from irflab.errors import InputError


@dataclass(frozen=True, eq=False)
class IrfResult:
    """Point estimates and (optional) inference for horizons 0..H.

    ``horizons`` is contiguous from 0 but may stop short of the request when
    the sample cannot support later horizons; the dropped horizons are listed
    in ``truncated``. ``correction`` records the per-horizon bias-correction
    magnitude when a correction was applied.
    """

    horizons: np.ndarray
    theta: np.ndarray
    se: np.ndarray | None = None
    ci_lo: np.ndarray | None = None
    ci_hi: np.ndarray | None = None
    method: str = ""
    p: int = 0
    effective_T: np.ndarray | None = None
    correction: np.ndarray | None = None
    truncated: tuple[int, ...] = ()
    warnings: tuple[str, ...] = ()
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        horizons = np.asarray(self.horizons, dtype=int)
        theta = np.asarray(self.theta, dtype=float)
        object.__setattr__(self, "horizons", horizons)
        object.__setattr__(self, "theta", theta)
        if horizons.shape != theta.shape:
            raise InputError("horizons and theta lengths differ")
        if horizons.size == 0 or horizons[0] != 0 or np.any(np.diff(horizons) != 1):
            raise InputError("horizons must be contiguous starting at 0")
        for name in ("se", "ci_lo", "ci_hi", "effective_T", "correction"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr, dtype=float)
                object.__setattr__(self, name, arr)
                if arr.shape != theta.shape:
                    raise InputError(f"{name} length does not match theta")

    @property
    def H(self) -> int:
        return int(self.horizons[-1])

    def with_analytic_ci(self, level: float) -> "IrfResult":
        """Symmetric normal interval theta +- z_{1-a/2} * se."""
        if self.se is None:
            raise InputError("analytic interval requires standard errors")
        if not 0.0 < level < 1.0:
            raise InputError("level must be in (0, 1)")
        z = scipy.special.ndtri(0.5 + level / 2.0)
        return replace(self, ci_lo=self.theta - z * self.se, ci_hi=self.theta + z * self.se)

    def to_csv(self, path_or_buffer, header_comment: str | None = None) -> None:
        """Write rows (horizon, theta, se, ci_lo, ci_hi, method, p)."""
        own = not hasattr(path_or_buffer, "write")
        fh = open(path_or_buffer, "w", encoding="utf-8", newline="") if own else path_or_buffer
        try:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            writer = csv.writer(fh)
            writer.writerow(["horizon", "theta", "se", "ci_lo", "ci_hi", "method", "p"])
            for i, h in enumerate(self.horizons):
                writer.writerow(
                    [
                        int(h),
                        repr(float(self.theta[i])),
                        repr(float(self.se[i])) if self.se is not None else "",
                        repr(float(self.ci_lo[i])) if self.ci_lo is not None else "",
                        repr(float(self.ci_hi[i])) if self.ci_hi is not None else "",
                        self.method,
                        self.p,
                    ]
                )
        finally:
            if own:
                fh.close()


def read_irf_csv(path_or_buffer) -> IrfResult:
    """Read an IrfResult written by :meth:`IrfResult.to_csv`."""
    if hasattr(path_or_buffer, "read"):
        text = path_or_buffer.read()
    else:
        with open(path_or_buffer, "r", encoding="utf-8") as fh:
            text = fh.read()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    rows = list(csv.DictReader(io.StringIO("\n".join(lines))))
    if not rows:
        raise InputError("empty impulse response CSV")

    def col(name):
        vals = [row[name] for row in rows]
        if any(v == "" for v in vals):
            return None
        return np.array([float(v) for v in vals])

    return IrfResult(
        horizons=np.array([int(row["horizon"]) for row in rows]),
        theta=col("theta"),
        se=col("se"),
        ci_lo=col("ci_lo"),
        ci_hi=col("ci_hi"),
        method=rows[0]["method"],
        p=int(rows[0]["p"]),
    )
