"""Exception hierarchy shared by the library and the CLI.

The CLI maps exceptions to exit codes: input and configuration problems exit
with 2, numerical failures exit with 3.
"""

from __future__ import annotations


class IrflabError(Exception):
    """Base class for all library errors."""

    exit_code = 3


class InputError(IrflabError):
    """Invalid user input: bad configs, missing columns, non-stationary specs."""

    exit_code = 2


class InsufficientSampleError(InputError):
    """Not enough observations for the requested lags or horizons."""


class NumericalError(IrflabError):
    """Numerical failure during estimation."""

    exit_code = 3


class SingularDesignError(NumericalError):
    """Rank-deficient regression design."""

    def __init__(self, message: str, columns: tuple[str, ...] = ()):
        super().__init__(message)
        self.columns = columns


class IdentificationError(NumericalError):
    """Residual covariance unsuitable for structural identification."""


class NormalizationError(NumericalError):
    """Impact response too close to zero for unit-impulse normalization."""


class DegenerateShockError(NumericalError):
    """Residualized impulse has (numerically) zero variance."""


class BootstrapError(NumericalError):
    """Bootstrap could not produce the requested number of valid draws."""
