"""Exception hierarchy shared by all spinwire modules."""

from __future__ import annotations


class SpinwireError(Exception):
    """Base class for every error raised by the package."""


class InvalidChainError(SpinwireError, ValueError):
    """Bad chain length or coupling parameter."""


class InfeasibleSpectrumError(SpinwireError, ValueError):
    """Target spectrum is not symmetric, not sorted, or degenerate."""


class SynthesisError(SpinwireError):
    """Inverse eigenvalue reconstruction broke down or missed its tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class EigenSolverError(SpinwireError):
    """Tridiagonal QL iteration failed to converge."""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class NoTransferError(SpinwireError):
    """No fidelity maximum of useful size inside the search window."""


class UnsupportedFamilyError(SpinwireError):
    pass


class NotApplicableError(SpinwireError):
    pass


class EnsembleDegradedError(SpinwireError):
    """More than 1% of the disorder realizations failed."""

    def __init__(self, message: str, failures: int, n_av: int):
        super().__init__(message)
        self.failures = failures
        self.n_av = n_av


class FitError(SpinwireError):
    pass


class ManifestError(SpinwireError, ValueError):
    pass


class ContourAmbiguousWarning(UserWarning):
    """F-bar along one chain length is non-monotone beyond its error bars."""

    def __init__(self, message: str, n: int | None = None, column=None):
        super().__init__(message)
        self.n = n
        self.column = column
