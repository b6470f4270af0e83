"""Error hierarchy shared by every layer."""

from typing import Any, Optional


class FracwaveError(Exception):
    """Base class for all toolkit errors."""


class GridMismatchError(FracwaveError, ValueError):
    """Fields live on different grids or have the wrong length."""


class IllPosedError(FracwaveError):
    """The requested quantity is not defined for this input."""


class ConfigError(FracwaveError):
    """Invalid run configuration."""

    def __init__(self, key: str, expected: str, message: Optional[str] = None):
        self.key = key
        self.expected = expected
        super().__init__(message or f"invalid value for '{key}': expected {expected}")


class NumericalFailure(FracwaveError):
    """A numerical procedure failed (exit code 3 at the CLI)."""


class ConvergenceError(NumericalFailure):
    """Iteration stopped without meeting its tolerance."""

    def __init__(self, message: str, last_iterate: Any = None):
        self.last_iterate = last_iterate
        super().__init__(message)


class NewtonDivergenceError(NumericalFailure):
    """Newton iteration left its basin of attraction."""


class SingularJacobianError(NumericalFailure):
    """Newton system is numerically singular (degenerate wave)."""


class EigenSolverError(NumericalFailure):
    """Dense eigensolver failed or was given the wrong operator kind."""


class BlowUpError(NumericalFailure):
    """Time integration produced non-finite or exploding values."""

    def __init__(self, message: str, partial_report: Any = None):
        self.partial_report = partial_report
        super().__init__(message)
