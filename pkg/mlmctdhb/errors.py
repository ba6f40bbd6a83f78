"""Exception hierarchy for the ML-MCTDHB simulator.

Every error that can reach the command line carries the exit status the
CLI reports for it.
"""

from typing import Any, Optional


class MLBError(Exception):
    """Base class of all simulator errors."""

    exit_code: int = 3

    def to_dict(self) -> dict:
        """Machine-readable description used by the CLI error channel."""
        return {
            "type": self.__class__.__name__,
            "message": str(self),
            "exit_code": self.exit_code,
        }


class ConfigError(MLBError, ValueError):
    """Invalid run configuration or invalid physical/numerical parameters."""

    exit_code = 2

    def __init__(self, message: str, path: Optional[str] = None) -> None:
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class NumericalError(MLBError):
    """A numerical procedure failed."""

    exit_code = 3


class StiffnessError(NumericalError):
    """The adaptive step size fell below its floor."""

    def __init__(self, message: str, snapshot: Any = None, t: float = 0.0) -> None:
        super().__init__(message)
        self.snapshot = snapshot
        self.t = t


class ConvergenceError(NumericalError):
    """Imaginary-time relaxation did not converge within its budget."""

    def __init__(self, message: str, last_state: Any = None) -> None:
        super().__init__(message)
        self.last_state = last_state


class ObservableError(NumericalError):
    """A recorded observable is not finite."""


class ResourceCapError(MLBError):
    """A problem size exceeds a configured or addressable cap."""

    exit_code = 4


class BasisOverflowError(ResourceCapError, OverflowError):
    """Number-state basis size does not fit a signed 64-bit integer."""
