"""
Exception hierarchy shared by every stage of the solver suite.

Each class carries the process exit code the CLI reports for it.
"""

from typing import ClassVar


class PnpError(Exception):
    """Base class for all solver-suite errors."""

    exit_code: ClassVar[int] = 1


class ConfigurationError(PnpError, ValueError):
    """Invalid or incomplete problem configuration."""

    exit_code: ClassVar[int] = 2


class DataError(ConfigurationError):
    """Initial or boundary data violating the model assumptions."""


class InvalidArgumentError(ConfigurationError):
    """An argument outside its admissible range."""


class IncompatibilityError(ConfigurationError):
    """Two runs or grids that cannot be compared."""


class DomainError(PnpError, ValueError):
    """A scalar kernel evaluated outside its domain."""

    exit_code: ClassVar[int] = 2


class MeshError(PnpError, ValueError):
    """Mesh construction or import failure."""

    exit_code: ClassVar[int] = 3


class DegenerateMeshError(MeshError):
    """A face whose center-to-center distance collapses."""

    def __init__(self, face: int, distance: float) -> None:
        super().__init__(f"degenerate face {face}: d_sigma = {distance:.3e}")
        self.face = face
        self.distance = distance


class AdmissibilityError(MeshError):
    """A mesh violating the orthogonality condition."""


class UnsupportedElementError(MeshError):
    """A mesh document containing elements we cannot read."""


class SolverError(PnpError, RuntimeError):
    """Failure of a nonlinear or linear solve."""

    exit_code: ClassVar[int] = 4


class NonConvergenceError(SolverError):
    """Newton iteration exhausted its iteration budget."""

    def __init__(self, message: str, history: list[float]) -> None:
        super().__init__(message)
        self.history = history


class StallError(SolverError):
    """Damped Newton could not find a decreasing step."""

    def __init__(self, message: str, history: list[float]) -> None:
        super().__init__(message)
        self.history = history


class SingularSystemError(SolverError):
    """Linear system without a unique solution."""


class PositivityError(SolverError):
    """A converged state left the open simplex."""


class KernelOverflowError(SolverError, OverflowError):
    """Kernel argument large enough to overflow binary64."""
