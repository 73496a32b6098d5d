"""Exception and warning types shared across the package."""


class WavetrainLabError(Exception):
    """Base class for all package errors."""


class InvalidFieldError(WavetrainLabError):
    """Field data contains non-finite values."""


class ConfigError(WavetrainLabError):
    """Invalid configuration document."""


class NewtonConvergenceError(WavetrainLabError):
    """Newton iteration failed to converge."""

    def __init__(self, message: str, last_residual: float = float("nan")):
        super().__init__(message)
        self.last_residual = last_residual


class DegenerateSystemError(WavetrainLabError):
    """A bordered or eigenvalue system is singular or near-degenerate."""


class CommensurabilityError(WavetrainLabError):
    """Domain length is not an integer multiple of the wave-train period."""


class RegimeError(WavetrainLabError):
    """Data lies outside the small-perturbation regime an operation assumes."""


class InstabilityError(WavetrainLabError):
    """Blow-up or unbounded growth detected during time integration."""

    def __init__(self, message: str, time: float = float("nan")):
        super().__init__(message)
        self.time = time


class IsolationError(WavetrainLabError):
    """Critical eigenvalue branch is not isolated on the requested interval."""


class CaseMismatchError(WavetrainLabError):
    """Initial data does not match the requested asymptotic case."""


class DomainTruncationError(WavetrainLabError):
    """Finite domain truncates the solution beyond the allowed tolerance."""


class InconsistencyError(WavetrainLabError):
    """Cross-check between two computation paths failed."""


class AliasingWarning(UserWarning):
    """Top Fourier modes carry non-negligible energy."""


class BoundaryContaminationWarning(UserWarning):
    """Weighted norm requested for a field that does not decay at the ends."""


class BranchTrackingWarning(UserWarning):
    """Eigenvector-overlap continuation was ambiguous."""


class TruncationWarning(UserWarning):
    """Spreading fronts approach the limits of the analysis window."""
