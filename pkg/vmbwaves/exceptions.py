# vmbwaves/exceptions.py
"""Exceptions raised by vmbwaves."""


class VmbWavesError(Exception):
    """Base class for every error raised by the package."""


class ConfigurationError(VmbWavesError):
    """Invalid grid, regime or run configuration."""


class UsageError(VmbWavesError):
    """An operation was called with incompatible arguments (sector mismatch, bad index)."""


class SingularPointError(VmbWavesError):
    """A kernel was evaluated exactly on its singular set v = u."""


class AssemblyError(VmbWavesError):
    """Sector matrix assembly produced non-finite or inconsistent entries."""


class ProjectionError(VmbWavesError):
    """A right-hand side has a component in the null space of the operator being inverted."""


class DiscretizationError(VmbWavesError):
    """The discretized operator violates a structural property (e.g. nonpositive spectral gap)."""


class SpectralCollisionError(VmbWavesError):
    """A resolvent was requested at (or numerically on) the spectrum."""


class ConvergenceError(VmbWavesError):
    """An iterative root solve did not converge."""


class NonContractionError(VmbWavesError):
    """The high-frequency fixed-point map failed to contract."""

    def __init__(self, message: str, xi: float):
        super().__init__(message)
        self.xi = xi


class DegenerateNormalizationError(VmbWavesError):
    """An eigenvector pairing is too close to zero (or infinite) to normalize."""


class SingularFrequencyError(VmbWavesError):
    """The requested generator contains a 1/xi term and xi = 0."""


class ResolutionError(VmbWavesError):
    """A Fourier synthesis request is under-resolved for the requested positions."""


class ParameterError(VmbWavesError):
    """Interaction-integral parameters violate the hypotheses of the bound being certified."""


class CacheError(VmbWavesError):
    """A cached matrix container is unreadable or belongs to another grid."""
