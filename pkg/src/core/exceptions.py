from typing import List, Tuple


class ResonanceError(ValueError):
    """Base class for every error raised by the services."""


class ConfigurationError(ResonanceError):
    """Invalid centers, strength tuples, windows or mismatched lengths."""


class UnreducedTupleError(ResonanceError):
    """An operation that needs finite strengths received an infinite entry."""


class ExpansionUnavailableError(ResonanceError):
    """The exponential-polynomial expansion cannot be used for this input."""


class SingularGammaError(ResonanceError):
    """Γ is singular at the requested point (a zero sits there)."""


class BoundaryZeroError(ResonanceError):
    """A zero lies on (or numerically too close to) a contour."""


class WindingResolutionError(ResonanceError):
    """The accumulated phase is not close enough to a multiple of 2π."""


class DepthExhaustedError(ResonanceError):
    """Subdivision hit the depth limit before every box was resolved."""

    def __init__(self, message: str, unresolved: List[Tuple[float, float, float, float]]):
        super().__init__(message)
        self.unresolved = unresolved


class NotARootError(ResonanceError):
    """The supplied point is not a zero of the determinant within tolerance."""


class ConvergenceError(ResonanceError):
    """An iterative method did not converge."""


class NotRayAlignedError(ConvergenceError):
    """Newton reached a stationary point whose minors are not on one ray."""


class UnachievableFrequencyError(ResonanceError):
    """The frequency is not achievable for the configuration."""


class NotAnOptimizerError(ResonanceError):
    """The tuple is not of minimal decay for the frequency."""
