"""Exception hierarchy shared by all modules."""


class WaveMapLabError(Exception):
    """Base class for every error raised by the package."""


class InvalidStateError(WaveMapLabError, ValueError):
    """Field data is non-finite or violates the boundary condition."""


class ConfigurationError(WaveMapLabError, ValueError):
    """Numerical parameters violate a scheme or module precondition."""


class DivergenceError(WaveMapLabError, RuntimeError):
    """A time evolution blew up; ``last_state`` holds the last finite snapshot."""

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class SearchFailure(WaveMapLabError, RuntimeError):
    """A bracketing search (slope, root, zero) did not find a bracket."""


class IntegrationFailure(WaveMapLabError, RuntimeError):
    """An ODE integrator step failed; ``last`` holds the last accepted point."""

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class ResolutionError(WaveMapLabError, RuntimeError):
    """A residual check failed at the requested resolution."""


class RangeError(WaveMapLabError, ValueError):
    """A requested radius, time window or parameter lies outside the data."""


class PoleError(WaveMapLabError, ValueError):
    """Evaluation too close to a pole of a meromorphic closed form."""


class DegenerateEquilibriumError(WaveMapLabError, ValueError):
    """Linearization at an equilibrium is (numerically) singular."""


class NormalizationError(WaveMapLabError, RuntimeError):
    """The Jost-type solution vanishes at r = 1."""


class ContractionError(WaveMapLabError, RuntimeError):
    """A fixed-point map failed to contract."""


class UnsupportedRegionError(WaveMapLabError, TypeError):
    """Region boundary is not polynomial; exact area is unavailable."""
