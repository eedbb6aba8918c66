"""Exception types shared across the package."""


class FluctlatError(Exception):
    """Base class for all package errors."""


class ValidationError(FluctlatError, ValueError):
    """Malformed input data (negative rate entries, bad table shapes, ...)."""


class DomainError(FluctlatError, ValueError):
    """Argument outside its mathematical domain (e.g. density not in [0,1])."""


class CFLError(FluctlatError, ValueError):
    """Explicit time step violates the stability bound dt <= dx^2."""


class NumericalError(FluctlatError, RuntimeError):
    """Blow-up, NaN, or nonconvergence during a numerical computation."""


class CapacityError(FluctlatError, ValueError):
    """Problem size exceeds a hard capacity limit (state space, event cap)."""


class SingularityError(FluctlatError, ValueError):
    """Density touches {0,1} where a drift reconstruction needs sigma > 0."""


class InfeasibleError(FluctlatError, ValueError):
    """Requested current is unreachable for the given reaction rates."""


class ConsistencyError(FluctlatError, ValueError):
    """Mismatched inputs (event log vs. params, grids of different shape)."""


class ConfigError(FluctlatError, ValueError):
    """Unparseable or incomplete experiment configuration."""
