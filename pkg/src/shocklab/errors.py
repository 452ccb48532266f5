"""Exception types raised across the package."""


class ShockLabError(Exception):
    """Base class for all package errors."""


class DomainError(ShockLabError, ValueError):
    """A state value fell outside the configured interval."""


class QuadratureError(ShockLabError, RuntimeError):
    """An adaptive quadrature did not converge."""


class DegenerateStatesError(ShockLabError, ValueError):
    """Left and right states coincide."""


class TailNotConvergedError(ShockLabError, RuntimeError):
    """Profile has not reached its end states inside the truncated domain."""


class ShiftTooLargeError(ShockLabError, ValueError):
    """Requested shift is too large for the truncated channel."""


class CFLError(ShockLabError, ValueError):
    """Time step violates the stability restriction."""


class BlowUpError(ShockLabError, FloatingPointError):
    """Non-finite values appeared in a field."""


class GridMismatchError(ShockLabError, ValueError):
    """Two fields live on different grids."""


class InversionError(ShockLabError, RuntimeError):
    """Inverting the entropy derivative failed."""


class ConstraintError(ShockLabError, ValueError):
    """A test function violates the constraints of an inequality check."""


class WindowError(ShockLabError, ValueError):
    """Fit window holds too few samples."""


class ConfigError(ShockLabError, ValueError):
    """Invalid experiment configuration."""
