"""Exception types shared across the package."""


class GoftError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(GoftError, ValueError):
    """Invalid dimension for a rotation plan (d < 2)."""


class ShapeError(GoftError, ValueError):
    """Input shape incompatible with a chain or adapter."""


class ModeError(GoftError, TypeError):
    """Operation called on a chain of the wrong kind."""


class TapeError(GoftError, ValueError):
    """Backward called with a tape that does not match the forward."""


class DegenerateInputError(GoftError, ValueError):
    """Alignment requested for a zero vector."""


class NormMismatchError(GoftError, ValueError):
    """Transport endpoints do not lie on the same sphere."""


class ConfigError(GoftError, ValueError):
    """Invalid task or training configuration."""


class DivergenceError(GoftError, RuntimeError):
    """Training produced a non-finite loss."""
