"""Exception types shared across the package."""


class BlindDeconvError(Exception):
    """Base class for all package errors."""


class LengthError(BlindDeconvError, ValueError):
    """Transform length is not a power of two."""


class DimensionError(BlindDeconvError, ValueError):
    """Operand shapes do not agree."""


class DegenerateInputError(BlindDeconvError, ValueError):
    """Input makes the requested quantity undefined (e.g. a zero vector)."""


class NumericalError(BlindDeconvError, ArithmeticError):
    """A computed quantity left its admissible range beyond roundoff."""


class SamplingError(BlindDeconvError, RuntimeError):
    """Rejection sampling could not produce an admissible draw."""


class ConfigError(BlindDeconvError, ValueError):
    """Invalid experiment or CLI configuration."""
