"""Exception types shared across the package.

I/O failures raise the builtin OSError; everything else that a caller can
meaningfully catch gets a named class here.
"""


class PlcNoiseError(Exception):
    """Base class for all package-specific errors."""


class FormatError(PlcNoiseError):
    """A file does not conform to the documented byte layout."""


class DegenerateInputError(PlcNoiseError, ValueError):
    """Input carries no usable signal (all zero, zero variance, ...)."""


class InvalidRangeError(PlcNoiseError, ValueError):
    """Interval bounds are empty or reversed."""


class InvalidParamError(PlcNoiseError, ValueError):
    """A scalar parameter is outside its admissible range."""


class InvalidConfigError(PlcNoiseError, ValueError):
    """A configuration object violates its invariants."""


class OutOfRangeError(PlcNoiseError, ValueError):
    """A coordinate falls outside its admissible interval."""


class LengthError(PlcNoiseError, ValueError):
    """A sequence length is incompatible with the requested operation."""


class ShapeError(PlcNoiseError, ValueError):
    """Array shapes are inconsistent with the operation's contract."""


class ModeError(PlcNoiseError, ValueError):
    """An unknown mode keyword was passed."""


class DegenerateBatchError(PlcNoiseError, ValueError):
    """Batch too small for batch statistics (training-mode batch norm)."""


class ConfigError(PlcNoiseError):
    """Run configuration is inconsistent or incomplete (CLI level)."""


class NumericsError(PlcNoiseError):
    """A numerical procedure produced non-finite values or failed to converge."""


class ResolutionError(PlcNoiseError, ValueError):
    """A cyclic frequency is not resolvable with the given segment length."""


class EmptyRangeError(PlcNoiseError, ValueError):
    """A frequency range or band list selects no bins."""


class RankError(PlcNoiseError):
    """Covariance is non-finite; eigendecomposition impossible."""
