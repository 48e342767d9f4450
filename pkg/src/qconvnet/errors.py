"""Exception types raised by the package.

Everything derives from QConvError so callers can catch the package's
failures with one clause; the CLI maps subtypes to exit codes.
"""


class QConvError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(QConvError):
    """A binary payload (IDX file, params file) is malformed or truncated."""


class DataError(QConvError):
    """Dataset content violates its contract (label range, count mismatch)."""


class ConfigError(QConvError):
    """A run configuration is missing keys or holds unsupported values."""


class GeometryError(QConvError):
    """Requested patch geometry does not fit the image."""


class ShapeError(QConvError):
    """An array's dimensions disagree with the model geometry."""


class EncodingError(QConvError):
    """A feature vector cannot be normalized (zero norm) or is not unit norm."""


class NumericalError(QConvError):
    """A numerical routine failed to converge."""


class TrainingError(QConvError):
    """Training produced non-finite values."""


class VerificationError(QConvError):
    """The simulator cross-check was handed a non-orthogonal operator."""
