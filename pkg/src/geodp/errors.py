"""Exception types raised across the package."""


class GeoDPError(Exception):
    """Base class for all geodp errors."""


class UndefinedAngle(GeoDPError):
    """arctan2(0, 0) has no value."""


class ZeroVector(GeoDPError):
    """The zero vector has no direction."""


class EmptyBatch(GeoDPError):
    """An aggregation was asked to run over zero gradients."""


class InvalidPrivacyParams(GeoDPError):
    """Privacy parameters outside their admissible ranges."""


class ShapeMismatch(GeoDPError):
    """Operands with incompatible dimensions."""


class LengthMismatch(GeoDPError):
    """Paired sample lists of different lengths."""


class TooFewSamples(GeoDPError):
    """Not enough samples for a meaningful statistic."""


class DegenerateFit(GeoDPError):
    """A distribution fit collapsed (zero variance)."""


class InvalidBatchSize(GeoDPError):
    """Batch size outside [1, dataset size]."""


class BadMagic(GeoDPError):
    """File does not start with the expected magic number."""


class CountMismatch(GeoDPError):
    """Image and label files disagree on the record count."""


class TruncatedFile(GeoDPError):
    """File ended before the declared payload."""
