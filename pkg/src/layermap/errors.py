"""Exception classes raised across the package."""


class LayermapError(Exception):
    """Base class for all errors raised by layermap."""


class FormatError(LayermapError, ValueError):
    """Problem with the contents of an image file."""


class UnsupportedFormat(FormatError):
    pass


class MalformedHeader(FormatError):
    pass


class TruncatedData(FormatError):
    pass


class MaxvalOutOfRange(FormatError):
    pass


class DimensionMismatch(LayermapError, ValueError):
    pass


class EpsilonDegenerate(LayermapError, ValueError):
    """epsilon is 0 or 1, so the field strength h is infinite."""


class AlphaNonPositive(LayermapError, ValueError):
    pass


class EmptySampleList(LayermapError, ValueError):
    pass


class NonPrefixMask(LayermapError, ValueError):
    """Hierarchical restoration needs the selected planes to be 1..m."""


class AlphaScheduleDecreasing(LayermapError, ValueError):
    pass


class InstanceTooLarge(LayermapError, ValueError):
    pass


class InteriorEmpty(LayermapError, ValueError):
    pass


class BetaOutOfRange(LayermapError, ValueError):
    pass


class RatioNotAboveOne(LayermapError, ValueError):
    pass


class DegenerateSample(LayermapError, ValueError):
    """The G statistics of a plane fall outside the estimator's domain."""
