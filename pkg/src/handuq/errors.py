"""Exception types shared across the toolkit."""


class HanduqError(Exception):
    """Base class for all toolkit errors."""


class FormatError(HanduqError):
    """A file or document does not conform to its declared format."""


class RangeError(HanduqError, ValueError):
    """A numeric value lies outside its contractual range."""


class DimensionError(HanduqError):
    """Two rasters that must share dimensions do not."""


class AmbiguousMaskError(FormatError):
    """A mask image contains pixel values other than 0 and 255."""


class LabelError(HanduqError):
    """An annotation export names a label outside the hand/background contract."""


class SampleError(HanduqError):
    """A condition group is too small for the requested sample size."""


class EmptyAggregateError(HanduqError):
    """An aggregation was requested over an empty collection."""


class EvalError(HanduqError):
    """An evaluation run failed on a specific item."""

    def __init__(self, item_id: str, message: str):
        super().__init__(f"item {item_id!r}: {message}")
        self.item_id = item_id
