"""Exception hierarchy shared across the engine."""


class MediaseekError(Exception):
    """Base class for all errors raised by this package."""


class UnsupportedFormat(MediaseekError):
    """File format is recognized but not one of the supported ingest formats."""


class CorruptFile(MediaseekError):
    """File claims a supported format but its payload is malformed."""


class MissingFrame(CorruptFile):
    """A video manifest references a frame that is not present on disk."""


class WrongMediaType(MediaseekError):
    """Operation applied to an object of an incompatible media type."""


class InsufficientData(MediaseekError):
    """Not enough samples to carry out an estimation (e.g. codebook training)."""


class DimensionMismatch(MediaseekError):
    """Vector length does not match the expected dimension."""


class NegativeComponent(MediaseekError):
    """Chi-squared distance requires nonnegative components."""


class DuplicateId(MediaseekError):
    """Row id already present in the table."""


class IndexStale(MediaseekError):
    """Index was built before the latest table mutation; rebuild required."""


class DegenerateMesh(MediaseekError):
    """Mesh has no usable surface (zero total area)."""


class EmptyImage(MediaseekError):
    """Binary image contains no set pixels."""


class ExtractionFailed(MediaseekError):
    """Feature extraction on a reference document produced nothing usable."""


class UnknownCategory(MediaseekError):
    """Feature category name is not registered."""


class UnknownSegment(MediaseekError):
    """Segment id not present in the catalog."""


class MissingVectors(MediaseekError):
    """Segment has no stored vectors for the requested categories."""


class InvalidQuery(MediaseekError):
    """Query violates the composition rules."""


class UnsupportedTerm(InvalidQuery):
    """Query term type is reserved but not executable (motion sketches)."""


class SessionExpired(MediaseekError):
    """Session cache entry evicted or never existed."""


class InvalidRating(MediaseekError):
    """Relevance rating outside the four-point scale."""


class EngineUnreachable(MediaseekError):
    """Scenario runner could not open the engine data directory."""


class MalformedScript(MediaseekError):
    """Scenario script file could not be parsed."""
