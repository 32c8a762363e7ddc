"""Exception types shared across the engine."""


class DocscanError(Exception):
    """Base class for all engine errors."""


class MalformedHeader(DocscanError):
    """Embedding file header is invalid; carries the byte offset of the bad field."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class TruncatedData(DocscanError):
    """Embedding file ends before the declared payload; carries the offset where data stopped."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class NonFiniteValue(DocscanError):
    """A NaN or Inf was found in matrix data; carries the byte offset of the first bad value."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class IoFailure(DocscanError):
    """Wrapper around OS-level read/write failures."""


class EmptyVocabulary(DocscanError):
    """No term survived TF-IDF vocabulary filtering."""


class KTooLarge(DocscanError):
    """Requested more neighbors/clusters than the data can support."""


class NonFiniteGradient(DocscanError):
    """Optimizer received a gradient containing NaN or Inf."""


class InsufficientRuns(DocscanError):
    """Aggregation over runs needs at least two values."""
