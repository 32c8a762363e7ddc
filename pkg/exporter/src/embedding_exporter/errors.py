"""Exporter error hierarchy."""


class ExportError(Exception):
    """Base for all exporter failures."""


class DownloadFailure(ExportError):
    """A corpus download failed or produced an unusable archive."""


class CountMismatch(ExportError):
    """Row or class count differs from the published benchmark statistics."""


class EncoderFailure(ExportError):
    """An encoder is unavailable or produced an invalid matrix."""
