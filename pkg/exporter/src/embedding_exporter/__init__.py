"""Benchmark corpus download and embedding export in the DSE1 matrix format."""

from .datasets import load_dataset
from .dse import write_labels, write_matrix, write_metadata
from .encoders import AveragedWordVectors, SentenceEncoder, get_encoder
from .errors import CountMismatch, DownloadFailure, EncoderFailure, ExportError
from .export import EXPECTED, ExportSpec, export

__version__ = "0.1.0"

__all__ = [
    "AveragedWordVectors",
    "CountMismatch",
    "DownloadFailure",
    "EXPECTED",
    "EncoderFailure",
    "ExportError",
    "ExportSpec",
    "SentenceEncoder",
    "export",
    "get_encoder",
    "load_dataset",
    "write_labels",
    "write_matrix",
    "write_metadata",
]
