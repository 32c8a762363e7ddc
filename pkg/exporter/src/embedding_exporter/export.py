"""Export a corpus split as an embedding matrix, label file, and metadata JSON.

Row and class counts are validated against the published benchmark statistics
before anything is written; a mismatch is a hard error, not a warning, so a
silently truncated download can never produce a plausible-looking export.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import datasets, dse, encoders
from .errors import CountMismatch, EncoderFailure

# (rows, classes) per benchmark split.
EXPECTED = {
    ("20news", "train"): (11_314, 20),
    ("20news", "test"): (7_532, 20),
    ("agnews", "train"): (120_000, 4),
    ("agnews", "test"): (7_600, 4),
    ("dbpedia", "train"): (560_000, 14),
    ("dbpedia", "test"): (70_000, 14),
}

DATASETS = sorted({name for name, _ in EXPECTED})
SPLITS = ("train", "test")


@dataclass
class ExportSpec:
    dataset: str
    split: str
    encoder: str
    out_dir: str
    matrix_path: str | None = None  # default: out_dir/embeddings.dse
    labels_path: str | None = None  # default: out_dir/labels.txt
    metadata_path: str | None = None  # default: out_dir/metadata.json

    def __post_init__(self):
        if self.dataset not in DATASETS:
            raise ValueError(f"dataset must be one of {DATASETS}, got {self.dataset!r}")
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {list(SPLITS)}, got {self.split!r}")
        if self.encoder not in encoders.ENCODERS:
            raise ValueError(
                f"encoder must be one of {sorted(encoders.ENCODERS)}, got {self.encoder!r}")
        out = Path(self.out_dir)
        self.matrix_path = str(Path(self.matrix_path) if self.matrix_path else out / "embeddings.dse")
        self.labels_path = str(Path(self.labels_path) if self.labels_path else out / "labels.txt")
        self.metadata_path = str(
            Path(self.metadata_path) if self.metadata_path else out / "metadata.json")


def _validate_counts(spec: ExportSpec, labels: np.ndarray, class_names) -> None:
    want_rows, want_classes = EXPECTED[(spec.dataset, spec.split)]
    if len(labels) != want_rows:
        raise CountMismatch(
            f"{spec.dataset}/{spec.split}: got {len(labels)} rows, expected {want_rows}")
    if len(class_names) != want_classes:
        raise CountMismatch(
            f"{spec.dataset}: got {len(class_names)} classes, expected {want_classes}")
    present = np.unique(labels)
    if present[0] < 0 or present[-1] >= want_classes or len(present) != want_classes:
        raise CountMismatch(
            f"{spec.dataset}/{spec.split}: labels must cover 0..{want_classes - 1}, "
            f"saw {len(present)} distinct values in [{present[0]}, {present[-1]}]")


def export(spec: ExportSpec, *, dataset_loader=None, encoder=None,
           cache_dir: Path | None = None) -> dict:
    """Write matrix + labels + metadata for one corpus split; returns the metadata.

    `dataset_loader` (a `(name, split, cache_dir)` callable) and `encoder`
    (an `encoder_id` + `encode` object) default to the registries and exist
    so tests and callers can substitute offline implementations.
    """
    loader = dataset_loader or datasets.load_dataset
    texts, labels, class_names = loader(spec.dataset, spec.split, cache_dir)
    labels = np.asarray(labels, dtype=np.int64)
    _validate_counts(spec, labels, class_names)

    if encoder is None:
        encoder = encoders.get_encoder(spec.encoder)
    matrix = np.asarray(encoder.encode(texts), dtype=np.float32)
    if matrix.ndim != 2 or matrix.shape[0] != len(labels):
        raise EncoderFailure(
            f"encoder returned shape {matrix.shape} for {len(labels)} documents")
    if not np.isfinite(matrix).all():
        raise EncoderFailure("encoder returned non-finite values")

    dse.write_matrix(matrix, spec.matrix_path)
    dse.write_labels(labels, spec.labels_path)
    metadata = {
        "dataset": spec.dataset,
        "split": spec.split,
        "encoder": spec.encoder,
        "encoder_id": encoder.encoder_id,
        "n_rows": int(matrix.shape[0]),
        "dim": int(matrix.shape[1]),
        "num_classes": len(class_names),
        "class_names": list(class_names),
        "matrix_file": Path(spec.matrix_path).name,
        "labels_file": Path(spec.labels_path).name,
    }
    dse.write_metadata(metadata, spec.metadata_path)
    return metadata
