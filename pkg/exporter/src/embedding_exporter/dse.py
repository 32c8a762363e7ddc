"""Writers for the clustering engine's on-disk interchange formats.

DSE1 matrix layout: 4-byte magic "DSE1", u32 version (1), u64 row count,
u32 dim, all little-endian, then float32 row-major payload. Labels are one
non-negative integer per line. Every write lands atomically: content goes to
a temp file in the target directory, then an os.replace over the final path,
so readers never observe a partial file.
"""

from __future__ import annotations

import contextlib
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

MAGIC = b"DSE1"
VERSION = 1
HEADER = struct.Struct("<4sIQI")


def _atomic_write(path: Path, write_fn) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            write_fn(fh)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def write_matrix(matrix: np.ndarray, path) -> None:
    """DSE1 matrix file; rejects anything the engine's loader would reject."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] < 1 or matrix.shape[1] < 1:
        raise ValueError(f"matrix must be 2-D and non-empty, got shape {matrix.shape}")
    payload = np.ascontiguousarray(matrix, dtype="<f4")
    if not np.isfinite(payload).all():
        raise ValueError("matrix contains non-finite values")

    def body(fh):
        fh.write(HEADER.pack(MAGIC, VERSION, matrix.shape[0], matrix.shape[1]))
        fh.write(payload.tobytes())

    _atomic_write(path, body)


def write_labels(labels, path) -> None:
    """One label id per line; ids must be non-negative integers."""
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.size < 1:
        raise ValueError("labels must be a non-empty vector")
    if not np.issubdtype(labels.dtype, np.integer) or labels.min() < 0:
        raise ValueError("labels must be non-negative integers")
    text = "\n".join(str(int(v)) for v in labels) + "\n"
    _atomic_write(path, lambda fh: fh.write(text.encode("ascii")))


def write_metadata(payload: dict, path) -> None:
    """Deterministic metadata JSON (sorted keys, no timestamps)."""
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    _atomic_write(path, lambda fh: fh.write(text.encode("utf-8")))
