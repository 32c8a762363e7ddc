"""Embedding matrices on disk, label files, JSONL corpora, TF-IDF features, synthetic blobs.

An embedding matrix is an (n_rows, dim) float32 ndarray, C-contiguous, all
values finite. The binary file format is fixed:

    bytes 0..3    magic "DSE1"
    bytes 4..7    u32 LE version (= 1)
    bytes 8..15   u64 LE n_rows
    bytes 16..19  u32 LE dim
    bytes 20..    n_rows * dim float32 LE, row-major
"""

from __future__ import annotations

import json
import logging
import re
import struct
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import EmptyVocabulary, IoFailure, MalformedHeader, NonFiniteValue, TruncatedData

logger = logging.getLogger(__name__)

MAGIC = b"DSE1"
VERSION = 1
HEADER_SIZE = 20
_HEADER = struct.Struct("<4sIQI")


def validate_matrix(matrix: np.ndarray) -> np.ndarray:
    """Check embedding-matrix invariants; returns the matrix as contiguous float32."""
    matrix = np.ascontiguousarray(matrix, dtype=np.float32)
    if matrix.ndim != 2 or matrix.shape[0] < 1 or matrix.shape[1] < 1:
        raise ValueError(f"embedding matrix must be 2-D with n_rows >= 1 and dim >= 1, got shape {matrix.shape}")
    finite = np.isfinite(matrix)
    if not finite.all():
        bad = int(np.flatnonzero(~finite.ravel())[0])
        raise NonFiniteValue("non-finite value in matrix", HEADER_SIZE + 4 * bad)
    return matrix


def save_embeddings(matrix: np.ndarray, path) -> None:
    """Write a matrix in the binary embedding format."""
    matrix = validate_matrix(matrix)
    n_rows, dim = matrix.shape
    header = _HEADER.pack(MAGIC, VERSION, n_rows, dim)
    payload = matrix.astype("<f4", copy=False).tobytes()
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(payload)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_embeddings(path) -> np.ndarray:
    """Read a binary embedding file; round-trips bit-exactly with save_embeddings."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc

    if len(raw) < HEADER_SIZE:
        raise MalformedHeader(f"file too short for header ({len(raw)} bytes)", len(raw))
    magic, version, n_rows, dim = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise MalformedHeader(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise MalformedHeader(f"unsupported version {version}", 4)
    if n_rows < 1:
        raise MalformedHeader("n_rows must be >= 1", 8)
    if dim < 1:
        raise MalformedHeader("dim must be >= 1", 16)

    expected = n_rows * dim * 4
    payload = len(raw) - HEADER_SIZE
    if payload < expected:
        raise TruncatedData(f"declared {n_rows}x{dim} needs {expected} payload bytes, file has {payload}", len(raw))
    if payload > expected:
        raise MalformedHeader(f"{payload - expected} trailing bytes after payload", HEADER_SIZE + expected)

    data = np.frombuffer(raw, dtype="<f4", count=n_rows * dim, offset=HEADER_SIZE)
    finite = np.isfinite(data)
    if not finite.all():
        bad = int(np.flatnonzero(~finite)[0])
        raise NonFiniteValue("non-finite value in payload", HEADER_SIZE + 4 * bad)
    return data.reshape(n_rows, dim).copy()


def save_labels(labels: np.ndarray, path) -> None:
    """Write labels as text, one integer per line."""
    labels = np.asarray(labels, dtype=np.int64)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for value in labels:
                fh.write(f"{int(value)}\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_labels(path) -> np.ndarray:
    """Read a one-integer-per-line label file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [line.strip() for line in fh if line.strip()]
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise ValueError(f"label file {path} is empty")
    labels = np.array([int(line) for line in lines], dtype=np.int64)
    if labels.min() < 0:
        raise ValueError("labels must be non-negative")
    return labels


def num_classes(labels: np.ndarray) -> int:
    """Class count C for a label vector (ids assumed in [0, C))."""
    return int(np.max(labels)) + 1


def load_corpus(path):
    """Read a JSON Lines corpus: objects with "text" and optional "label".

    String labels are mapped to integer ids in order of first appearance.
    Returns (texts, labels-or-None); labels are present only if every line has one.
    """
    texts: list[str] = []
    raw_labels: list = []
    have_labels = 0
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
                if "text" not in obj or not isinstance(obj["text"], str):
                    raise ValueError(f'{path}:{lineno}: missing string field "text"')
                texts.append(obj["text"])
                if "label" in obj:
                    have_labels += 1
                    raw_labels.append(obj["label"])
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if not texts:
        raise ValueError(f"corpus {path} is empty")
    if have_labels == 0:
        return texts, None
    if have_labels != len(texts):
        raise ValueError(f"{path}: {have_labels} of {len(texts)} lines carry a label; all or none must")

    ids: dict = {}
    labels = np.empty(len(raw_labels), dtype=np.int64)
    for i, value in enumerate(raw_labels):
        if isinstance(value, bool) or not isinstance(value, (int, str)):
            raise ValueError(f"label must be an integer or string, got {value!r}")
        if isinstance(value, int):
            labels[i] = value
        else:
            labels[i] = ids.setdefault(value, len(ids))
    if labels.min() < 0:
        raise ValueError("integer labels must be non-negative")
    return texts, labels


@dataclass
class TfidfConfig:
    """Settings for the bag-of-n-grams TF-IDF featurizer."""

    ngram_min: int = 1
    ngram_max: int = 1
    max_features: int = 50_000
    lowercase: bool = True
    min_df: int = 1

    def __post_init__(self):
        if not (1 <= self.ngram_min <= self.ngram_max <= 3):
            raise ValueError(f"need 1 <= ngram_min <= ngram_max <= 3, got ({self.ngram_min}, {self.ngram_max})")
        if self.max_features < 1:
            raise ValueError("max_features must be >= 1")
        if self.min_df < 1:
            raise ValueError("min_df must be >= 1")


_TOKEN_RE = re.compile(r"[0-9a-zA-Z]+")


def _ngrams(text: str, cfg: TfidfConfig):
    if cfg.lowercase:
        text = text.lower()
    tokens = _TOKEN_RE.findall(text)
    for size in range(cfg.ngram_min, cfg.ngram_max + 1):
        for i in range(len(tokens) - size + 1):
            yield " ".join(tokens[i : i + size])


def fit_tfidf(corpus: list[str], cfg: TfidfConfig):
    """Learn the vocabulary and smoothed IDF weights from a corpus.

    Vocabulary keeps the max_features terms with the highest total count across
    the corpus (ties broken by term, ascending); that ranking is the column order.
    IDF is ln((1+N)/(1+df)) + 1.
    """
    if not corpus:
        raise ValueError("corpus must be non-empty")
    doc_freq: Counter = Counter()
    total_count: Counter = Counter()
    for text in corpus:
        counts = Counter(_ngrams(text, cfg))
        total_count.update(counts)
        doc_freq.update(counts.keys())

    surviving = [t for t, df in doc_freq.items() if df >= cfg.min_df]
    if not surviving:
        raise EmptyVocabulary(f"no term has document frequency >= {cfg.min_df}")
    surviving.sort(key=lambda t: (-total_count[t], t))
    vocabulary = surviving[: cfg.max_features]

    n_docs = len(corpus)
    idf = np.array([np.log((1.0 + n_docs) / (1.0 + doc_freq[t])) + 1.0 for t in vocabulary], dtype=np.float64)
    return vocabulary, idf


def transform_tfidf(corpus: list[str], vocabulary: list[str], idf: np.ndarray, cfg: TfidfConfig) -> np.ndarray:
    """Raw-count TF times IDF, then L2 row normalization; out-of-vocabulary rows stay zero."""
    index = {term: j for j, term in enumerate(vocabulary)}
    matrix = np.zeros((len(corpus), len(vocabulary)), dtype=np.float64)
    for i, text in enumerate(corpus):
        for term, count in Counter(_ngrams(text, cfg)).items():
            j = index.get(term)
            if j is not None:
                matrix[i, j] = count
    matrix *= idf
    norms = np.sqrt((matrix * matrix).sum(axis=1))
    zero_rows = int((norms == 0.0).sum())
    if zero_rows:
        logger.warning("%d document(s) have no in-vocabulary terms; their rows are all-zero", zero_rows)
    norms[norms == 0.0] = 1.0
    matrix /= norms[:, None]
    return matrix.astype(np.float32)


def tfidf_featurize(corpus: list[str], cfg: TfidfConfig | None = None) -> np.ndarray:
    """Fit TF-IDF on a corpus and return the (n_docs, vocab) feature matrix."""
    cfg = cfg or TfidfConfig()
    vocabulary, idf = fit_tfidf(corpus, cfg)
    return transform_tfidf(corpus, vocabulary, idf, cfg)


def make_blobs(n_per_class: int, num_classes: int, dim: int, separation: float, seed: int):
    """Deterministic Gaussian clusters with unit-variance noise.

    Centers are the first num_classes standard basis vectors scaled by
    separation/sqrt(2), so every pair of centers is exactly `separation` apart.
    Rows are grouped by class. Returns (matrix, labels).
    """
    if n_per_class < 1 or num_classes < 1 or dim < 1:
        raise ValueError("n_per_class, num_classes and dim must be >= 1")
    if separation <= 0:
        raise ValueError("separation must be > 0")
    if dim < num_classes:
        raise ValueError(f"need dim >= num_classes to place centers, got dim={dim} < {num_classes}")

    rng = np.random.default_rng(seed)
    scale = separation / np.sqrt(2.0)
    rows = []
    for c in range(num_classes):
        center = np.zeros(dim)
        center[c] = scale
        rows.append(center + rng.standard_normal((n_per_class, dim)))
    matrix = np.concatenate(rows).astype(np.float32)
    labels = np.repeat(np.arange(num_classes, dtype=np.int64), n_per_class)
    return matrix, labels
