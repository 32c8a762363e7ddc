"""Exact k-nearest-neighbor mining under Euclidean distance, plus the label-agreement diagnostic."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import IoFailure, KTooLarge

# Rows x candidate-columns budget for one distance block (~256 MB of float64).
_BLOCK_BUDGET = 32_000_000
# Matrices up to this many elements get float64 distance accumulation.
_F64_LIMIT = 16_000_000


@dataclass
class NeighborTable:
    """Per-row nearest neighbors: indices and distances sorted ascending, self excluded."""

    indices: np.ndarray  # (n_rows, k) int64
    distances: np.ndarray  # (n_rows, k) float64, non-decreasing per row

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.distances = np.asarray(self.distances, dtype=np.float64)
        n, k = self.indices.shape
        if self.distances.shape != (n, k):
            raise ValueError("indices and distances shapes differ")
        if np.any(self.indices == np.arange(n)[:, None]):
            raise ValueError("a row lists itself as neighbor")
        if np.any(self.indices < 0) or np.any(self.indices >= n):
            raise ValueError("neighbor index out of range")
        if np.any(np.diff(self.distances, axis=1) < 0):
            raise ValueError("per-row distances must be non-decreasing")
        sorted_rows = np.sort(self.indices, axis=1)
        if k > 1 and np.any(sorted_rows[:, 1:] == sorted_rows[:, :-1]):
            raise ValueError("duplicate neighbor index within a row")

    @property
    def k(self) -> int:
        return self.indices.shape[1]

    @property
    def n_rows(self) -> int:
        return self.indices.shape[0]


def _direct_d2(a64: np.ndarray, b64: np.ndarray) -> np.ndarray:
    """Canonical exact squared distance: float64 direct subtraction, numpy sum.

    Every tie decision routes through this one formula so results match a
    brute-force ((a - b) ** 2).sum() oracle bit for bit.
    """
    diff = a64 - b64
    return (diff * diff).sum(axis=-1)


def _refine_row(x64_row: np.ndarray, cand: np.ndarray, X64: np.ndarray, k: int) -> np.ndarray:
    """k smallest candidates by (exact float64 distance, index)."""
    exact = _direct_d2(x64_row, X64[cand])
    return cand[np.lexsort((cand, exact))[:k]]


def mine_neighbors(matrix: np.ndarray, k: int, block_budget: int = _BLOCK_BUDGET) -> NeighborTable:
    """Exact k nearest other rows per row, smallest Euclidean distance first.

    Search runs blockwise on the squared-distance expansion
    ``|a|^2 + |b|^2 - 2 a.b`` (negatives clamped to 0). Rows whose selection
    boundary falls within the expansion's floating-point error of an excluded
    candidate are re-decided from exact float64 direct distances, so the
    result matches a brute-force direct computation, with ties broken by the
    lower row index. The selected pairs' distances are recomputed directly in
    float64, so duplicates come back at exactly 0.
    """
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise ValueError("matrix must be 2-D")
    n, dim = matrix.shape
    if k < 1:
        raise ValueError("k must be >= 1")
    if k >= n:
        raise KTooLarge(f"k={k} must be < n_rows={n}")

    work_dtype = np.float64 if matrix.size <= _F64_LIMIT else np.float32
    X = np.ascontiguousarray(matrix, dtype=work_dtype)
    norms = np.einsum("ij,ij->i", X, X)
    X64 = np.ascontiguousarray(matrix, dtype=np.float64)

    # Per-entry error bound for the expansion: sequential norm sums and the
    # BLAS dot each contribute <= dim * eps * scale, doubled for the boundary
    # comparison (both the kth value and the challenger carry the error).
    margin_coeff = (4.0 * dim + 16.0) * float(np.finfo(work_dtype).eps)
    nmax = float(norms.max())

    block = max(1, block_budget // n)
    indices = np.empty((n, k), dtype=np.int64)
    refined = np.empty((n, k), dtype=np.float64)

    for start in range(0, n, block):
        stop = min(start + block, n)
        d2 = norms[start:stop, None] + norms[None, :] - 2.0 * (X[start:stop] @ X.T)
        np.maximum(d2, 0.0, out=d2)
        d2[np.arange(stop - start), np.arange(start, stop)] = np.inf

        part = np.argpartition(d2, k - 1, axis=1)[:, :k]
        part_d2 = np.take_along_axis(d2, part, axis=1)

        # argpartition decides by expansion values; redo any row where an
        # excluded candidate sits within the error margin of the kth distance,
        # deciding those from exact direct float64 distances instead.
        tau = part_d2.max(axis=1)
        margin = margin_coeff * (norms[start:stop] + nmax + 1.0)
        near_boundary = (d2 <= (tau + margin)[:, None]).sum(axis=1)
        for r in np.flatnonzero(near_boundary > k):
            cand = np.flatnonzero(d2[r] <= tau[r] + margin[r])
            part[r] = _refine_row(X64[start + r], cand, X64, k)

        # Exact distances for the selected pairs only.
        exact = _direct_d2(X64[start:stop, None, :], X64[part])

        # Final per-row order: (exact squared distance, neighbor index).
        for r in range(stop - start):
            order = np.lexsort((part[r], exact[r]))
            indices[start + r] = part[r][order]
            refined[start + r] = exact[r][order]

    return NeighborTable(indices=indices, distances=np.sqrt(refined))


def neighbor_label_agreement(table: NeighborTable, labels: np.ndarray, up_to_k: int) -> list[float]:
    """Fraction of (row, neighbor) pairs sharing a gold label, for each k' = 1..up_to_k."""
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) != table.n_rows:
        raise ValueError(f"{len(labels)} labels for {table.n_rows} mined rows")
    if not (1 <= up_to_k <= table.k):
        raise ValueError(f"up_to_k must be in [1, {table.k}], got {up_to_k}")
    match = labels[table.indices[:, :up_to_k]] == labels[:, None]
    cumulative = match.cumsum(axis=1).sum(axis=0)
    return [float(cumulative[kp - 1] / (table.n_rows * kp)) for kp in range(1, up_to_k + 1)]


def save_neighbor_table(table: NeighborTable, path) -> None:
    """Write one JSON object per row: {"id", "neighbors", "distances"}."""
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for i in range(table.n_rows):
                fh.write(json.dumps({
                    "id": i,
                    "neighbors": table.indices[i].tolist(),
                    "distances": table.distances[i].tolist(),
                }))
                fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_neighbor_table(path) -> NeighborTable:
    indices, distances = [], []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh):
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                if obj["id"] != lineno:
                    raise ValueError(f"{path}: row ids must be consecutive from 0, got {obj['id']} at line {lineno}")
                indices.append(obj["neighbors"])
                distances.append(obj["distances"])
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if not indices:
        raise ValueError(f"neighbor table {path} is empty")
    return NeighborTable(indices=np.array(indices), distances=np.array(distances))
