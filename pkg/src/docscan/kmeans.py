"""Lloyd's k-means with k-means++ seeding and empty-cluster repair."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import KTooLarge

_F64_LIMIT = 32_000_000


@dataclass
class KmeansResult:
    centroids: np.ndarray  # (k, dim)
    assignments: np.ndarray  # (n,) int64, each row's nearest centroid
    inertia: float  # sum of squared distances to assigned centroids
    iterations_run: int
    inertia_history: list = field(default_factory=list)  # inertia after each assignment step


def _assign(X: np.ndarray, centroids: np.ndarray):
    """Nearest centroid per row (ties to the lower centroid index) and squared distances."""
    x2 = np.einsum("ij,ij->i", X, X)
    c2 = np.einsum("ij,ij->i", centroids, centroids)
    d2 = x2[:, None] + c2[None, :] - 2.0 * (X @ centroids.T)
    np.maximum(d2, 0.0, out=d2)
    assignments = np.argmin(d2, axis=1)
    return assignments.astype(np.int64), d2[np.arange(len(X)), assignments]


def assign_to_centroids(matrix: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Cluster ids for new rows under fixed centroids."""
    X = np.asarray(matrix, dtype=np.float64 if matrix.size <= _F64_LIMIT else np.float32)
    assignments, _ = _assign(X, np.asarray(centroids, dtype=X.dtype))
    return assignments


def _plusplus_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ D^2 seeding."""
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]), dtype=X.dtype)
    centroids[0] = X[rng.integers(n)]
    d2 = np.einsum("ij,ij->i", X - centroids[0], X - centroids[0])
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centroids[j] = X[rng.integers(n)]
            continue
        centroids[j] = X[rng.choice(n, p=d2 / total)]
        step = np.einsum("ij,ij->i", X - centroids[j], X - centroids[j])
        np.minimum(d2, step, out=d2)
    return centroids


def kmeans(matrix: np.ndarray, k: int, seed: int, max_iters: int = 300, tol: float = 1e-6) -> KmeansResult:
    """Cluster rows into k groups minimizing within-cluster sum of squared distances.

    k-means++ seeding from `seed`, then Lloyd iterations until the largest
    squared centroid movement drops below `tol` or `max_iters` is reached.
    Clusters that empty out are reseeded to the point farthest from its
    assigned centroid. Deterministic per seed.
    """
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] < 1:
        raise ValueError("matrix must be 2-D and non-empty")
    n = matrix.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise KTooLarge(f"k={k} exceeds n_rows={n}")

    X = np.ascontiguousarray(matrix, dtype=np.float64 if matrix.size <= _F64_LIMIT else np.float32)
    rng = np.random.default_rng(seed)
    centroids = _plusplus_init(X, k, rng)

    history: list = []
    iterations = 0
    for _ in range(max_iters):
        iterations += 1
        assignments, d2min = _assign(X, centroids)
        history.append(float(d2min.sum()))

        new_centroids = np.empty_like(centroids)
        counts = np.bincount(assignments, minlength=k)
        for j in range(k):
            if counts[j] > 0:
                new_centroids[j] = X[assignments == j].mean(axis=0)

        empties = np.flatnonzero(counts == 0)
        if empties.size:
            # Reseed each empty cluster to the current farthest point.
            farthest_pool = d2min.copy()
            for j in empties:
                target = int(np.argmax(farthest_pool))
                new_centroids[j] = X[target]
                farthest_pool[target] = -np.inf

        movement = float(np.max(np.einsum("ij,ij->i", new_centroids - centroids, new_centroids - centroids)))
        centroids = new_centroids
        if movement < tol:
            break

    assignments, d2min = _assign(X, centroids)
    inertia = float(d2min.sum())
    history.append(inertia)
    return KmeansResult(
        centroids=centroids.astype(np.float64),
        assignments=assignments,
        inertia=inertia,
        iterations_run=iterations,
        inertia_history=history,
    )
