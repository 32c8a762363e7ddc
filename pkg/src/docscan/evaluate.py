"""Hungarian cluster-to-label matching, clustering accuracy, baselines, run aggregation."""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientRuns, IoFailure


def hungarian(cost: np.ndarray) -> np.ndarray:
    """Minimum-cost perfect assignment of a square cost matrix.

    Returns perm with perm[row] = column, minimizing sum(cost[row, perm[row]]).
    Shortest-augmenting-path formulation with row/column potentials, O(n^3).
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError(f"cost matrix must be square, got {cost.shape}")
    if not np.isfinite(cost).all():
        raise ValueError("cost matrix must be finite")
    n = cost.shape[0]

    # 1-based arrays; p[j] = row matched to column j, column 0 is virtual.
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = np.inf
            j1 = 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1

    perm = np.empty(n, dtype=np.int64)
    for j in range(1, n + 1):
        perm[p[j] - 1] = j - 1
    return perm


def clustering_accuracy(pred: np.ndarray, gold: np.ndarray):
    """Accuracy under the optimal cluster-to-label bijection.

    Builds the contingency table, solves the assignment on its negation, and
    scores the relabeled predictions. Returns (accuracy, mapping) where
    mapping[cluster_id] = label_id.
    """
    pred = np.asarray(pred, dtype=np.int64)
    gold = np.asarray(gold, dtype=np.int64)
    if pred.shape != gold.shape or pred.ndim != 1:
        raise ValueError(f"pred and gold must be equal-length vectors, got {pred.shape} vs {gold.shape}")
    if pred.min() < 0 or gold.min() < 0:
        raise ValueError("ids must be non-negative")

    c = int(max(pred.max(), gold.max())) + 1
    counts = np.zeros((c, c), dtype=np.int64)
    np.add.at(counts, (pred, gold), 1)
    mapping = hungarian(-counts.astype(np.float64))
    correct = counts[np.arange(c), mapping].sum()
    return float(correct / len(pred)), mapping


@dataclass
class EvalReport:
    """Per-seed accuracies with their mean, 95% CI half-width, and per-run mappings."""

    per_seed_accuracies: list[float]
    mean: float
    ci95_halfwidth: float | None
    mapping: list[list[int]]

    def to_dict(self) -> dict:
        return {
            "per_seed_accuracies": self.per_seed_accuracies,
            "mean": self.mean,
            "ci95_halfwidth": self.ci95_halfwidth,
            "mapping": self.mapping,
        }


def aggregate_runs(accuracies) -> tuple[float, float]:
    """Mean and 1.96 * s / sqrt(n) with s the sample (n-1) standard deviation."""
    values = [float(a) for a in accuracies]
    if len(values) < 2:
        raise InsufficientRuns(f"need at least 2 runs, got {len(values)}")
    mean = statistics.fmean(values)
    halfwidth = 1.96 * statistics.stdev(values) / math.sqrt(len(values))
    return mean, halfwidth


def make_report(accuracies, mappings) -> EvalReport:
    """Bundle run accuracies into a report; a single run gets no half-width."""
    values = [float(a) for a in accuracies]
    if len(values) >= 2:
        mean, halfwidth = aggregate_runs(values)
    else:
        mean, halfwidth = values[0], None
    return EvalReport(
        per_seed_accuracies=values,
        mean=mean,
        ci95_halfwidth=halfwidth,
        mapping=[[int(x) for x in m] for m in mappings],
    )


def random_baseline(gold: np.ndarray, seed: int, runs: int = 10) -> EvalReport:
    """Uniform-random cluster assignments scored like any other prediction."""
    gold = np.asarray(gold, dtype=np.int64)
    if runs < 2:
        raise ValueError("runs must be >= 2")
    c = int(gold.max()) + 1
    accuracies, mappings = [], []
    for r in range(runs):
        rng = np.random.default_rng(seed + r)
        pred = rng.integers(0, c, size=len(gold))
        accuracy, mapping = clustering_accuracy(pred, gold)
        accuracies.append(accuracy)
        mappings.append(mapping)
    return make_report(accuracies, mappings)


def save_report(report: EvalReport, path, **extra) -> None:
    """Report JSON; extra key/value pairs (experiment, dataset, ...) are merged in."""
    payload = {**report.to_dict(), **extra}
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
