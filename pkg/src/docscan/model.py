"""Linear softmax classifier, neighbor-consistency loss, Adam, and the training loop.

The trainable model is a single classification layer: logits = X @ W + b.
Training pulls a row's predicted distribution toward each of its mined
neighbors' distributions (negative log dot product) while an entropy term on
the batch-mean anchor distribution pushes cluster usage toward uniform.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import IoFailure, NonFiniteGradient
from .neighbors import NeighborTable

EPS = 1e-8


@dataclass
class LinearClassifier:
    """Weights (dim, C) and bias (C,); the whole model."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[1],):
            raise ValueError(f"weights {self.weights.shape} and bias {self.bias.shape} are inconsistent")
        if not (np.isfinite(self.weights).all() and np.isfinite(self.bias).all()):
            raise ValueError("model parameters must be finite")

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    @property
    def num_classes(self) -> int:
        return self.weights.shape[1]

    @property
    def param_count(self) -> int:
        return self.weights.size + self.bias.size


@dataclass
class RunConfig:
    """Hyperparameters of one training/evaluation run."""

    k_neighbors: int = 5
    entropy_weight: float = 2.0
    batch_size: int = 128
    dropout: float = 0.1
    epochs: int = 5
    # 1e-2 rather than Adam's canonical 1e-3: at desk scale (a few hundred
    # optimizer steps per run) the smaller rate cannot move the parameters far
    # enough for cluster reassignment to complete within the default epochs.
    learning_rate: float = 1e-2
    seed: int = 0

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if self.entropy_weight < 0:
            raise ValueError("entropy_weight must be >= 0")
        if not (0 <= self.dropout < 1):
            raise ValueError("dropout must be in [0, 1)")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")

    def replace(self, **overrides) -> "RunConfig":
        values = {**self.__dict__, **overrides}
        return RunConfig(**values)


def init_classifier(dim: int, num_classes: int, rng: np.random.Generator) -> LinearClassifier:
    """Fan-in uniform init in +-1/sqrt(dim) for weights, zero bias."""
    bound = 1.0 / np.sqrt(dim)
    weights = rng.uniform(-bound, bound, size=(dim, num_classes))
    return LinearClassifier(weights=weights, bias=np.zeros(num_classes))


def logits(model: LinearClassifier, rows: np.ndarray) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(rows))
    if rows.shape[1] != model.dim:
        raise ValueError(f"rows have dim {rows.shape[1]}, model expects {model.dim}")
    return rows @ model.weights + model.bias


def softmax(z: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction."""
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def forward(model: LinearClassifier, rows: np.ndarray) -> np.ndarray:
    """Softmax probability rows; each output row is non-negative and sums to 1."""
    return softmax(logits(model, rows))


def predict(model: LinearClassifier, matrix: np.ndarray) -> np.ndarray:
    """Argmax cluster id per row; ties resolve to the lowest class index."""
    return np.argmax(logits(model, matrix), axis=1).astype(np.int64)


def _check_simplex(probs: np.ndarray, name: str) -> np.ndarray:
    probs = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    if probs.shape[0] < 1:
        raise ValueError(f"{name} must have at least one row")
    sums = probs.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > 1e-4):
        worst = int(np.argmax(np.abs(sums - 1.0)))
        raise ValueError(f"{name} row {worst} is not a probability distribution (sum {sums[worst]:.6f})")
    return probs


def scan_loss(probs_anchor: np.ndarray, probs_neighbor: np.ndarray, entropy_weight: float):
    """Consistency plus entropy regularization over one batch of (anchor, neighbor) pairs.

    consistency  = -(1/b) sum_j log(<pa_j, pn_j> + eps)
    entropy_term = entropy_weight * sum_i m_i log(m_i + eps),  m = mean anchor row
    Returns (total, consistency, entropy_term); entropy_term is exactly 0 when
    the weight is 0.
    """
    pa = _check_simplex(probs_anchor, "probs_anchor")
    pn = _check_simplex(probs_neighbor, "probs_neighbor")
    if pa.shape != pn.shape:
        raise ValueError(f"anchor {pa.shape} and neighbor {pn.shape} shapes differ")

    dots = np.einsum("ij,ij->i", pa, pn)
    consistency = float(-np.mean(np.log(dots + EPS)))
    if entropy_weight == 0:
        entropy_term = 0.0
    else:
        mean_p = pa.mean(axis=0)
        entropy_term = float(entropy_weight * np.sum(mean_p * np.log(mean_p + EPS)))
    return consistency + entropy_term, consistency, entropy_term


def scan_loss_grad(probs_anchor: np.ndarray, probs_neighbor: np.ndarray, entropy_weight: float):
    """Loss parts plus analytic gradients with respect to the two logit matrices.

    Returns ((total, consistency, entropy_term), d_logits_anchor, d_logits_neighbor).
    """
    pa = _check_simplex(probs_anchor, "probs_anchor")
    pn = _check_simplex(probs_neighbor, "probs_neighbor")
    b = pa.shape[0]

    dots = np.einsum("ij,ij->i", pa, pn) + EPS
    consistency = float(-np.mean(np.log(dots)))

    grad_pa = -pn / (b * dots[:, None])
    grad_pn = -pa / (b * dots[:, None])

    if entropy_weight == 0:
        entropy_term = 0.0
    else:
        mean_p = pa.mean(axis=0)
        entropy_term = float(entropy_weight * np.sum(mean_p * np.log(mean_p + EPS)))
        # d/dm_i [m_i log(m_i+eps)] = log(m_i+eps) + m_i/(m_i+eps), spread over the batch mean
        grad_pa = grad_pa + (entropy_weight / b) * (np.log(mean_p + EPS) + mean_p / (mean_p + EPS))

    # Softmax Jacobian: dZ = P * (G - sum(G*P))
    d_za = pa * (grad_pa - np.einsum("ij,ij->i", grad_pa, pa)[:, None])
    d_zn = pn * (grad_pn - np.einsum("ij,ij->i", grad_pn, pn)[:, None])
    return (consistency + entropy_term, consistency, entropy_term), d_za, d_zn


def loss_and_param_grads(model: LinearClassifier, anchors: np.ndarray, neighbors: np.ndarray,
                         entropy_weight: float):
    """Full-batch loss and gradients with respect to weights and bias."""
    pa = softmax(logits(model, anchors))
    pn = softmax(logits(model, neighbors))
    parts, d_za, d_zn = scan_loss_grad(pa, pn, entropy_weight)
    grad_w = anchors.T @ d_za + neighbors.T @ d_zn
    grad_b = d_za.sum(axis=0) + d_zn.sum(axis=0)
    return parts, grad_w, grad_b


class AdamOptimizer:
    """Adam with bias correction; beta1=0.9, beta2=0.999, eps=1e-8."""

    def __init__(self, param_shapes, learning_rate: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros(s) for s in param_shapes]
        self.v = [np.zeros(s) for s in param_shapes]

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        """One update, in place. Raises NonFiniteGradient on NaN/Inf gradients."""
        for g in grads:
            if not np.isfinite(g).all():
                raise NonFiniteGradient("gradient contains NaN or Inf")
        self.t += 1
        correct1 = 1.0 - self.beta1 ** self.t
        correct2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / correct1) / (np.sqrt(v / correct2) + self.eps)


def _dropout(rows: np.ndarray, p: float, rng: np.random.Generator) -> np.ndarray:
    """Inverted dropout: zero features with probability p, scale the rest by 1/(1-p)."""
    if p == 0.0:
        return rows
    keep = rng.random(rows.shape) >= p
    return rows * (keep / (1.0 - p))


def train(matrix: np.ndarray, table: NeighborTable, num_classes: int, cfg: RunConfig):
    """Fit the classifier on all (row, neighbor) pairs with the consistency+entropy loss.

    The pair set is every row paired with each of its cfg.k_neighbors nearest
    neighbors, reshuffled each epoch; dropout acts on the input rows at train
    time only. Deterministic for a given cfg (including cfg.seed).

    Returns (model, trace) where trace is a list of
    (epoch, step, total, consistency, entropy) tuples, one per optimizer step.
    """
    matrix = np.asarray(matrix)
    n, dim = matrix.shape
    if num_classes < 2:
        raise ValueError("num_classes must be >= 2")
    if table.n_rows != n:
        raise ValueError(f"neighbor table has {table.n_rows} rows, matrix has {n}")
    if cfg.k_neighbors > table.k:
        raise ValueError(f"cfg.k_neighbors={cfg.k_neighbors} exceeds table k={table.k}")

    anchor_idx = np.repeat(np.arange(n), cfg.k_neighbors)
    neighbor_idx = table.indices[:, : cfg.k_neighbors].ravel()
    n_pairs = anchor_idx.size

    rng = np.random.default_rng(cfg.seed)
    model = init_classifier(dim, num_classes, rng)
    optimizer = AdamOptimizer([model.weights.shape, model.bias.shape], cfg.learning_rate)

    trace = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n_pairs)
        for step, start in enumerate(range(0, n_pairs, cfg.batch_size)):
            batch = order[start : start + cfg.batch_size]
            anchors = _dropout(matrix[anchor_idx[batch]], cfg.dropout, rng)
            neighbors = _dropout(matrix[neighbor_idx[batch]], cfg.dropout, rng)
            parts, grad_w, grad_b = loss_and_param_grads(model, anchors, neighbors, cfg.entropy_weight)
            optimizer.step([model.weights, model.bias], [grad_w, grad_b])
            trace.append((epoch, step, parts[0], parts[1], parts[2]))

    if not (np.isfinite(model.weights).all() and np.isfinite(model.bias).all()):
        raise NonFiniteGradient("training produced non-finite parameters")
    return model, trace


def save_model(model: LinearClassifier, path) -> None:
    """JSON with dim, num_classes, row-major weights and bias; floats round-trip exactly."""
    payload = {
        "dim": model.dim,
        "num_classes": model.num_classes,
        "weights": model.weights.ravel().tolist(),
        "bias": model.bias.tolist(),
    }
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_model(path) -> LinearClassifier:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    dim, c = payload["dim"], payload["num_classes"]
    weights = np.array(payload["weights"], dtype=np.float64).reshape(dim, c)
    return LinearClassifier(weights=weights, bias=np.array(payload["bias"], dtype=np.float64))


def save_loss_trace(trace, path) -> None:
    """CSV with columns epoch,step,total,consistency,entropy."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "step", "total", "consistency", "entropy"])
            for epoch, step, total, consistency, entropy in trace:
                writer.writerow([epoch, step, repr(total), repr(consistency), repr(entropy)])
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
