"""
Loss functions evaluated at the softmax output.

Every loss spec exposes `batch_loss_and_grads(h_batch, y_batch, indices)`
returning the mean loss over the batch and dL/dh per sample; the network
engine turns dL/dh into parameter gradients.

Diversity-driven loss on one sample (weighted by W_{t-1}(x)):

    L = w * ( -sum_c y_c ln h_c  -  gamma * ||h - H_prev||_2 )

    dL/dh_c = w * ( -y_c / h_c  -  gamma * (h_c - H_c) / ||h - H_prev||_2 )

Sample weights are normalized to sum to 1; inside the batch loss they are
used as N * W_i so that uniform weights give every sample weight 1.
"""

from dataclasses import dataclass
from typing import Protocol, Tuple

import numpy as np

from src.models.datasets import one_hot
from src.models.errors import ValidationError

PROB_FLOOR = 1e-12
NORM_FLOOR = 1e-12


class LossSpec(Protocol):
    def batch_loss_and_grads(self, h_batch: np.ndarray, y_batch: np.ndarray,
                             indices: np.ndarray) -> Tuple[float, np.ndarray]:
        ...


def _check_probability_rows(name: str, rows: np.ndarray, atol: float = 1e-6) -> None:
    if rows.ndim != 2:
        raise ValidationError(f"{name} must be a 2-D matrix, got shape {rows.shape}")
    if np.any(rows < -atol) or not np.allclose(rows.sum(axis=1), 1.0, atol=atol):
        raise ValidationError(f"{name} rows must be probability vectors")


def _check_sample_weights(weights: np.ndarray) -> None:
    if weights.ndim != 1 or weights.size == 0:
        raise ValidationError(f"Sample weights must be a non-empty vector, got shape {weights.shape}")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
        raise ValidationError("Sample weights must be non-negative and sum to 1")


def _one_hot_rows(labels, k: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ValidationError(f"Labels must be a vector, got shape {labels.shape}")
    return one_hot(labels, k)


def _edde_terms(h: np.ndarray, h_prev: np.ndarray, y: np.ndarray, w: np.ndarray,
                gamma: float, norm_floor: float) -> Tuple[np.ndarray, np.ndarray]:
    """Per-row losses and dL/dh. Scalar and batch entry points share this kernel."""
    h_safe = np.maximum(h, PROB_FLOOR)
    cross_entropy = -np.sum(y * np.log(h_safe), axis=1)
    diff = h - h_prev
    dist = np.sqrt(np.sum(diff * diff, axis=1))
    losses = w * (cross_entropy - gamma * dist)

    active = dist >= norm_floor
    penalty = np.zeros_like(diff)
    penalty[active] = diff[active] / np.maximum(dist[active], norm_floor)[:, None]
    grads = w[:, None] * (-y / h_safe - gamma * penalty)
    return losses, grads


def _check_vectors(h, h_prev, y) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    h = np.asarray(h, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if h.ndim != 1 or h.shape != h_prev.shape or h.shape != y.shape:
        raise ValidationError(
            f"h, H_prev and y must be vectors of the same length, got {h.shape}, {h_prev.shape}, {y.shape}")
    return h, h_prev, y


def edde_loss(h, H_prev, y, w: float, gamma: float) -> float:
    """Weighted diversity-driven loss on one sample. Can be negative for large gamma."""
    h, H_prev, y = _check_vectors(h, H_prev, y)
    losses, _ = _edde_terms(h[None], H_prev[None], y[None], np.array([w], dtype=np.float64),
                            gamma, NORM_FLOOR)
    return float(losses[0])


def edde_loss_grad(h, H_prev, y, w: float, gamma: float, norm_floor: float = NORM_FLOOR) -> np.ndarray:
    """dL/dh of `edde_loss`; the penalty gradient is 0 where h == H_prev."""
    h, H_prev, y = _check_vectors(h, H_prev, y)
    _, grads = _edde_terms(h[None], H_prev[None], y[None], np.array([w], dtype=np.float64),
                           gamma, norm_floor)
    return grads[0]


def cross_entropy(h, y, w: float = 1.0) -> float:
    """Weighted cross-entropy, the gamma = 0 case of `edde_loss`."""
    h = np.asarray(h, dtype=np.float64)
    return float(-w * np.sum(np.asarray(y) * np.log(np.maximum(h, PROB_FLOOR))))


def _select(indices, n_rows: int) -> np.ndarray:
    indices = np.asarray(indices)
    if indices.ndim != 1 or not np.issubdtype(indices.dtype, np.integer):
        raise ValidationError("Batch indices must be a vector of integers")
    if np.any(indices < 0) or np.any(indices >= n_rows):
        raise ValidationError(f"Batch index out of range [0, {n_rows})")
    return indices


@dataclass(frozen=True)
class EddeLossSpec:
    """Diversity-driven loss for one boosting round (frozen for the round)."""

    gamma: float
    ensemble_targets: np.ndarray
    sample_weights: np.ndarray
    norm_floor: float = NORM_FLOOR

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValidationError(f"gamma must be non-negative, got {self.gamma}")
        if not self.norm_floor > 0:
            raise ValidationError(f"norm_floor must be positive, got {self.norm_floor}")
        targets = np.array(self.ensemble_targets, dtype=np.float64)
        weights = np.array(self.sample_weights, dtype=np.float64)
        _check_probability_rows("ensemble_targets", targets)
        _check_sample_weights(weights)
        if targets.shape[0] != weights.size:
            raise ValidationError(
                f"ensemble_targets has {targets.shape[0]} rows but there are {weights.size} sample weights")
        targets.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "ensemble_targets", targets)
        object.__setattr__(self, "sample_weights", weights)

    def effective_weights(self, indices: np.ndarray) -> np.ndarray:
        return self.sample_weights[indices] * self.sample_weights.size

    def batch_loss_and_grads(self, h_batch, y_batch, indices) -> Tuple[float, np.ndarray]:
        indices = _select(indices, self.sample_weights.size)
        h_batch = np.asarray(h_batch, dtype=np.float64)
        y = _one_hot_rows(y_batch, self.ensemble_targets.shape[1])
        if h_batch.shape != y.shape or len(indices) != h_batch.shape[0]:
            raise ValidationError(
                f"Batch shapes disagree: h {h_batch.shape}, labels {y.shape}, indices {len(indices)}")
        losses, grads = _edde_terms(h_batch, self.ensemble_targets[indices], y,
                                    self.effective_weights(indices), self.gamma, self.norm_floor)
        return float(np.mean(losses)), grads


@dataclass(frozen=True)
class WeightedCrossEntropySpec:
    """Plain cross-entropy with per-sample weights (first round, baselines)."""

    sample_weights: np.ndarray

    def __post_init__(self):
        weights = np.array(self.sample_weights, dtype=np.float64)
        _check_sample_weights(weights)
        weights.setflags(write=False)
        object.__setattr__(self, "sample_weights", weights)

    @classmethod
    def uniform(cls, n: int) -> "WeightedCrossEntropySpec":
        return cls(np.full(n, 1.0 / n))

    def batch_loss_and_grads(self, h_batch, y_batch, indices) -> Tuple[float, np.ndarray]:
        indices = _select(indices, self.sample_weights.size)
        h_batch = np.asarray(h_batch, dtype=np.float64)
        y = _one_hot_rows(y_batch, h_batch.shape[1])
        w = self.sample_weights[indices] * self.sample_weights.size
        losses, grads = _edde_terms(h_batch, h_batch, y, w, 0.0, NORM_FLOOR)
        return float(np.mean(losses)), grads


@dataclass(frozen=True)
class SoftTargetSpec:
    """Cross-entropy against a frozen teacher's soft targets.

    With `label_mix` > 0 the target is (1 - label_mix) * teacher + label_mix * one_hot.
    """

    teacher_targets: np.ndarray
    label_mix: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.label_mix <= 1.0:
            raise ValidationError(f"label_mix must lie in [0, 1], got {self.label_mix}")
        targets = np.array(self.teacher_targets, dtype=np.float64)
        _check_probability_rows("teacher_targets", targets)
        targets.setflags(write=False)
        object.__setattr__(self, "teacher_targets", targets)

    def batch_loss_and_grads(self, h_batch, y_batch, indices) -> Tuple[float, np.ndarray]:
        indices = _select(indices, self.teacher_targets.shape[0])
        h_batch = np.asarray(h_batch, dtype=np.float64)
        q = self.teacher_targets[indices]
        if self.label_mix > 0:
            q = (1.0 - self.label_mix) * q + self.label_mix * _one_hot_rows(y_batch, q.shape[1])
        h_safe = np.maximum(h_batch, PROB_FLOOR)
        losses = -np.sum(q * np.log(h_safe), axis=1)
        return float(np.mean(losses)), -q / h_safe


def batch_loss_and_grads(spec: LossSpec, h_batch, y_batch, indices) -> Tuple[float, np.ndarray]:
    """Mean loss and per-sample dL/dh for a mini-batch."""
    return spec.batch_loss_and_grads(h_batch, y_batch, indices)
