"""
Mini-batch SGD training loop.

The loop is loss-agnostic: every batch goes through forward, the loss spec's
`batch_loss_and_grads` at the softmax output, backward and one SGD step.
Batch order comes from a per-epoch seed derived from (seed, epoch).
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from src.models.datasets import Dataset
from src.models.errors import TrainingDivergenceError, ValidationError
from src.models.losses import LossSpec, WeightedCrossEntropySpec
from src.models.network import BaseNetwork, backward_from_cache, forward, forward_cache, sgd_step
from src.models.schedules import LrSchedule, ScheduleKind, lr_at
from src.models.seeding import derive_seed

logger = logging.getLogger(__name__)

EpochCallback = Callable[[int, BaseNetwork, float], None]


@dataclass(frozen=True)
class TrainSettings:
    lr0: float = 0.1
    schedule: ScheduleKind = ScheduleKind.STEP
    batch_size: int = 64
    cycles: int = 1

    def __post_init__(self):
        try:
            object.__setattr__(self, "schedule", ScheduleKind(self.schedule))
        except ValueError:
            raise ValidationError(f"Unknown schedule {self.schedule!r}; expected step or cosine_cyclic")
        if not self.lr0 > 0:
            raise ValidationError(f"lr0 must be positive, got {self.lr0}")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be positive, got {self.batch_size}")
        if self.cycles < 1:
            raise ValidationError(f"cycles must be positive, got {self.cycles}")

    def make_schedule(self, total_epochs: int, cycles: Optional[int] = None,
                      kind: Optional[ScheduleKind] = None) -> LrSchedule:
        return LrSchedule(kind or self.schedule, self.lr0, total_epochs,
                          self.cycles if cycles is None else cycles)


def train_epochs(net: BaseNetwork, dataset: Dataset, sample_weights: Optional[np.ndarray],
                 loss_spec: Optional[LossSpec], schedule: LrSchedule, epochs: int,
                 batch_size: int, seed: int, history: Optional[List[float]] = None,
                 on_epoch: Optional[EpochCallback] = None) -> BaseNetwork:
    """Train `net` for `epochs` epochs and return the trained network.

    Args:
        net: Starting network (not modified)
        dataset: Training data
        sample_weights: Normalized per-sample weights for a weighted cross-entropy
            loss; only valid without `loss_spec`
        loss_spec: Loss evaluated at the softmax output, carrying its own weights
        schedule: Learning rate per epoch (epoch e uses lr_at(schedule, e))
        epochs: Number of epochs, at most schedule.total_epochs
        batch_size: Mini-batch size (the last batch of an epoch may be smaller)
        seed: Shuffle seed of this run
        history: Receives the mean training loss of every epoch
        on_epoch: Called as on_epoch(epoch, net, mean_loss) after every epoch

    Returns:
        The trained network
    """
    n = dataset.n_samples
    if n == 0:
        raise ValidationError("Cannot train on an empty dataset")
    if epochs < 0:
        raise ValidationError(f"epochs must be non-negative, got {epochs}")
    if batch_size < 1:
        raise ValidationError(f"batch_size must be positive, got {batch_size}")
    if loss_spec is None:
        if sample_weights is None:
            loss_spec = WeightedCrossEntropySpec.uniform(n)
        else:
            if len(sample_weights) != n:
                raise ValidationError(f"Expected {n} sample weights, got {len(sample_weights)}")
            loss_spec = WeightedCrossEntropySpec(sample_weights)
    elif sample_weights is not None:
        raise ValidationError("Pass sample_weights or loss_spec, not both; loss_spec carries its own weights")
    if epochs > 0 and epochs > schedule.total_epochs:
        raise ValidationError(f"{epochs} epochs exceed the schedule's {schedule.total_epochs} epochs")

    features, labels = dataset.features, dataset.labels
    for epoch in range(epochs):
        lr = lr_at(schedule, epoch)
        order = np.random.default_rng(derive_seed(seed, epoch)).permutation(n)
        total_loss = 0.0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            cache = forward_cache(net, features[idx])
            loss, output_grads = loss_spec.batch_loss_and_grads(cache.probs, labels[idx], idx)
            if not np.isfinite(loss):
                raise TrainingDivergenceError(f"Non-finite loss {loss}", epoch=epoch)
            grads = backward_from_cache(net, cache, output_grads / len(idx))
            net = sgd_step(net, grads, lr, epoch=epoch)
            total_loss += loss * len(idx)
        mean_loss = total_loss / n
        logger.debug(f"epoch {epoch}: lr={lr:.6g} loss={mean_loss:.6f}")
        if history is not None:
            history.append(mean_loss)
        if on_epoch is not None:
            on_epoch(epoch, net, mean_loss)
    return net


def fit_network(net: BaseNetwork, dataset: Dataset, loss_spec: Optional[LossSpec],
                settings: TrainSettings, epochs: int, seed: int,
                history: Optional[List[float]] = None,
                on_epoch: Optional[EpochCallback] = None) -> BaseNetwork:
    """`train_epochs` with a schedule spanning exactly `epochs` epochs."""
    if epochs == 0:
        return net
    return train_epochs(net, dataset, None, loss_spec, settings.make_schedule(epochs), epochs,
                        settings.batch_size, seed, history=history, on_epoch=on_epoch)


def predict_proba(net: BaseNetwork, dataset: Dataset) -> np.ndarray:
    return forward(net, dataset.features)


def accuracy(probs: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of rows whose argmax (lowest index on ties) equals the label."""
    probs = np.asarray(probs)
    labels = np.asarray(labels)
    if probs.ndim != 2 or probs.shape[0] != labels.shape[0]:
        raise ValidationError(f"Predictions {probs.shape} do not match {labels.shape[0]} labels")
    return float(np.mean(np.argmax(probs, axis=1) == labels))
