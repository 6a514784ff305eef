"""
Layer-wise knowledge transfer and the fold-based search for beta.

A student copies the first floor(beta * L) weight layers of its teacher,
counted from the input, and re-initializes the rest. Every layer stays
trainable afterwards.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from src.models.datasets import Dataset, fold_split
from src.models.errors import ValidationError
from src.models.network import Architecture, BaseNetwork, init_network
from src.models.seeding import fresh_seed, member_seed, train_seed
from src.models.training import TrainSettings, accuracy, fit_network, predict_proba, train_epochs

logger = logging.getLogger(__name__)

# Seed index of the probe students; keeps them apart from the ensemble rounds
PROBE_INDEX = 0


@dataclass(frozen=True)
class TransferSpec:
    beta: float
    fresh_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValidationError(f"beta must lie in [0, 1], got {self.beta}")


@dataclass(frozen=True)
class BetaSearchConfig:
    n_folds: int = 6
    probe_epochs: int = 5
    beta_step: float = 0.1
    gap_tolerance: float = 0.01
    teacher_epochs: int = 20
    student_epochs: int = 10

    def __post_init__(self):
        if self.n_folds < 3:
            raise ValidationError(f"n_folds must be at least 3, got {self.n_folds}")
        if not 0 < self.beta_step <= 1:
            raise ValidationError(f"beta_step must lie in (0, 1], got {self.beta_step}")
        if self.probe_epochs < 0:
            raise ValidationError(f"probe_epochs must be non-negative, got {self.probe_epochs}")
        if not self.gap_tolerance >= 0:
            raise ValidationError(f"gap_tolerance must be non-negative, got {self.gap_tolerance}")
        if self.teacher_epochs < 1 or self.student_epochs < 1:
            raise ValidationError("teacher_epochs and student_epochs must be positive")


@dataclass(frozen=True)
class BetaProbe:
    beta: float
    acc_seen: float
    acc_unseen: float

    @property
    def gap(self) -> float:
        return abs(self.acc_seen - self.acc_unseen)

    def to_dict(self) -> dict:
        return {"beta": self.beta, "acc_seen": self.acc_seen,
                "acc_unseen": self.acc_unseen, "gap": self.gap}


@dataclass
class BetaSearchResult:
    beta: float
    trace: List[BetaProbe] = field(default_factory=list)
    teacher: Optional[BaseNetwork] = None
    teacher_losses: List[float] = field(default_factory=list)


@dataclass(frozen=True)
class ProbeFolds:
    """Student training folds 1..n-2, teacher-seen fold n-1 and unseen fold n."""

    train: Dataset
    seen: Dataset
    unseen: Dataset
    teacher_train: Dataset


def n_copied_layers(beta: float, n_layers: int) -> int:
    # 1e-9 keeps e.g. 0.7 * 10 from flooring to 6
    return min(n_layers, int(math.floor(beta * n_layers + 1e-9)))


def transfer_init(teacher: BaseNetwork, spec: TransferSpec,
                  arch: Optional[Architecture] = None) -> BaseNetwork:
    """Student of `teacher`: copied lower layers, fresh upper layers from `spec.fresh_seed`."""
    arch = teacher.arch if arch is None else arch
    if arch != teacher.arch:
        raise ValidationError(f"Student architecture {arch.to_dict()} differs from teacher {teacher.arch.to_dict()}")
    student = init_network(arch, spec.fresh_seed)
    for i in range(n_copied_layers(spec.beta, arch.n_layers)):
        student.weights[i] = teacher.weights[i].copy()
        student.biases[i] = teacher.biases[i].copy()
    return student


def beta_candidates(step: float) -> List[float]:
    """1, 1 - step, ... down to 0; 0 is always probed last."""
    candidates = []
    i = 0
    while 1.0 - i * step > 1e-12:
        candidates.append(round(1.0 - i * step, 12))
        i += 1
    candidates.append(0.0)
    return candidates


def prepare_folds(dataset: Dataset, n_folds: int, seed: int) -> ProbeFolds:
    folds = fold_split(dataset, n_folds, seed)
    if any(len(f) == 0 for f in folds.fold_indices):
        raise ValidationError(f"Dataset of {dataset.n_samples} samples leaves an empty fold")
    n = folds.n_folds
    return ProbeFolds(
        train=dataset.subset(folds.indices(range(n - 2))),
        seen=dataset.subset(folds.fold_indices[n - 2]),
        unseen=dataset.subset(folds.fold_indices[n - 1]),
        teacher_train=dataset.subset(folds.indices(range(n - 1))),
    )


def probe_gap(teacher: BaseNetwork, beta: float, folds: ProbeFolds, cfg: BetaSearchConfig,
              train_cfg: TrainSettings, seed: int) -> Tuple[float, float]:
    """Mean accuracy of a transferred student over the first probe epochs on the seen and unseen folds."""
    student = transfer_init(teacher, TransferSpec(beta, fresh_seed(seed, PROBE_INDEX)))
    if cfg.probe_epochs == 0:
        return (accuracy(predict_proba(student, folds.seen), folds.seen.labels),
                accuracy(predict_proba(student, folds.unseen), folds.unseen.labels))

    seen, unseen = [], []

    def record(epoch, net, loss):
        seen.append(accuracy(predict_proba(net, folds.seen), folds.seen.labels))
        unseen.append(accuracy(predict_proba(net, folds.unseen), folds.unseen.labels))

    schedule = train_cfg.make_schedule(max(cfg.student_epochs, cfg.probe_epochs))
    train_epochs(student, folds.train, None, None, schedule, cfg.probe_epochs,
                 train_cfg.batch_size, train_seed(seed, PROBE_INDEX), on_epoch=record)
    return float(sum(seen) / len(seen)), float(sum(unseen) / len(unseen))


def train_teacher(folds: ProbeFolds, arch: Architecture, cfg: BetaSearchConfig,
                  train_cfg: TrainSettings, seed: int,
                  history: Optional[List[float]] = None) -> BaseNetwork:
    """The first base model, trained on folds 1..n-1."""
    net = init_network(arch, member_seed(seed, 1))
    return fit_network(net, folds.teacher_train, None, train_cfg, cfg.teacher_epochs,
                       train_seed(seed, 1), history=history)


def beta_search(dataset: Dataset, arch: Architecture, cfg: BetaSearchConfig,
                train_cfg: TrainSettings, seed: int = 0) -> BetaSearchResult:
    """Scan beta = 1, 1 - step, ..., 0 and keep the first one whose accuracy gap is within tolerance.

    Args:
        dataset: Training data, split into cfg.n_folds folds
        arch: Architecture shared by teacher and students
        cfg: Fold and probe settings
        train_cfg: Learning rate, schedule and batch size
        seed: Run seed

    Returns:
        BetaSearchResult with the chosen beta (0 when nothing qualifies), one trace
        row per probed candidate and the trained teacher
    """
    folds = prepare_folds(dataset, cfg.n_folds, seed)
    teacher_losses = []
    teacher = train_teacher(folds, arch, cfg, train_cfg, seed, history=teacher_losses)
    trace = []
    for beta in beta_candidates(cfg.beta_step):
        acc_seen, acc_unseen = probe_gap(teacher, beta, folds, cfg, train_cfg, seed)
        probe = BetaProbe(beta, acc_seen, acc_unseen)
        trace.append(probe)
        logger.info(f"beta={beta:g}: seen={acc_seen:.4f} unseen={acc_unseen:.4f} gap={probe.gap:.4f}")
        if probe.gap <= cfg.gap_tolerance + 1e-12:
            return BetaSearchResult(beta, trace, teacher, teacher_losses)
    logger.warning("No beta candidate met the gap tolerance, using beta=0")
    return BetaSearchResult(0.0, trace, teacher, teacher_losses)
