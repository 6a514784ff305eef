"""
Baseline ensemble trainers.

Every trainer returns an `Ensemble`, so baselines share persistence and
evaluation with the diversity-driven pipeline. Member t always starts from
`member_seed(seed, t)` and shuffles with `train_seed(seed, t)`.
"""

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from src.models.data_logger import RoundLogger
from src.models.datasets import Dataset
from src.models.ensemble import Ensemble, Member, RoundRecord, combine_soft_targets
from src.models.errors import TrainingDivergenceError, ValidationError
from src.models.losses import SoftTargetSpec, WeightedCrossEntropySpec
from src.models.metrics import amb_nc, correctness
from src.models.network import Architecture, init_network
from src.models.schedules import ScheduleKind
from src.models.seeding import BOOTSTRAP_STREAM, derive_seed, fresh_seed, member_seed, train_seed
from src.models.training import TrainSettings, fit_network, predict_proba, train_epochs
from src.models.transfer import TransferSpec, transfer_init

logger = logging.getLogger(__name__)

EPS_FLOOR = 1e-10
NC_NOTE = "adaboost_nc weight update is a reconstruction (approximation) from the ambiguity term"
WEIGHTING_NOTE = "sample weights enter the loss multiplicatively; no resampling"


class BaselineMethod(str, Enum):
    SINGLE = "single"
    BAGGING = "bagging"
    ADABOOST_M1 = "adaboost_m1"
    ADABOOST_NC = "adaboost_nc"
    ADABOOST_NC_TRANSFER = "adaboost_nc_transfer"
    SNAPSHOT = "snapshot"
    BANS = "bans"


@dataclass(frozen=True)
class BaselineConfig:
    arch: Architecture
    method: BaselineMethod = BaselineMethod.SINGLE
    T: int = 5
    epochs_per_model: int = 20
    train: TrainSettings = field(default_factory=TrainSettings)
    lambda_nc: float = 2.0
    label_mix: float = 0.0
    seed: int = 0

    def __post_init__(self):
        try:
            object.__setattr__(self, "method", BaselineMethod(self.method))
        except ValueError:
            raise ValidationError(f"Unknown baseline method {self.method!r}")
        if self.T < 1:
            raise ValidationError(f"T must be at least 1, got {self.T}")
        if self.epochs_per_model < 1:
            raise ValidationError(f"epochs_per_model must be positive, got {self.epochs_per_model}")
        if not self.lambda_nc >= 0:
            raise ValidationError(f"lambda_nc must be non-negative, got {self.lambda_nc}")
        if not 0.0 <= self.label_mix <= 1.0:
            raise ValidationError(f"label_mix must lie in [0, 1], got {self.label_mix}")
        if self.seed < 0:
            raise ValidationError(f"seed must be non-negative, got {self.seed}")


def _check_fit(dataset: Dataset, arch: Architecture) -> None:
    if arch.n_inputs != dataset.n_features or arch.n_classes != dataset.k:
        raise ValidationError(
            f"Architecture {list(arch.layer_sizes)} does not fit {dataset.n_features} features "
            f"and {dataset.k} classes")


def _train_member(dataset: Dataset, cfg: BaselineConfig, index: int, loss_spec=None, init=None):
    losses = []
    started = time.perf_counter()
    net = init_network(cfg.arch, member_seed(cfg.seed, index)) if init is None else init
    try:
        net = fit_network(net, dataset, loss_spec, cfg.train, cfg.epochs_per_model,
                          train_seed(cfg.seed, index), history=losses)
    except TrainingDivergenceError as e:
        raise e.with_round(index)
    return net, losses, time.perf_counter() - started


def _record(ens: Ensemble, record: RoundRecord, round_logger: Optional[RoundLogger]) -> None:
    ens.rounds.append(record)
    if round_logger is not None:
        round_logger.log_round(ens.method, record)


def train_single(dataset: Dataset, cfg: BaselineConfig,
                 round_logger: Optional[RoundLogger] = None) -> Ensemble:
    _check_fit(dataset, cfg.arch)
    ens = Ensemble(method=BaselineMethod.SINGLE.value, T=1)
    net, losses, seconds = _train_member(dataset, cfg, 1)
    ens.members.append(Member(net, 1.0, 1, member_seed(cfg.seed, 1)))
    _record(ens, RoundRecord(1, 1.0, False, cfg.epochs_per_model, losses, seconds), round_logger)
    return ens


def bootstrap_indices(n: int, seed: int) -> np.ndarray:
    """n indices drawn uniformly with replacement."""
    if n < 1:
        raise ValidationError(f"Cannot bootstrap {n} samples")
    return np.random.default_rng(seed).integers(0, n, n)


def train_bagging(dataset: Dataset, cfg: BaselineConfig,
                  round_logger: Optional[RoundLogger] = None) -> Ensemble:
    _check_fit(dataset, cfg.arch)
    ens = Ensemble(method=BaselineMethod.BAGGING.value, T=cfg.T)
    for t in range(1, cfg.T + 1):
        idx = bootstrap_indices(dataset.n_samples, derive_seed(cfg.seed, BOOTSTRAP_STREAM, t))
        net, losses, seconds = _train_member(dataset.subset(idx), cfg, t)
        ens.members.append(Member(net, 1.0, t, member_seed(cfg.seed, t)))
        _record(ens, RoundRecord(t, 1.0, False, cfg.epochs_per_model, losses, seconds), round_logger)
        logger.info(f"bagging member {t}: {len(np.unique(idx))} unique samples")
    return ens


def adaboost_alpha(eps: float) -> float:
    """1/2 ln((1 - eps) / eps) with eps floored."""
    eps = max(eps, EPS_FLOOR)
    return 0.5 * float(np.log((1.0 - eps) / eps))


def _train_adaboost(dataset: Dataset, cfg: BaselineConfig, method: BaselineMethod,
                    round_logger: Optional[RoundLogger]) -> Ensemble:
    _check_fit(dataset, cfg.arch)
    ens = Ensemble(method=method.value, T=cfg.T)
    ens.notes.append(WEIGHTING_NOTE)
    penalized = method in (BaselineMethod.ADABOOST_NC, BaselineMethod.ADABOOST_NC_TRANSFER)
    transferred = method is BaselineMethod.ADABOOST_NC_TRANSFER
    if penalized:
        ens.notes.append(NC_NOTE)
        logger.warning(NC_NOTE)

    labels = dataset.labels
    weights = np.full(dataset.n_samples, 1.0 / dataset.n_samples)
    member_probs, member_correct = [], []
    fallback = previous = None
    for t in range(1, cfg.T + 1):
        init = None
        if transferred and previous is not None:
            init = transfer_init(previous, TransferSpec(1.0, fresh_seed(cfg.seed, t)))
        net, losses, seconds = _train_member(dataset, cfg, t, WeightedCrossEntropySpec(weights), init)
        previous = net
        probs = predict_proba(net, dataset)
        wrong = np.argmax(probs, axis=1) != labels
        eps = float(np.sum(weights[wrong]))
        if fallback is None:
            fallback = net
        if eps >= 0.5:
            ens.skipped_rounds.append(t)
            logger.warning(f"{method.value} round {t}: weighted error {eps:.4f} >= 0.5, skipped")
            _record(ens, RoundRecord(t, 0.0, True, cfg.epochs_per_model, losses, seconds,
                                     weights=weights.copy()), round_logger)
            continue

        alpha = adaboost_alpha(eps)
        ens.members.append(Member(net, alpha, t, member_seed(cfg.seed, t)))
        updated = weights * np.exp(alpha * np.where(wrong, 1.0, -1.0))
        if penalized:
            member_probs.append(probs)
            member_correct.append(correctness(probs, labels))
            ensemble_correct = correctness(combine_soft_targets(member_probs, ens.alphas), labels)
            amb = amb_nc(ensemble_correct, member_correct, ens.alphas)
            updated = updated * (1.0 + np.abs(amb)) ** cfg.lambda_nc
        weights = updated / updated.sum()
        logger.info(f"{method.value} round {t}: eps={eps:.4f} alpha={alpha:.6f}")
        _record(ens, RoundRecord(t, alpha, False, cfg.epochs_per_model, losses, seconds,
                                 weights=weights.copy()), round_logger)

    if not ens.members:
        logger.warning(f"Every {method.value} round was skipped; keeping the first member with alpha=1")
        ens.members.append(Member(fallback, 1.0, 1, member_seed(cfg.seed, 1)))
    return ens


def train_adaboost_m1(dataset: Dataset, cfg: BaselineConfig,
                      round_logger: Optional[RoundLogger] = None) -> Ensemble:
    return _train_adaboost(dataset, cfg, BaselineMethod.ADABOOST_M1, round_logger)


def train_adaboost_nc(dataset: Dataset, cfg: BaselineConfig,
                      round_logger: Optional[RoundLogger] = None) -> Ensemble:
    """AdaBoost.M1 weights times (1 + |amb|) ** lambda_nc, members trained from scratch."""
    return _train_adaboost(dataset, cfg, BaselineMethod.ADABOOST_NC, round_logger)


def train_adaboost_nc_transfer(dataset: Dataset, cfg: BaselineConfig,
                               round_logger: Optional[RoundLogger] = None) -> Ensemble:
    """AdaBoost.NC where member t >= 2 starts as a full copy of member t - 1, skipped or not."""
    return _train_adaboost(dataset, cfg, BaselineMethod.ADABOOST_NC_TRANSFER, round_logger)


def train_snapshot(dataset: Dataset, cfg: BaselineConfig,
                   round_logger: Optional[RoundLogger] = None) -> Ensemble:
    """One cosine-cyclic run of T cycles; the network at the end of every cycle becomes a member."""
    _check_fit(dataset, cfg.arch)
    ens = Ensemble(method=BaselineMethod.SNAPSHOT.value, T=cfg.T)
    total = cfg.T * cfg.epochs_per_model
    schedule = cfg.train.make_schedule(total, cycles=cfg.T, kind=ScheduleKind.COSINE_CYCLIC)
    cycle_losses = []
    started = [time.perf_counter()]

    def capture(epoch, net, loss):
        cycle_losses.append(loss)
        if schedule.is_cycle_end(epoch):
            cycle = len(ens.members) + 1
            ens.members.append(Member(net.copy(), 1.0, cycle, member_seed(cfg.seed, 1)))
            now = time.perf_counter()
            _record(ens, RoundRecord(cycle, 1.0, False, len(cycle_losses), list(cycle_losses),
                                     now - started[0]), round_logger)
            logger.info(f"snapshot {cycle} captured at epoch {epoch}")
            cycle_losses.clear()
            started[0] = now

    net = init_network(cfg.arch, member_seed(cfg.seed, 1))
    try:
        train_epochs(net, dataset, None, None, schedule, total, cfg.train.batch_size,
                     train_seed(cfg.seed, 1), on_epoch=capture)
    except TrainingDivergenceError as e:
        raise e.with_round(e.epoch // schedule.cycle_length + 1 if e.epoch is not None else len(ens.members) + 1)
    return ens


def train_bans(dataset: Dataset, cfg: BaselineConfig,
               round_logger: Optional[RoundLogger] = None) -> Ensemble:
    """Born-again generations: generation g >= 2 matches the frozen soft targets of generation g - 1."""
    _check_fit(dataset, cfg.arch)
    ens = Ensemble(method=BaselineMethod.BANS.value, T=cfg.T)
    teacher_probs = None
    for g in range(1, cfg.T + 1):
        spec = None if teacher_probs is None else SoftTargetSpec(teacher_probs, cfg.label_mix)
        net, losses, seconds = _train_member(dataset, cfg, g, spec)
        ens.members.append(Member(net, 1.0, g, member_seed(cfg.seed, g)))
        _record(ens, RoundRecord(g, 1.0, False, cfg.epochs_per_model, losses, seconds), round_logger)
        teacher_probs = predict_proba(net, dataset)
    return ens


TRAINERS = {
    BaselineMethod.SINGLE: train_single,
    BaselineMethod.BAGGING: train_bagging,
    BaselineMethod.ADABOOST_M1: train_adaboost_m1,
    BaselineMethod.ADABOOST_NC: train_adaboost_nc,
    BaselineMethod.ADABOOST_NC_TRANSFER: train_adaboost_nc_transfer,
    BaselineMethod.SNAPSHOT: train_snapshot,
    BaselineMethod.BANS: train_bans,
}


def train_baseline(dataset: Dataset, cfg: BaselineConfig,
                   round_logger: Optional[RoundLogger] = None) -> Ensemble:
    return TRAINERS[cfg.method](dataset, cfg, round_logger)
