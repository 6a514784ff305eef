"""
Diversity-driven boosting pipeline.

Round 1 trains h_1 with weighted cross-entropy under uniform weights W_1.
Every later round t transfers the lower layers of h_{t-1}, trains against
the frozen soft targets of H_{t-1} with the diversity-driven loss and
weights W_{t-1}, then derives per-sample similarity and bias, the new
weights W_t (always re-based on W_1) and the model weight alpha_t.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from src.models.data_logger import RoundLogger
from src.models.datasets import Dataset, one_hot
from src.models.ensemble import Ensemble, Member, RoundRecord, combine_soft_targets, ensemble_predict
from src.models.errors import InternalError, TrainingDivergenceError, ValidationError
from src.models.losses import EddeLossSpec, WeightedCrossEntropySpec
from src.models.metrics import row_distances
from src.models.network import Architecture, BaseNetwork, init_network
from src.models.seeding import fresh_seed, member_seed, train_seed
from src.models.training import TrainSettings, fit_network, predict_proba
from src.models.transfer import BetaSearchConfig, BetaSearchResult, TransferSpec, beta_search, transfer_init

logger = logging.getLogger(__name__)

__all__ = [
    "SampleWeights", "EddeConfig", "sample_sim", "sample_bias", "reweight", "update_weights",
    "model_alpha", "first_alpha", "train_edde", "ensemble_predict",
]

ALPHA_FLOOR = 1e-10
AUTO_BETA = "auto"


@dataclass(frozen=True)
class SampleWeights:
    w: np.ndarray
    round: int = 1

    def __post_init__(self):
        w = np.array(self.w, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise ValidationError(f"Sample weights must be a non-empty vector, got shape {w.shape}")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValidationError("Sample weights must be non-negative and sum to 1")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @classmethod
    def uniform(cls, n: int) -> "SampleWeights":
        return cls(np.full(n, 1.0 / n), 1)


@dataclass(frozen=True)
class EddeConfig:
    arch: Architecture
    T: int = 5
    gamma: float = 0.1
    beta: Union[float, str] = AUTO_BETA
    epochs_first: int = 20
    epochs_rest: int = 10
    train: TrainSettings = field(default_factory=TrainSettings)
    seed: int = 0
    beta_search: BetaSearchConfig = field(default_factory=BetaSearchConfig)

    def __post_init__(self):
        if self.T < 1:
            raise ValidationError(f"T must be at least 1, got {self.T}")
        if not self.gamma >= 0:
            raise ValidationError(f"gamma must be non-negative, got {self.gamma}")
        if self.beta != AUTO_BETA:
            if isinstance(self.beta, str) or not 0.0 <= self.beta <= 1.0:
                raise ValidationError(f"beta must be 'auto' or lie in [0, 1], got {self.beta!r}")
        if self.epochs_first < 1 or self.epochs_rest < 1:
            raise ValidationError("epochs_first and epochs_rest must be positive")
        if self.seed < 0:
            raise ValidationError(f"seed must be non-negative, got {self.seed}")

    @property
    def auto_beta(self) -> bool:
        return self.beta == AUTO_BETA


def _scalar_or_rows(values: np.ndarray, single: bool):
    return float(values) if single else values


def sample_sim(h_pred, H_pred):
    """1 - ||h - H||_2 / sqrt(2), per sample (vectors) or per row (matrices)."""
    h_pred = np.asarray(h_pred, dtype=np.float64)
    return _scalar_or_rows(1.0 - row_distances(h_pred, H_pred), h_pred.ndim == 1)


def sample_bias(h_pred, y):
    """||h - y||_2 / sqrt(2) against the one-hot label."""
    h_pred = np.asarray(h_pred, dtype=np.float64)
    return _scalar_or_rows(row_distances(h_pred, y), h_pred.ndim == 1)


def _misclassified(preds: np.ndarray, labels: np.ndarray) -> np.ndarray:
    preds = np.asarray(preds)
    labels = np.asarray(labels)
    if preds.ndim != 2 or preds.shape[0] != labels.shape[0]:
        raise ValidationError(f"Predictions {preds.shape} do not match {labels.shape[0]} labels")
    return np.argmax(preds, axis=1) != labels


def reweight(w1: SampleWeights, misclassified, sims, biases, round: int = 1) -> SampleWeights:
    """W_1 * exp(Sim + Bias) on misclassified samples, W_1 elsewhere, normalized."""
    misclassified = np.asarray(misclassified, dtype=bool)
    sims = np.asarray(sims, dtype=np.float64)
    biases = np.asarray(biases, dtype=np.float64)
    if not (misclassified.shape == sims.shape == biases.shape == w1.w.shape):
        raise ValidationError("Weights, misclassification mask, sims and biases must have equal length")
    unnormalized = w1.w * np.exp(np.where(misclassified, sims + biases, 0.0))
    z = unnormalized.sum()
    if not z > 0:
        raise InternalError("Sample weights have zero total mass")
    return SampleWeights(unnormalized / z, round)


def update_weights(w1: SampleWeights, preds, labels, H_preds, round: int = 1) -> SampleWeights:
    preds = np.asarray(preds, dtype=np.float64)
    labels = np.asarray(labels)
    truth = one_hot(labels, preds.shape[1])
    return reweight(w1, _misclassified(preds, labels), sample_sim(preds, H_preds),
                    sample_bias(preds, truth), round)


def model_alpha(preds, labels, sims, weights: SampleWeights) -> float:
    """1/2 ln(sum_correct Sim*W / sum_incorrect Sim*W), both sums floored."""
    wrong = _misclassified(preds, labels)
    mass = np.asarray(sims, dtype=np.float64) * weights.w
    if mass.shape != wrong.shape:
        raise ValidationError(f"Expected {wrong.size} sims and weights, got {mass.shape}")
    correct_mass = max(float(np.sum(mass[~wrong])), ALPHA_FLOOR)
    wrong_mass = max(float(np.sum(mass[wrong])), ALPHA_FLOOR)
    return 0.5 * float(np.log(correct_mass / wrong_mass))


def first_alpha(preds, labels) -> float:
    """#correct / #incorrect with the denominator floored."""
    wrong = _misclassified(preds, labels)
    if wrong.size == 0:
        raise ValidationError("first_alpha needs at least one sample")
    n_wrong = int(wrong.sum())
    return float(wrong.size - n_wrong) / max(float(n_wrong), ALPHA_FLOOR)


def _first_model(dataset: Dataset, cfg: EddeConfig, w1: SampleWeights,
                 losses: list) -> tuple:
    """h_1 and the beta in effect, running the search when beta is 'auto'."""
    if cfg.auto_beta:
        result: BetaSearchResult = beta_search(dataset, cfg.arch, cfg.beta_search, cfg.train, cfg.seed)
        logger.info(f"beta search chose beta={result.beta:g} after {len(result.trace)} probes")
        losses.extend(result.teacher_losses)
        return result.teacher, result.beta, cfg.beta_search.teacher_epochs, result
    net = init_network(cfg.arch, member_seed(cfg.seed, 1))
    net = fit_network(net, dataset, WeightedCrossEntropySpec(w1.w), cfg.train, cfg.epochs_first,
                      train_seed(cfg.seed, 1), history=losses)
    return net, float(cfg.beta), cfg.epochs_first, None


def train_edde(dataset: Dataset, cfg: EddeConfig, round_logger: Optional[RoundLogger] = None) -> Ensemble:
    """Train a T-member diversity-driven ensemble on `dataset`."""
    if cfg.arch.n_inputs != dataset.n_features or cfg.arch.n_classes != dataset.k:
        raise ValidationError(
            f"Architecture {list(cfg.arch.layer_sizes)} does not fit {dataset.n_features} features "
            f"and {dataset.k} classes")
    labels = dataset.labels
    truth = one_hot(labels, dataset.k)
    w1 = SampleWeights.uniform(dataset.n_samples)

    started = time.perf_counter()
    losses = []
    try:
        h1, beta, epochs1, search = _first_model(dataset, cfg, w1, losses)
    except TrainingDivergenceError as e:
        raise e.with_round(1)
    probs = predict_proba(h1, dataset)
    alpha1 = first_alpha(probs, labels)
    if not alpha1 > 0:
        logger.warning("h_1 classifies no training sample correctly; flooring alpha_1")
        alpha1 = ALPHA_FLOOR

    ens = Ensemble(method="edde", gamma=cfg.gamma, beta=beta, T=cfg.T)
    if search is not None:
        ens.notes.append(f"beta chosen by search over {len(search.trace)} candidates")
        ens.beta_trace = [p.to_dict() for p in search.trace]
    ens.members.append(Member(h1, alpha1, 1, member_seed(cfg.seed, 1)))
    first = RoundRecord(1, alpha1, False, epochs1, losses, time.perf_counter() - started, weights=w1.w)
    ens.rounds.append(first)
    logger.info(f"round 1: alpha={alpha1:.6f}")
    if round_logger is not None:
        round_logger.log_round("edde", first)

    ensemble_probs = combine_soft_targets([probs], [alpha1])
    member_probs, member_alphas = [probs], [alpha1]
    weights = w1
    previous: BaseNetwork = h1
    for t in range(2, cfg.T + 1):
        started = time.perf_counter()
        losses = []
        spec = EddeLossSpec(cfg.gamma, ensemble_probs, weights.w)
        student = transfer_init(previous, TransferSpec(beta, fresh_seed(cfg.seed, t)))
        try:
            net = fit_network(student, dataset, spec, cfg.train, cfg.epochs_rest,
                              train_seed(cfg.seed, t), history=losses)
        except TrainingDivergenceError as e:
            raise e.with_round(t)

        probs = predict_proba(net, dataset)
        sims = sample_sim(probs, ensemble_probs)
        biases = sample_bias(probs, truth)
        weights = reweight(w1, _misclassified(probs, labels), sims, biases, t)
        alpha = model_alpha(probs, labels, sims, weights)
        skipped = not alpha > 0
        record = RoundRecord(t, alpha, skipped, cfg.epochs_rest, losses, time.perf_counter() - started,
                             weights=weights.w, sims=sims, biases=biases)
        ens.rounds.append(record)
        if round_logger is not None:
            round_logger.log_round("edde", record)
        previous = net
        if skipped:
            ens.skipped_rounds.append(t)
            logger.warning(f"round {t}: alpha={alpha:.6f} <= 0, excluded from the ensemble")
            continue
        logger.info(f"round {t}: alpha={alpha:.6f} final loss={record.final_loss:.6f}")
        ens.members.append(Member(net, alpha, t, member_seed(cfg.seed, t)))
        member_probs.append(probs)
        member_alphas.append(alpha)
        ensemble_probs = combine_soft_targets(member_probs, member_alphas)

    if cfg.T > 1 and len(ens.members) == 1:
        logger.warning("Every round after the first was skipped; the ensemble is h_1 alone")
    return ens
