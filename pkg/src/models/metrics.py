"""
Diversity and quality measures over model predictions.

Distances between soft targets are ||p - q||_2 / sqrt(2), which lies in
[0, 1] for probability vectors: two one-hot vectors of different classes
are exactly 1 apart.
"""

from dataclasses import dataclass, field
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.models.datasets import one_hot
from src.models.ensemble import combine_soft_targets
from src.models.errors import ValidationError

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class PredictionMatrix:
    soft_targets: np.ndarray
    model_id: str = "model"

    def __post_init__(self):
        rows = np.array(self.soft_targets, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] == 0:
            raise ValidationError(f"Soft targets must be a non-empty N x k matrix, got shape {rows.shape}")
        if np.any(rows < 0) or not np.allclose(rows.sum(axis=1), 1.0, atol=1e-6):
            raise ValidationError(f"Soft targets of {self.model_id!r} must be probability rows")
        rows.setflags(write=False)
        object.__setattr__(self, "soft_targets", rows)

    @property
    def n_samples(self) -> int:
        return self.soft_targets.shape[0]

    @property
    def k(self) -> int:
        return self.soft_targets.shape[1]

    def predicted_labels(self) -> np.ndarray:
        return np.argmax(self.soft_targets, axis=1)

    def accuracy(self, labels) -> float:
        return float(np.mean(self.predicted_labels() == np.asarray(labels)))


@dataclass
class DiversityReport:
    pairwise: np.ndarray
    div_h: Optional[float]
    average_accuracy: float
    ensemble_accuracy: float
    increased_accuracy: float
    model_ids: List[str] = field(default_factory=list)
    member_accuracies: List[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "model_ids": list(self.model_ids),
            "member_accuracies": list(self.member_accuracies),
            "average_accuracy": self.average_accuracy,
            "ensemble_accuracy": self.ensemble_accuracy,
            "increased_accuracy": self.increased_accuracy,
            "div_h": self.div_h,
            "pairwise_similarity": self.pairwise.tolist(),
        }


def as_prediction_matrix(preds, model_id: str = "model") -> PredictionMatrix:
    if isinstance(preds, PredictionMatrix):
        return preds
    return PredictionMatrix(preds, model_id)


def row_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-row ||a_i - b_i||_2 / sqrt(2), clipped to [0, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValidationError(f"Prediction shapes differ: {a.shape} vs {b.shape}")
    diff = a - b
    return np.minimum(np.sqrt(np.sum(diff * diff, axis=-1)) / SQRT2, 1.0)


def _check_conformable(preds: Sequence[PredictionMatrix]) -> None:
    shape = preds[0].soft_targets.shape
    for p in preds[1:]:
        if p.soft_targets.shape != shape:
            raise ValidationError(
                f"Prediction matrix {p.model_id!r} has shape {p.soft_targets.shape}, expected {shape}")


def pairwise_div(pj, pk) -> float:
    pj, pk = as_prediction_matrix(pj, "j"), as_prediction_matrix(pk, "k")
    return float(np.mean(row_distances(pj.soft_targets, pk.soft_targets)))


def pairwise_sim(pj, pk) -> float:
    return 1.0 - pairwise_div(pj, pk)


def _prediction_list(preds) -> List[PredictionMatrix]:
    out = [as_prediction_matrix(p, f"h{t + 1}") for t, p in enumerate(preds)]
    if out:
        _check_conformable(out)
    return out


def ensemble_div(preds) -> float:
    """Mean pairwise diversity over all member pairs; needs T >= 2."""
    preds = _prediction_list(preds)
    if len(preds) < 2:
        raise ValidationError(f"Ensemble diversity needs at least 2 models, got {len(preds)}")
    divs = [pairwise_div(a, b) for a, b in combinations(preds, 2)]
    return float(np.mean(divs))


def similarity_matrix(preds) -> np.ndarray:
    preds = _prediction_list(preds)
    if not preds:
        raise ValidationError("Similarity matrix needs at least one model")
    t = len(preds)
    matrix = np.eye(t)
    for j, k in combinations(range(t), 2):
        matrix[j, k] = matrix[k, j] = pairwise_sim(preds[j], preds[k])
    return matrix


def amb_nc(ensemble_correct, model_correct, alphas) -> np.ndarray:
    """Per-sample ambiguity 1/2 * sum_t alpha_t * (H - h_t) on the +1/-1 correctness encoding."""
    ensemble_correct = np.asarray(ensemble_correct, dtype=np.float64)
    model_correct = [np.asarray(m, dtype=np.float64) for m in model_correct]
    if len(model_correct) != len(alphas):
        raise ValidationError(f"{len(model_correct)} models but {len(alphas)} alphas")
    amb = np.zeros_like(ensemble_correct)
    for h, alpha in zip(model_correct, alphas):
        if h.shape != ensemble_correct.shape:
            raise ValidationError(f"Correctness vectors differ in length: {h.shape} vs {ensemble_correct.shape}")
        amb = amb + alpha * (ensemble_correct - h)
    return 0.5 * amb


def correctness(probs: np.ndarray, labels) -> np.ndarray:
    """+1 where argmax(probs) equals the label, -1 otherwise."""
    return np.where(np.argmax(probs, axis=1) == np.asarray(labels), 1.0, -1.0)


def _check_labels(preds: Sequence[PredictionMatrix], labels) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.shape != (preds[0].n_samples,):
        raise ValidationError(f"Expected {preds[0].n_samples} labels, got shape {labels.shape}")
    if np.any(labels < 0) or np.any(labels >= preds[0].k):
        raise ValidationError(f"Labels must lie in [0, {preds[0].k})")
    return labels


def accuracy_summary(preds, alphas, labels) -> DiversityReport:
    preds = _prediction_list(preds)
    if not preds:
        raise ValidationError("Accuracy summary needs at least one model")
    labels = _check_labels(preds, labels)
    member_accuracies = [p.accuracy(labels) for p in preds]
    average = float(np.mean(member_accuracies))
    combined = combine_soft_targets([p.soft_targets for p in preds], alphas)
    ensemble = float(np.mean(np.argmax(combined, axis=1) == labels))
    return DiversityReport(
        pairwise=similarity_matrix(preds),
        div_h=ensemble_div(preds) if len(preds) >= 2 else None,
        average_accuracy=average,
        ensemble_accuracy=ensemble,
        increased_accuracy=ensemble - average,
        model_ids=[p.model_id for p in preds],
        member_accuracies=member_accuracies,
    )


def bias_variance_report(preds, labels) -> Tuple[float, float]:
    """(mean per-sample bias over models and samples, ensemble diversity)."""
    preds = _prediction_list(preds)
    if len(preds) < 2:
        raise ValidationError(f"Bias-variance report needs at least 2 models, got {len(preds)}")
    labels = _check_labels(preds, labels)
    truth = one_hot(labels, preds[0].k)
    bias = float(np.mean([row_distances(p.soft_targets, truth) for p in preds]))
    return bias, ensemble_div(preds)


def prefix_accuracies(preds, alphas, labels) -> List[float]:
    """Ensemble accuracy of H_1, H_2, ..., H_T built from the first t members."""
    preds = _prediction_list(preds)
    labels = _check_labels(preds, labels) if preds else np.asarray(labels)
    out = []
    for t in range(1, len(preds) + 1):
        combined = combine_soft_targets([p.soft_targets for p in preds[:t]], alphas[:t])
        out.append(float(np.mean(np.argmax(combined, axis=1) == labels)))
    return out
