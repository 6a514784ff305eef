"""Ensemble values shared by the EDDE pipeline, the baselines and persistence."""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.models.errors import ValidationError
from src.models.network import BaseNetwork, forward


@dataclass
class Member:
    net: BaseNetwork
    alpha: float
    round: int
    seed: int = 0


@dataclass
class RoundRecord:
    """Diagnostics of one boosting round, baseline member or snapshot."""

    round: int
    alpha: float
    skipped: bool
    epochs: int
    losses: List[float] = field(default_factory=list)
    seconds: float = 0.0
    weights: Optional[np.ndarray] = None
    sims: Optional[np.ndarray] = None
    biases: Optional[np.ndarray] = None

    @property
    def final_loss(self) -> Optional[float]:
        return self.losses[-1] if self.losses else None

    def to_dict(self) -> dict:
        return {
            "round": self.round,
            "alpha": self.alpha,
            "skipped": self.skipped,
            "epochs": self.epochs,
            "losses": list(self.losses),
        }


@dataclass
class Ensemble:
    method: str
    members: List[Member] = field(default_factory=list)
    gamma: Optional[float] = None
    beta: Optional[float] = None
    skipped_rounds: List[int] = field(default_factory=list)
    rounds: List[RoundRecord] = field(default_factory=list)
    T: int = 1
    notes: List[str] = field(default_factory=list)
    beta_trace: List[dict] = field(default_factory=list)

    @property
    def alphas(self) -> List[float]:
        return [m.alpha for m in self.members]

    @property
    def networks(self) -> List[BaseNetwork]:
        return [m.net for m in self.members]

    @property
    def total_epochs(self) -> int:
        """Epochs spent on all rounds, skipped ones included."""
        return sum(r.epochs for r in self.rounds)

    def check_non_empty(self) -> None:
        if not self.members:
            raise ValidationError("Ensemble has no members")


def combine_soft_targets(member_probs: Sequence[np.ndarray], alphas: Sequence[float]) -> np.ndarray:
    """sum_t alpha_t * h_t / sum_t alpha_t, accumulated in member order."""
    if len(member_probs) == 0:
        raise ValidationError("Ensemble has no members")
    if len(member_probs) != len(alphas):
        raise ValidationError(f"{len(member_probs)} members but {len(alphas)} alphas")
    total_alpha = float(np.sum(alphas))
    if not total_alpha > 0:
        raise ValidationError(f"Member weights must have a positive sum, got {total_alpha}")
    combined = np.zeros_like(np.asarray(member_probs[0], dtype=np.float64))
    for probs, alpha in zip(member_probs, alphas):
        combined = combined + alpha * np.asarray(probs, dtype=np.float64)
    return combined / total_alpha


def ensemble_soft_targets(ens: Ensemble, x) -> np.ndarray:
    ens.check_non_empty()
    return combine_soft_targets([forward(m.net, x) for m in ens.members], ens.alphas)


def ensemble_predict(ens: Ensemble, x) -> Tuple[np.ndarray, np.ndarray]:
    """Normalized weighted soft targets H(x) and their argmax labels.

    Accepts one sample (1-D) or a batch (2-D); ties go to the lowest class index.
    """
    probs = ensemble_soft_targets(ens, x)
    return probs, np.argmax(probs, axis=-1)
