import math
from dataclasses import dataclass
from enum import Enum

from src.models.errors import ValidationError


class ScheduleKind(str, Enum):
    STEP = "step"
    COSINE_CYCLIC = "cosine_cyclic"


@dataclass(frozen=True)
class LrSchedule:
    """Learning-rate schedule over a fixed number of epochs.

    step: lr0 for the first half, lr0/10 until 75%, lr0/100 afterwards.
    cosine_cyclic: `cycles` cosine annealing cycles restarting at lr0.
    """

    kind: ScheduleKind
    lr0: float
    total_epochs: int
    cycles: int = 1

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", ScheduleKind(self.kind))
        except ValueError:
            raise ValidationError(f"Unknown schedule {self.kind!r}; expected step or cosine_cyclic")
        if not self.lr0 > 0:
            raise ValidationError(f"lr0 must be positive, got {self.lr0}")
        if self.total_epochs < 1:
            raise ValidationError(f"total_epochs must be positive, got {self.total_epochs}")
        if self.cycles < 1:
            raise ValidationError(f"cycles must be positive, got {self.cycles}")

    @property
    def cycle_length(self) -> int:
        return math.ceil(self.total_epochs / self.cycles)

    def is_cycle_end(self, epoch: int) -> bool:
        """True when `epoch` is the last epoch of a cosine cycle (or of the schedule)."""
        return (epoch + 1) % self.cycle_length == 0 or epoch == self.total_epochs - 1


def lr_at(schedule: LrSchedule, epoch: int) -> float:
    if not 0 <= epoch < schedule.total_epochs:
        raise ValidationError(f"Epoch {epoch} outside schedule range [0, {schedule.total_epochs})")
    if schedule.kind is ScheduleKind.STEP:
        if epoch < 0.5 * schedule.total_epochs:
            return schedule.lr0
        if epoch < 0.75 * schedule.total_epochs:
            return schedule.lr0 / 10
        return schedule.lr0 / 100
    length = schedule.cycle_length
    return (schedule.lr0 / 2) * (math.cos(math.pi * (epoch % length) / length) + 1)
