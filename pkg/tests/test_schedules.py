import pytest

from src.models.errors import ValidationError
from src.models.schedules import LrSchedule, ScheduleKind, lr_at


def test_step_schedule_divides_by_ten_at_half_and_three_quarters():
    schedule = LrSchedule(ScheduleKind.STEP, 0.1, 100)
    assert lr_at(schedule, 0) == 0.1
    assert lr_at(schedule, 49) == 0.1
    assert lr_at(schedule, 50) == pytest.approx(0.01)
    assert lr_at(schedule, 74) == pytest.approx(0.01)
    assert lr_at(schedule, 75) == pytest.approx(0.001)
    assert lr_at(schedule, 99) == pytest.approx(0.001)


def test_cosine_cycle_starts_at_lr0_and_halves_mid_cycle():
    schedule = LrSchedule("cosine_cyclic", 0.1, 100, cycles=2)
    assert schedule.cycle_length == 50
    assert lr_at(schedule, 0) == pytest.approx(0.1)
    assert lr_at(schedule, 25) == pytest.approx(0.05)
    assert lr_at(schedule, 50) == pytest.approx(0.1)


@pytest.mark.parametrize("schedule", [
    LrSchedule(ScheduleKind.STEP, 0.1, 37),
    LrSchedule(ScheduleKind.COSINE_CYCLIC, 0.2, 30, cycles=3),
    LrSchedule(ScheduleKind.COSINE_CYCLIC, 0.05, 7, cycles=2),
])
def test_rates_are_positive_and_non_increasing_within_a_cycle(schedule):
    rates = [lr_at(schedule, e) for e in range(schedule.total_epochs)]
    assert all(0 < r <= schedule.lr0 for r in rates)
    for e in range(1, schedule.total_epochs):
        if schedule.kind is ScheduleKind.COSINE_CYCLIC and e % schedule.cycle_length == 0:
            continue
        assert rates[e] <= rates[e - 1]


def test_cycle_ends():
    schedule = LrSchedule(ScheduleKind.COSINE_CYCLIC, 0.1, 12, cycles=3)
    assert [e for e in range(12) if schedule.is_cycle_end(e)] == [3, 7, 11]


@pytest.mark.parametrize("epoch", [-1, 10])
def test_epoch_out_of_range(epoch):
    with pytest.raises(ValidationError):
        lr_at(LrSchedule(ScheduleKind.STEP, 0.1, 10), epoch)


@pytest.mark.parametrize("kwargs", [
    dict(kind="linear", lr0=0.1, total_epochs=10),
    dict(kind="step", lr0=0.0, total_epochs=10),
    dict(kind="step", lr0=0.1, total_epochs=0),
    dict(kind="cosine_cyclic", lr0=0.1, total_epochs=10, cycles=0),
])
def test_invalid_schedule(kwargs):
    with pytest.raises(ValidationError):
        LrSchedule(**kwargs)
