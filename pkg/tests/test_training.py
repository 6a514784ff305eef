import numpy as np
import pytest

from src.models.errors import TrainingDivergenceError, ValidationError
from src.models.losses import WeightedCrossEntropySpec
from src.models.network import Architecture, init_network, params_equal
from src.models.schedules import LrSchedule, ScheduleKind
from src.models.training import TrainSettings, accuracy, fit_network, predict_proba, train_epochs

ARCH = Architecture((2, 8, 2))


class NanLoss:
    def batch_loss_and_grads(self, h_batch, y_batch, indices):
        return float("nan"), np.zeros_like(h_batch)


def test_zero_epochs_returns_the_network_unchanged(separable):
    net = init_network(ARCH, 0)
    out = train_epochs(net, separable, None, None, LrSchedule(ScheduleKind.STEP, 0.1, 5), 0, 16, seed=0)
    assert params_equal(out, net)
    assert fit_network(net, separable, None, TrainSettings(), 0, seed=0) is net


def test_separable_blobs_are_learned(separable):
    settings = TrainSettings(lr0=0.5, batch_size=16)
    net = fit_network(init_network(ARCH, 0), separable, None, settings, 30, seed=0)
    assert accuracy(predict_proba(net, separable), separable.labels) >= 0.95


def test_training_is_deterministic(separable):
    settings = TrainSettings(lr0=0.1, batch_size=16)
    a = fit_network(init_network(ARCH, 3), separable, None, settings, 5, seed=9)
    b = fit_network(init_network(ARCH, 3), separable, None, settings, 5, seed=9)
    c = fit_network(init_network(ARCH, 3), separable, None, settings, 5, seed=10)
    assert params_equal(a, b)
    assert not params_equal(a, c)


def test_uniform_weights_match_the_default_loss(separable):
    settings = TrainSettings(batch_size=16)
    n = separable.n_samples
    a = fit_network(init_network(ARCH, 1), separable, None, settings, 3, seed=1)
    b = fit_network(init_network(ARCH, 1), separable, WeightedCrossEntropySpec(np.full(n, 1.0 / n)), settings, 3, seed=1)
    assert params_equal(a, b)


def test_history_and_epoch_callback(separable):
    history, seen = [], []
    fit_network(init_network(ARCH, 0), separable, None, TrainSettings(batch_size=16), 4, seed=0,
                history=history, on_epoch=lambda epoch, net, loss: seen.append((epoch, loss)))
    assert len(history) == 4
    assert [e for e, _ in seen] == [0, 1, 2, 3]
    assert [loss for _, loss in seen] == history
    assert history[-1] < history[0]


def test_non_finite_loss_raises_with_epoch(separable):
    with pytest.raises(TrainingDivergenceError) as info:
        fit_network(init_network(ARCH, 0), separable, NanLoss(), TrainSettings(), 3, seed=0)
    assert info.value.epoch == 0


def test_more_epochs_than_the_schedule(separable):
    with pytest.raises(ValidationError):
        train_epochs(init_network(ARCH, 0), separable, None, None, LrSchedule(ScheduleKind.STEP, 0.1, 2), 3, 8, 0)


def test_weight_length_mismatch(separable):
    with pytest.raises(ValidationError):
        train_epochs(init_network(ARCH, 0), separable, np.full(3, 1 / 3), None,
                     LrSchedule(ScheduleKind.STEP, 0.1, 2), 2, 8, 0)


def test_weights_and_loss_spec_are_exclusive(separable):
    weights = np.full(separable.n_samples, 1 / separable.n_samples)
    with pytest.raises(ValidationError):
        train_epochs(init_network(ARCH, 0), separable, weights, WeightedCrossEntropySpec(weights),
                     LrSchedule(ScheduleKind.STEP, 0.1, 2), 2, 8, 0)


def test_accuracy_breaks_ties_toward_the_lowest_class():
    assert accuracy(np.array([[0.5, 0.5], [0.5, 0.5]]), np.array([0, 1])) == 0.5


@pytest.mark.parametrize("kwargs", [dict(lr0=0), dict(batch_size=0), dict(schedule="adam"), dict(cycles=0)])
def test_invalid_settings(kwargs):
    with pytest.raises(ValidationError):
        TrainSettings(**kwargs)
