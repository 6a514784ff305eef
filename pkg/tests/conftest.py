import numpy as np
import pytest

from src.models.datasets import Dataset
from src.models.network import Activation, Architecture
from src.models.training import TrainSettings


def two_blobs(n_per_class=40, spread=0.5, seed=0):
    """Two well separated Gaussian clusters at (-2, -2) and (2, 2)."""
    rng = np.random.default_rng(seed)
    centers = np.array([[-2.0, -2.0], [2.0, 2.0]])
    labels = np.repeat([0, 1], n_per_class)
    features = centers[labels] + spread * rng.standard_normal((labels.size, 2))
    return Dataset(features, labels, 2)


def random_dataset(n=20, d=2, k=3, seed=0):
    rng = np.random.default_rng(seed)
    return Dataset(rng.standard_normal((n, d)), np.arange(n) % k, k)


@pytest.fixture
def separable():
    return two_blobs()


@pytest.fixture
def small_data():
    return random_dataset()


@pytest.fixture
def tanh_arch():
    return Architecture((2, 5, 3), Activation.TANH)


@pytest.fixture
def settings():
    return TrainSettings(lr0=0.1, batch_size=8)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
