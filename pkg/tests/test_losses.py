import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy.special import softmax

from src.models.errors import ValidationError
from src.models.losses import (EddeLossSpec, SoftTargetSpec, WeightedCrossEntropySpec, batch_loss_and_grads,
                               cross_entropy, edde_loss, edde_loss_grad)
from src.models.network import softmax_backward

Y0 = np.array([1.0, 0.0])


def test_zero_gamma_is_cross_entropy():
    assert edde_loss([0.5, 0.5], [0.9, 0.1], Y0, 1.0, 0.0) == pytest.approx(0.693147, abs=1e-6)


def test_diversity_term_lowers_the_loss():
    assert edde_loss([0.7, 0.3], [0.5, 0.5], Y0, 1.0, 0.5) == pytest.approx(0.215254, abs=1e-6)


def test_zero_weight_gives_zero_loss():
    assert edde_loss([0.7, 0.3], [0.1, 0.9], Y0, 0.0, 0.8) == 0.0


def test_gradient_example():
    grad = edde_loss_grad([0.7, 0.3], [0.5, 0.5], Y0, 1.0, 0.5)
    assert_allclose(grad, [-1.782124, 0.353553], atol=1e-6)


def test_gradient_at_ensemble_output_is_cross_entropy_gradient():
    h = np.array([0.7, 0.3])
    assert_allclose(edde_loss_grad(h, h, Y0, 0.4, 0.9), -0.4 * Y0 / h, rtol=1e-15)


def test_zero_gamma_gradient_is_cross_entropy_gradient():
    h = np.array([0.2, 0.5, 0.3])
    y = np.array([0.0, 0.0, 1.0])
    assert_allclose(edde_loss_grad(h, [0.3, 0.3, 0.4], y, 0.7, 0.0), -0.7 * y / h)


def test_loss_can_be_negative():
    assert edde_loss([0.99, 0.01], [0.0, 1.0], Y0, 1.0, 1.0) < 0


def test_length_mismatch():
    with pytest.raises(ValidationError):
        edde_loss([0.5, 0.5], [0.3, 0.3, 0.4], Y0, 1.0, 0.1)
    with pytest.raises(ValidationError):
        edde_loss_grad([0.5, 0.5], [0.5, 0.5], [1.0, 0.0, 0.0], 1.0, 0.1)


def test_gradient_matches_finite_differences_in_logit_space(rng):
    step = 1e-6
    checked = 0
    while checked < 100:
        k = int(rng.integers(2, 6))
        z = rng.normal(size=k)
        h = softmax(z)
        H = rng.dirichlet(np.ones(k))
        if np.linalg.norm(h - H) <= 1e-3:
            continue
        y = np.eye(k)[rng.integers(k)]
        gamma, w = rng.uniform(0, 1), rng.uniform(1e-3, 1)

        analytic = softmax_backward(h[None], edde_loss_grad(h, H, y, w, gamma)[None])[0]
        numeric = np.empty(k)
        for j in range(k):
            up, down = z.copy(), z.copy()
            up[j] += step
            down[j] -= step
            numeric[j] = (edde_loss(softmax(up), H, y, w, gamma) - edde_loss(softmax(down), H, y, w, gamma)) / (2 * step)
        scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-6)
        assert np.linalg.norm(analytic - numeric) / scale <= 1e-5
        checked += 1


def test_moving_away_from_the_ensemble_decreases_the_loss():
    h = np.array([0.6, 0.3, 0.1])
    y = np.array([1.0, 0.0, 0.0])
    near = edde_loss(h, [0.55, 0.35, 0.1], y, 0.5, 0.3)
    far = edde_loss(h, [0.2, 0.3, 0.5], y, 0.5, 0.3)
    assert far < near


def test_zero_gamma_equals_weighted_cross_entropy(rng):
    for _ in range(50):
        h = rng.dirichlet(np.ones(4))
        y = np.eye(4)[rng.integers(4)]
        w = rng.uniform()
        assert edde_loss(h, rng.dirichlet(np.ones(4)), y, w, 0.0) == pytest.approx(cross_entropy(h, y, w), rel=1e-15)


def test_batch_of_one_matches_scalar_operations():
    spec = EddeLossSpec(0.5, np.array([[0.5, 0.5]]), np.array([1.0]))
    loss, grads = batch_loss_and_grads(spec, np.array([[0.7, 0.3]]), np.array([0]), np.array([0]))
    assert loss == edde_loss([0.7, 0.3], [0.5, 0.5], Y0, 1.0, 0.5)
    assert_array_equal(grads[0], edde_loss_grad([0.7, 0.3], [0.5, 0.5], Y0, 1.0, 0.5))


def test_batch_of_eight_matches_scalar_calls_bitwise(rng):
    n, k = 8, 3
    targets = rng.dirichlet(np.ones(k), size=n)
    weights = rng.uniform(size=n)
    weights /= weights.sum()
    spec = EddeLossSpec(0.3, targets, weights)
    h = rng.dirichlet(np.ones(k), size=n)
    labels = rng.integers(k, size=n)
    indices = rng.permutation(n)

    loss, grads = spec.batch_loss_and_grads(h, labels, indices)
    scalar_losses = []
    for row, (i, label) in enumerate(zip(indices, labels)):
        w = spec.sample_weights[i] * n
        y = np.eye(k)[label]
        assert_array_equal(grads[row], edde_loss_grad(h[row], targets[i], y, w, 0.3))
        scalar_losses.append(edde_loss(h[row], targets[i], y, w, 0.3))
    assert loss == pytest.approx(np.mean(scalar_losses), rel=1e-14)


def test_doubling_the_weight_doubles_the_gradient():
    h, H = np.array([0.6, 0.4]), np.array([0.3, 0.7])
    assert_allclose(edde_loss_grad(h, H, Y0, 0.6, 0.2), 2 * edde_loss_grad(h, H, Y0, 0.3, 0.2))


def test_batch_index_out_of_range():
    spec = EddeLossSpec(0.1, np.full((2, 2), 0.5), np.array([0.5, 0.5]))
    with pytest.raises(ValidationError):
        spec.batch_loss_and_grads(np.full((1, 2), 0.5), np.array([0]), np.array([2]))


@pytest.mark.parametrize("gamma, targets, weights", [
    (-0.1, np.full((2, 2), 0.5), [0.5, 0.5]),
    (0.1, np.array([[0.7, 0.7], [0.5, 0.5]]), [0.5, 0.5]),
    (0.1, np.full((2, 2), 0.5), [0.6, 0.6]),
    (0.1, np.full((2, 2), 0.5), [1.5, -0.5]),
    (0.1, np.full((3, 2), 0.5), [0.5, 0.5]),
])
def test_invalid_loss_spec(gamma, targets, weights):
    with pytest.raises(ValidationError):
        EddeLossSpec(gamma, targets, np.array(weights))


def test_zero_gamma_spec_matches_weighted_cross_entropy(rng):
    n = 6
    weights = rng.dirichlet(np.ones(n))
    h = rng.dirichlet(np.ones(3), size=n)
    labels = rng.integers(3, size=n)
    idx = np.arange(n)
    edde, _ = EddeLossSpec(0.0, rng.dirichlet(np.ones(3), size=n), weights).batch_loss_and_grads(h, labels, idx)
    plain, _ = WeightedCrossEntropySpec(weights).batch_loss_and_grads(h, labels, idx)
    assert edde == plain


def test_uniform_cross_entropy_weighs_every_sample_once():
    spec = WeightedCrossEntropySpec.uniform(4)
    h = np.array([[0.5, 0.5], [0.25, 0.75]])
    loss, grads = spec.batch_loss_and_grads(h, np.array([0, 1]), np.array([1, 3]))
    assert loss == pytest.approx((np.log(2) + np.log(4 / 3)) / 2)
    assert_allclose(grads, [[-2.0, 0.0], [0.0, -4 / 3]])


def test_soft_targets_are_frozen():
    teacher = np.array([[0.8, 0.2], [0.4, 0.6]])
    spec = SoftTargetSpec(teacher)
    teacher[0] = [0.0, 1.0]
    loss, _ = spec.batch_loss_and_grads(np.array([[0.8, 0.2]]), np.array([0]), np.array([0]))
    assert loss == pytest.approx(-(0.8 * np.log(0.8) + 0.2 * np.log(0.2)))


def test_soft_targets_mixed_with_labels():
    spec = SoftTargetSpec(np.array([[0.5, 0.5]]), label_mix=0.5)
    _, grads = spec.batch_loss_and_grads(np.array([[0.5, 0.5]]), np.array([0]), np.array([0]))
    assert_allclose(grads, [[-1.5, -0.5]])


def test_label_mix_out_of_range():
    with pytest.raises(ValidationError):
        SoftTargetSpec(np.array([[0.5, 0.5]]), label_mix=1.5)
