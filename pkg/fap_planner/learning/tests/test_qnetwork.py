import numpy as np
import pytest

from fap_planner.learning.qnetwork import QNetwork
from fap_planner.learning.qnetwork import forward


@pytest.fixture
def net() -> QNetwork:
    return QNetwork.initialise((5, 8, 6, 7), np.random.default_rng(3))


def test_zero_weights_give_zero_output():
    net = QNetwork.initialise((5, 4, 7), np.random.default_rng(0))
    zero = net.with_flat_parameters(np.zeros(net.flat_parameters().size))
    np.testing.assert_array_equal(forward(zero, np.ones(5)), np.zeros(7))


def test_output_bias_passes_through():
    weights = (np.zeros((5, 4)), np.zeros((4, 7)))
    biases = (np.zeros(4), np.arange(7, dtype=np.float64))
    net = QNetwork(weights, biases)
    np.testing.assert_array_equal(net.forward(np.full(5, 0.3)), np.arange(7))


def test_batch_rows_are_independent(net: QNetwork):
    obs = np.random.default_rng(1).uniform(-1, 1, size=(6, 5))
    batched = net.forward(obs)
    for row in range(obs.shape[0]):
        np.testing.assert_allclose(batched[row], net.forward(obs[row]))


def test_initialise_layout(net: QNetwork):
    assert net.layer_sizes == (5, 8, 6, 7)
    assert [p.shape for p in net.parameters()] == [(5, 8), (8,), (8, 6), (6,), (6, 7), (7,)]
    assert all(np.all(b == 0) for b in net.biases)


def test_gradients_match_finite_differences(net: QNetwork):
    rng = np.random.default_rng(11)
    obs = rng.uniform(-1, 1, size=(4, 5))
    actions = rng.integers(0, 7, size=4)
    targets = rng.uniform(0, 1, size=4)
    _, grads = net.gradients(obs, actions, targets)
    analytic = np.concatenate([g.ravel() for g in grads])
    flat = net.flat_parameters()
    h = 1e-6
    for index in rng.choice(flat.size, size=20, replace=False):
        step = np.zeros_like(flat)
        step[index] = h
        up, _ = net.with_flat_parameters(flat + step).gradients(obs, actions, targets)
        down, _ = net.with_flat_parameters(flat - step).gradients(obs, actions, targets)
        numeric = (up - down) / (2 * h)
        assert analytic[index] == pytest.approx(numeric, rel=1e-4, abs=1e-7)


def test_constant_output_shift_keeps_argmax(net: QNetwork):
    obs = np.random.default_rng(2).uniform(-1, 1, size=(10, 5))
    shifted = QNetwork(net.weights, (*net.biases[:-1], net.biases[-1] + 4.2))
    np.testing.assert_array_equal(np.argmax(net.forward(obs), axis=1), np.argmax(shifted.forward(obs), axis=1))


def test_mismatched_layers_are_rejected():
    with pytest.raises(ValueError, match="do not chain"):
        QNetwork((np.zeros((5, 4)), np.zeros((3, 7))), (np.zeros(4), np.zeros(7)))


def test_flat_parameters_have_expected_length(net: QNetwork):
    with pytest.raises(ValueError, match="expected"):
        net.with_flat_parameters(np.zeros(3))
