"""LSTM forward/backward correctness, optimizers, and the training loop."""

import math

import numpy as np
import pytest

from curvetransfer.errors import TrainingDivergenceError
from curvetransfer.seqnet import (
    PARAM_NAMES,
    CellState,
    TrainConfig,
    backward,
    evaluate_loss,
    forward_sequence,
    gradient_check,
    init_params,
    loss_mse,
    lstm_cell_forward,
    optimizer_step,
    init_optimizer_state,
    train,
)


def zero_params(input_dim=2, hidden_dim=3):
    params = init_params(0, input_dim, hidden_dim)
    for name in PARAM_NAMES:
        getattr(params, name)[:] = 0.0
    return params


class TestInitParams:
    def test_deterministic(self):
        a = init_params(123, 3, 8)
        b = init_params(123, 3, 8)
        for name in PARAM_NAMES:
            np.testing.assert_array_equal(getattr(a, name), getattr(b, name))

    def test_shapes(self):
        p = init_params(0, 3, 32)
        assert p.W_fx.shape == (32, 3)
        assert p.W_fh.shape == (32, 32)
        assert p.b_f.shape == (32,)
        assert p.W_out.shape == (1, 32)
        assert p.b_out.shape == (1,)

    def test_seeds_differ(self):
        a = init_params(1, 3, 4)
        b = init_params(2, 3, 4)
        assert not np.array_equal(a.W_fx, b.W_fx)

    def test_biases_zero_and_bounds(self):
        p = init_params(7, 5, 6)
        assert np.all(p.b_f == 0) and np.all(p.b_out == 0)
        s = math.sqrt(6.0 / (5 + 6))
        assert np.all(np.abs(p.W_fx) <= s)


class TestCellForward:
    def test_all_zero_params(self):
        params = zero_params()
        state, cache = lstm_cell_forward(params, np.zeros(2), CellState.zeros(3))
        np.testing.assert_allclose(cache.f, 0.5)
        np.testing.assert_allclose(cache.i, 0.5)
        np.testing.assert_allclose(cache.o, 0.5)
        np.testing.assert_allclose(cache.g, 0.0)
        np.testing.assert_allclose(state.c, 0.0)
        np.testing.assert_allclose(state.h, 0.0)

    def test_forget_gate_saturation_preserves_cell(self):
        params = zero_params()
        params.b_f[:] = 50.0  # sigmoid saturates to ~1
        prev = CellState(h=np.zeros(3), c=np.array([0.3, -0.7, 1.2]))
        state, _ = lstm_cell_forward(params, np.zeros(2), prev)
        np.testing.assert_allclose(state.c, prev.c, rtol=1e-12)

    def test_activation_ranges(self):
        rng = np.random.default_rng(3)
        params = init_params(3, 4, 8)
        state = CellState.zeros(8)
        for _ in range(50):
            state, cache = lstm_cell_forward(params, rng.normal(size=4), state)
            for gate in (cache.f, cache.i, cache.o):
                assert np.all((gate > 0) & (gate < 1))
            assert np.all(np.abs(state.h) < 1)
            assert np.all(np.isfinite(state.c))

    def test_dimension_mismatch(self):
        params = zero_params(input_dim=2)
        with pytest.raises(ValueError, match="expected shape"):
            lstm_cell_forward(params, np.zeros(5), CellState.zeros(3))


def scalar_lstm_reference(params, window):
    """Independent hidden_dim=1 LSTM implemented with plain Python floats."""
    assert params.hidden_dim == 1

    def sig(z):
        return 1.0 / (1.0 + math.exp(-z))

    h, c = 0.0, 0.0
    for row in window:
        x = [float(v) for v in row]
        zf = params.W_fh[0, 0] * h + sum(params.W_fx[0, j] * x[j] for j in range(len(x))) + params.b_f[0]
        zi = params.W_ih[0, 0] * h + sum(params.W_ix[0, j] * x[j] for j in range(len(x))) + params.b_i[0]
        zg = params.W_ch[0, 0] * h + sum(params.W_cx[0, j] * x[j] for j in range(len(x))) + params.b_c[0]
        zo = params.W_oh[0, 0] * h + sum(params.W_ox[0, j] * x[j] for j in range(len(x))) + params.b_o[0]
        f, i, g, o = sig(zf), sig(zi), math.tanh(zg), sig(zo)
        c = f * c + i * g
        h = o * math.tanh(c)
    return params.W_out[0, 0] * h + params.b_out[0]


class TestForwardSequence:
    def test_all_zero_params_predict_zero(self):
        params = zero_params()
        pred, caches = forward_sequence(params, np.ones((4, 2)))
        assert pred == 0.0
        assert len(caches) == 4

    def test_single_step_equals_cell_plus_output(self):
        params = init_params(9, 2, 3)
        x = np.array([[0.4, -0.2]])
        state, _ = lstm_cell_forward(params, x[0], CellState.zeros(3))
        expected = float(params.W_out[0] @ state.h + params.b_out[0])
        pred, _ = forward_sequence(params, x)
        assert abs(pred - expected) < 1e-15

    def test_matches_manual_cell_iteration(self):
        rng = np.random.default_rng(4)
        for trial in range(5):
            params = init_params(trial, 3, 8)
            window = rng.normal(size=(6, 3))
            state = CellState.zeros(8)
            for x_t in window:
                state, _ = lstm_cell_forward(params, x_t, state)
            expected = float(params.W_out[0] @ state.h + params.b_out[0])
            pred, caches = forward_sequence(params, window)
            assert abs(pred - expected) < 1e-12
            assert len(caches) == 6

    def test_matches_scalar_reference(self):
        rng = np.random.default_rng(17)
        for trial in range(10):
            params = init_params(100 + trial, 2, 1)
            for name in ("b_f", "b_i", "b_c", "b_o"):
                getattr(params, name)[:] = rng.normal(scale=2.0)
            window = rng.normal(size=(6, 2))
            pred, _ = forward_sequence(params, window)
            assert abs(pred - scalar_lstm_reference(params, window)) < 1e-12

    def test_saturated_gates_hand_value(self):
        # Forget open, input open, candidate saturated to tanh(large) = 1,
        # output open: after t steps c = t, h = tanh(t).
        params = zero_params(input_dim=1, hidden_dim=1)
        params.b_f[:] = 60.0
        params.b_i[:] = 60.0
        params.b_c[:] = 60.0
        params.b_o[:] = 60.0
        params.W_out[0, 0] = 1.0
        pred, _ = forward_sequence(params, np.zeros((3, 1)))
        assert abs(pred - math.tanh(3.0)) < 1e-9

    def test_empty_window_rejected(self):
        with pytest.raises(ValueError, match="non-empty"):
            forward_sequence(zero_params(), np.zeros((0, 2)))


class TestLossMse:
    def test_identical(self):
        assert loss_mse([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_three_four(self):
        assert loss_mse([0.0, 0.0], [3.0, 4.0]) == 12.5

    def test_single_pair(self):
        assert loss_mse([1.0], [2.0]) == 1.0

    def test_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            loss_mse([1.0], [1.0, 2.0])


class TestBackward:
    def test_zero_residual_zero_gradients(self):
        params = zero_params()
        window = np.ones((3, 2))
        pred, caches = forward_sequence(params, window)
        grads = backward(params, caches, window, target=pred)
        for name in PARAM_NAMES:
            np.testing.assert_array_equal(grads[name], 0.0)

    def test_output_bias_gradient(self):
        params = init_params(5, 2, 4)
        window = np.random.default_rng(0).normal(size=(3, 2))
        pred, caches = forward_sequence(params, window)
        target = pred - 1.5
        grads = backward(params, caches, window, target)
        assert abs(grads["b_out"][0] - 2.0 * (pred - target)) < 1e-12

    def test_cache_window_mismatch(self):
        params = init_params(5, 2, 4)
        window = np.zeros((3, 2))
        _, caches = forward_sequence(params, window)
        with pytest.raises(ValueError, match="mismatch"):
            backward(params, caches, np.zeros((4, 2)), 0.0)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(21)
        for trial in range(3):
            params = init_params(trial, 3, 4)
            window = rng.normal(size=(5, 3))
            target = float(rng.normal())
            assert gradient_check(params, window, target) < 1e-4


class TestGradientCheck:
    def test_injected_fault_detected(self):
        params = init_params(2, 3, 4)
        window = np.random.default_rng(2).normal(size=(5, 3))
        target = 0.7
        _, caches = forward_sequence(params, window)
        grads = backward(params, caches, window, target)
        grads["W_cx"][:] = 0.0
        assert gradient_check(params, window, target, grads=grads) > 0.5

    def test_zero_params_matching_target(self):
        params = zero_params()
        window = np.zeros((3, 2))
        assert gradient_check(params, window, target=0.0) == 0.0


class TestOptimizerStep:
    def test_sgd_arithmetic(self):
        config = TrainConfig(epochs=1, learning_rate=0.1, optimizer="sgd")
        params = zero_params()
        params.b_out[0] = 0.5
        grads = {name: np.zeros_like(getattr(params, name)) for name in PARAM_NAMES}
        grads["b_out"][0] = 1.0
        state = init_optimizer_state(params, config)
        optimizer_step(params, grads, config, state)
        assert abs(params.b_out[0] - 0.4) < 1e-15

    def test_zero_gradients_no_change(self):
        for optimizer in ("sgd", "adam"):
            config = TrainConfig(epochs=1, learning_rate=0.1, optimizer=optimizer)
            params = init_params(3, 2, 3)
            before = {name: getattr(params, name).copy() for name in PARAM_NAMES}
            grads = {name: np.zeros_like(getattr(params, name)) for name in PARAM_NAMES}
            state = init_optimizer_state(params, config)
            optimizer_step(params, grads, config, state)
            for name in PARAM_NAMES:
                np.testing.assert_array_equal(getattr(params, name), before[name])

    def test_two_sgd_steps_accumulate(self):
        config = TrainConfig(epochs=1, learning_rate=0.2, optimizer="sgd")
        params = zero_params()
        grads = {name: np.zeros_like(getattr(params, name)) for name in PARAM_NAMES}
        grads["b_c"][:] = 3.0
        state = init_optimizer_state(params, config)
        optimizer_step(params, grads, config, state)
        optimizer_step(params, grads, config, state)
        np.testing.assert_allclose(params.b_c, -2 * 0.2 * 3.0)


def line_task(n_windows=40, n=4):
    # Predict the next value of y = 0.8 x on a sliding window.
    xs = np.linspace(0.0, 1.0, n_windows + n)
    windows = [xs[i : i + n].reshape(-1, 1) for i in range(n_windows)]
    targets = [0.8 * xs[i + n] for i in range(n_windows)]
    return windows, np.array(targets)


class TestTrain:
    def test_zero_epochs_rejected(self):
        with pytest.raises(ValueError, match="epochs"):
            TrainConfig(epochs=0)

    def test_single_epoch_single_pass(self):
        windows, targets = line_task(10)
        params = init_params(0, 1, 4)
        _, history = train(params, windows, targets, TrainConfig(epochs=1, seed=0))
        assert len(history) == 1

    def test_loss_decreases_on_line_task(self):
        windows, targets = line_task()
        params = init_params(0, 1, 8)
        initial = evaluate_loss(params, windows, targets)
        params, history = train(
            params, windows, targets, TrainConfig(epochs=60, learning_rate=5e-3, seed=0)
        )
        assert history[-1] < history[0]
        assert evaluate_loss(params, windows, targets) < initial

    def test_deterministic_history(self):
        windows, targets = line_task(15)
        config = TrainConfig(epochs=5, seed=9)
        _, h1 = train(init_params(1, 1, 4), windows, targets, config)
        _, h2 = train(init_params(1, 1, 4), windows, targets, config)
        assert h1 == h2

    def test_divergence_aborts_with_epoch(self):
        windows, targets = line_task(10)
        params = init_params(0, 1, 4)
        config = TrainConfig(epochs=50, learning_rate=1e12, optimizer="sgd", seed=0)
        with pytest.raises(TrainingDivergenceError, match="epoch"):
            train(params, windows, targets, config)
