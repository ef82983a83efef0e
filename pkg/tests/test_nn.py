"""Numeric plumbing: seeded streams, init scaling, sigmoid, Adam."""

import numpy as np
import pytest

from tsadrl.errors import NonFiniteLoss
from tsadrl.nn import (
    Adam,
    STREAM_ACTION,
    STREAM_QNET_INIT,
    STREAM_VAE_INIT,
    check_finite,
    rng_for,
    sigmoid,
    xavier,
)


class TestRngStreams:
    def test_same_pair_same_draws(self):
        a = rng_for(7, STREAM_VAE_INIT).standard_normal(16)
        b = rng_for(7, STREAM_VAE_INIT).standard_normal(16)
        assert np.array_equal(a, b)

    def test_streams_are_independent(self):
        a = rng_for(7, STREAM_VAE_INIT).standard_normal(16)
        b = rng_for(7, STREAM_QNET_INIT).standard_normal(16)
        assert not np.array_equal(a, b)

    def test_seeds_are_independent(self):
        a = rng_for(7, STREAM_ACTION).standard_normal(16)
        b = rng_for(8, STREAM_ACTION).standard_normal(16)
        assert not np.array_equal(a, b)


class TestXavier:
    def test_shape(self):
        w = xavier(rng_for(0, 0), 5, 3)
        assert w.shape == (5, 3)

    def test_scale_tracks_fan_sizes(self):
        # std should follow sqrt(2 / (fan_in + fan_out))
        rng = rng_for(1, 0)
        w = xavier(rng, 400, 400)
        expected = np.sqrt(2.0 / 800.0)
        assert abs(w.std() - expected) / expected < 0.05


class TestSigmoid:
    def test_half_at_zero(self):
        assert sigmoid(np.array([0.0]))[0] == 0.5

    def test_symmetry(self):
        x = np.linspace(-6, 6, 25)
        np.testing.assert_allclose(sigmoid(x) + sigmoid(-x), np.ones_like(x), atol=1e-12)

    def test_extreme_inputs_do_not_overflow(self):
        with np.errstate(over="raise"):
            out = sigmoid(np.array([-1e4, -50.0, 50.0, 1e4]))
        assert np.all(np.isfinite(out))
        assert out[0] == 0.0 and out[-1] == 1.0

    def test_matches_naive_formula_in_safe_range(self):
        x = np.linspace(-20, 20, 101)
        np.testing.assert_allclose(sigmoid(x), 1.0 / (1.0 + np.exp(-x)), rtol=1e-12)


class TestCheckFinite:
    def test_passes_through(self):
        assert check_finite(1.25, "loss") == 1.25

    @pytest.mark.parametrize("bad", [float("nan"), float("inf"), float("-inf")])
    def test_raises_on_non_finite(self, bad):
        with pytest.raises(NonFiniteLoss):
            check_finite(bad, "loss")


class TestAdam:
    def test_first_step_moves_by_lr(self):
        # Bias correction makes the first update lr * g / (|g| + eps).
        params = {"w": np.array([1.0, -2.0])}
        grads = {"w": np.array([0.3, -0.7])}
        opt = Adam(lr=0.01)
        opt.step(params, grads)
        np.testing.assert_allclose(params["w"], [1.0 - 0.01, -2.0 + 0.01], atol=1e-6)

    def test_matches_reference_implementation(self):
        # Independent reimplementation of the update rule, run for 50 steps.
        rng = np.random.default_rng(99)
        p_ours = {"w": rng.standard_normal(8)}
        p_ref = {k: v.copy() for k, v in p_ours.items()}
        m = np.zeros(8)
        v = np.zeros(8)
        opt = Adam(lr=3e-3)
        for t in range(1, 51):
            g = np.sin(p_ref["w"]) + 0.1 * t
            opt.step(p_ours, {"w": np.sin(p_ours["w"]) + 0.1 * t})
            m = 0.9 * m + 0.1 * g
            v = 0.999 * v + 0.001 * g * g
            mhat = m / (1.0 - 0.9**t)
            vhat = v / (1.0 - 0.999**t)
            p_ref["w"] = p_ref["w"] - 3e-3 * mhat / (np.sqrt(vhat) + 1e-8)
        np.testing.assert_allclose(p_ours["w"], p_ref["w"], atol=1e-10)

    def test_descends_a_quadratic(self):
        params = {"w": np.array([5.0])}
        opt = Adam(lr=0.1)
        for _ in range(500):
            opt.step(params, {"w": 2.0 * params["w"]})
        assert abs(params["w"][0]) < 1e-2

    def test_state_is_per_parameter(self):
        params = {"a": np.ones(2), "b": np.ones(3)}
        opt = Adam(lr=0.01)
        opt.step(params, {"a": np.ones(2), "b": np.zeros(3)})
        assert not np.allclose(params["a"], 1.0)
        np.testing.assert_allclose(params["b"], 1.0)
