from __future__ import annotations

import numpy as np
import pytest

from commgrid.neural import (
    Gradients,
    Mlp,
    ReplayBuffer,
    Transition,
    adam_init,
    adam_step,
    backward,
    forward,
    mlp_init,
)


def numeric_gradients(mlp: Mlp, x: np.ndarray, grad_out: np.ndarray, h: float = 1e-5) -> Gradients:
    """Central finite differences of loss = sum(output * grad_out).

    Independent of the backward pass: only calls forward.
    """

    def loss() -> float:
        out, _ = forward(mlp, x)
        return float(np.sum(out * grad_out))

    grads = []
    for p in mlp.params():
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + h
            up = loss()
            p[idx] = orig - h
            down = loss()
            p[idx] = orig
            g[idx] = (up - down) / (2 * h)
        grads.append(g)
    return Gradients(*grads)


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    scale = np.maximum(np.abs(a) + np.abs(b), 1e-8)
    return float(np.max(np.abs(a - b) / scale))


class TestInit:
    def test_shapes(self, rng):
        mlp = mlp_init(8, 32, 5, rng)
        assert mlp.w1.shape == (8, 32)
        assert mlp.b1.shape == (32,)
        assert mlp.w2.shape == (32, 5)
        assert mlp.b2.shape == (5,)
        assert np.all(mlp.b1 == 0) and np.all(mlp.b2 == 0)

    def test_same_seed_identical(self):
        a = mlp_init(8, 32, 5, np.random.default_rng(3))
        b = mlp_init(8, 32, 5, np.random.default_rng(3))
        for pa, pb in zip(a.params(), b.params()):
            assert np.array_equal(pa, pb)

    def test_weights_within_fan_in_bound(self, rng):
        mlp = mlp_init(8, 32, 5, rng)
        assert np.all(np.abs(mlp.w1) <= 1 / np.sqrt(8))
        assert np.all(np.abs(mlp.w2) <= 1 / np.sqrt(32))

    def test_bad_dims_rejected(self, rng):
        with pytest.raises(ValueError):
            mlp_init(0, 32, 5, rng)
        with pytest.raises(ValueError):
            mlp_init(8, -1, 5, rng)


class TestForward:
    def test_zero_net_outputs_zero(self):
        mlp = Mlp(np.zeros((8, 4)), np.zeros(4), np.zeros((4, 3)), np.zeros(3))
        out, _ = forward(mlp, np.ones(8))
        assert np.all(out == 0)

    def test_hand_computed_scalar_net(self):
        # 1-1-1 net: relu(2*1 + 1) = 3, then 3*3 + 0 = 9.
        mlp = Mlp(np.array([[2.0]]), np.array([1.0]), np.array([[3.0]]), np.array([0.0]))
        out, _ = forward(mlp, np.array([1.0]))
        assert out[0] == 9.0

    def test_relu_dead_region(self):
        mlp = Mlp(np.array([[2.0]]), np.array([1.0]), np.array([[3.0]]), np.array([0.0]))
        out, _ = forward(mlp, np.array([-1.0]))
        assert out[0] == 0.0

    def test_batch_matches_single(self, rng):
        mlp = mlp_init(8, 16, 5, rng)
        xs = rng.normal(size=(7, 8))
        batch_out, _ = forward(mlp, xs)
        for i in range(7):
            single, _ = forward(mlp, xs[i])
            assert np.allclose(single, batch_out[i])

    def test_dimension_mismatch_rejected(self, rng):
        mlp = mlp_init(8, 16, 5, rng)
        with pytest.raises(ValueError):
            forward(mlp, np.ones(7))


class TestBackward:
    def test_zero_output_gradient_gives_zero_gradients(self, rng):
        mlp = mlp_init(8, 16, 5, rng)
        x = rng.normal(size=8)
        _, cache = forward(mlp, x)
        grads = backward(mlp, cache, np.zeros(5))
        for g in grads.arrays():
            assert np.all(g == 0)

    def test_matches_finite_differences_on_100_random_cases(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            dims = rng.integers(1, 6, size=3)
            mlp = mlp_init(int(dims[0]), int(dims[1]), int(dims[2]), rng)
            x = rng.normal(size=int(dims[0]))
            grad_out = rng.normal(size=int(dims[2]))
            _, cache = forward(mlp, x)
            analytic = backward(mlp, cache, grad_out)
            numeric = numeric_gradients(mlp, x, grad_out)
            for a, n in zip(analytic.arrays(), numeric.arrays()):
                assert relative_error(a, n) < 1e-4

    def test_dead_relu_unit_gets_zero_gradient(self):
        # Hidden unit 0 has negative pre-activation for x=1: no gradient flows.
        mlp = Mlp(
            w1=np.array([[-1.0, 1.0]]),
            b1=np.zeros(2),
            w2=np.array([[1.0], [1.0]]),
            b2=np.zeros(1),
        )
        _, cache = forward(mlp, np.array([1.0]))
        grads = backward(mlp, cache, np.array([1.0]))
        assert grads.w1[0, 0] == 0.0
        assert grads.w1[0, 1] != 0.0

    def test_mismatched_cache_rejected(self, rng):
        big = mlp_init(8, 16, 5, rng)
        small = mlp_init(4, 8, 3, rng)
        _, cache = forward(big, rng.normal(size=8))
        with pytest.raises(ValueError):
            backward(small, cache, np.zeros(3))
        with pytest.raises(ValueError):
            backward(big, cache, np.zeros(4))


class TestAdam:
    def test_zero_gradient_leaves_parameters(self, rng):
        mlp = mlp_init(8, 16, 5, rng)
        before = [p.copy() for p in mlp.params()]
        state = adam_init(mlp)
        zero = Gradients(*[np.zeros_like(p) for p in mlp.params()])
        adam_step(mlp, zero, state, lr=1e-3)
        assert state.t == 1
        for p, b in zip(mlp.params(), before):
            assert np.array_equal(p, b)

    def test_first_step_magnitude_is_about_lr(self, rng):
        mlp = mlp_init(4, 4, 2, rng)
        before = [p.copy() for p in mlp.params()]
        grads = Gradients(*[np.full_like(p, 0.37) for p in mlp.params()])
        adam_step(mlp, grads, adam_init(mlp), lr=1e-3)
        for p, b in zip(mlp.params(), before):
            # Bias correction makes the first update ~lr per component.
            assert np.allclose(np.abs(p - b), 1e-3, rtol=1e-4)

    def test_converges_on_shifted_quadratic(self):
        # Minimize (w - 3)^2 from w = 0 with lr 1e-3 via direct iteration.
        mlp = Mlp(np.array([[0.0]]), np.zeros(1), np.zeros((1, 1)), np.zeros(1))
        state = adam_init(mlp)
        for _ in range(20_000):
            g = 2.0 * (mlp.w1[0, 0] - 3.0)
            grads = Gradients(np.array([[g]]), np.zeros(1), np.zeros((1, 1)), np.zeros(1))
            adam_step(mlp, grads, state, lr=1e-3)
        assert abs(mlp.w1[0, 0] - 3.0) < 0.01

    def test_shape_mismatch_rejected(self, rng):
        mlp = mlp_init(8, 16, 5, rng)
        bad = Gradients(np.zeros((2, 2)), np.zeros(16), np.zeros((16, 5)), np.zeros(5))
        with pytest.raises(ValueError):
            adam_step(mlp, bad, adam_init(mlp), lr=1e-3)

    def test_one_step_decreases_convex_loss(self, rng):
        # forward/backward/adam on a fixed linear-regression batch.
        mlp = mlp_init(3, 8, 1, rng)
        xs = rng.normal(size=(16, 3))
        ys = xs @ np.array([[1.0], [-2.0], [0.5]])
        state = adam_init(mlp)

        def loss_and_grads():
            out, cache = forward(mlp, xs)
            err = out - ys
            return float(np.mean(err**2)), backward(mlp, cache, 2 * err / len(xs))

        before, grads = loss_and_grads()
        adam_step(mlp, grads, state, lr=1e-4)
        after, _ = loss_and_grads()
        assert after < before


def _tr(value: float) -> Transition:
    return Transition(
        obs=np.full(8, value),
        move=0,
        symbol=None,
        reward=value,
        next_obs=np.zeros(8),
        done=False,
    )


class TestReplayBuffer:
    def test_overflow_evicts_oldest(self):
        buf = ReplayBuffer(2000)
        for i in range(2001):
            buf.push(_tr(float(i)))
        assert len(buf) == 2000
        rewards = {t.reward for t in buf._store}
        assert 0.0 not in rewards and 2000.0 in rewards

    def test_sample_from_single_element_buffer(self, rng):
        buf = ReplayBuffer(10)
        buf.push(_tr(7.0))
        batch = buf.sample(1, rng)
        assert batch is not None and batch[0].reward == 7.0

    def test_insertion_order_preserved_until_eviction(self):
        buf = ReplayBuffer(5)
        for i in range(5):
            buf.push(_tr(float(i)))
        assert [t.reward for t in buf._store] == [0.0, 1.0, 2.0, 3.0, 4.0]
        buf.push(_tr(5.0))
        assert [t.reward for t in buf._store] == [5.0, 1.0, 2.0, 3.0, 4.0]

    def test_insufficient_data_signal(self, rng):
        buf = ReplayBuffer(2000)
        for i in range(31):
            buf.push(_tr(float(i)))
        assert buf.sample(32, rng) is None

    def test_full_buffer_sampling(self, rng):
        buf = ReplayBuffer(2000)
        for i in range(2000):
            buf.push(_tr(float(i)))
        batch = buf.sample(32, rng)
        assert len(batch) == 32
        stored = {t.reward for t in buf._store}
        assert all(t.reward in stored for t in batch)

    def test_sampling_is_uniform_over_slots(self):
        # Binomial 3-sigma band per slot over many single draws.
        buf = ReplayBuffer(10)
        for i in range(10):
            buf.push(_tr(float(i)))
        rng = np.random.default_rng(17)
        n = 20_000
        counts = np.zeros(10)
        for t in buf.sample(n, rng):
            counts[int(t.reward)] += 1
        p = 1 / 10
        sigma = np.sqrt(p * (1 - p) / n)
        assert np.all(np.abs(counts / n - p) < 3 * sigma + 1e-12)

    def test_capacity_never_exceeded(self, rng):
        buf = ReplayBuffer(7)
        for i in range(100):
            buf.push(_tr(float(i)))
            assert len(buf) <= 7

    def test_deterministic_under_seed(self):
        buf = ReplayBuffer(100)
        for i in range(50):
            buf.push(_tr(float(i)))
        a = [t.reward for t in buf.sample(32, np.random.default_rng(1))]
        b = [t.reward for t in buf.sample(32, np.random.default_rng(1))]
        assert a == b

    def test_bad_capacity_rejected(self):
        with pytest.raises(ValueError):
            ReplayBuffer(0)
