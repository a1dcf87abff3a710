"""Seeded streams, Concrete sampling, and the categorical-uniform KL."""

import math

import numpy as np
import pytest

from guessgame.engine import Tape, backward, ops
from guessgame.engine.tensor import Tensor
from guessgame.rng import RngStream
from guessgame.sampling import (
    DistributionError, gumbel_softmax, kl_categorical_uniform, kl_from_probs,
    sample_categorical,
)


class TestRngStream:
    def test_same_triple_same_draws(self):
        a = RngStream(42, "x")
        b = RngStream(42, "x")
        assert a.uniform((4,)).tolist() == b.uniform((4,)).tolist()
        # counters advanced in lockstep -> still equal
        assert a.normal((3,)).tolist() == b.normal((3,)).tolist()

    def test_counter_matters(self):
        a = RngStream(42, "x", counter=0)
        b = RngStream(42, "x", counter=1)
        assert a.uniform((4,)).tolist() != b.uniform((4,)).tolist()

    def test_split_streams_are_independent(self):
        root = RngStream(7)
        u1 = root.split("worker1").uniform((8,))
        u2 = root.split("worker2").uniform((8,))
        assert not np.allclose(u1, u2)
        # splitting does not disturb the parent
        assert root.counter == 0


class TestGumbelSoftmax:
    def test_extreme_logit_dominates(self):
        rng = RngStream(1, "gs")
        hits = 0
        for _ in range(10_000):
            s = gumbel_softmax(np.array([20.0, 0.0]), 1.0, rng)
            hits += int(s.hard_index[0] == 0)
        assert hits >= 9990

    def test_low_temperature_saturates(self):
        # saturation fails only on near-ties of the perturbed logits (~1-3% of
        # draws); assert the bulk behavior here, the seeded strict instantiation
        # lives in the acceptance suite
        rng = RngStream(2, "gs")
        maxes = []
        for _ in range(500):
            s = gumbel_softmax(np.array([0.3, -0.2, 0.1]), 0.01, rng)
            maxes.append(s.soft.data.max())
        maxes = np.array(maxes)
        assert (maxes >= 0.99).mean() >= 0.95
        assert np.median(maxes) > 0.9999

    def test_fair_coin_within_3_sigma(self):
        rng = RngStream(3, "gs")
        n = 10_000
        hits = sum(int(gumbel_softmax(np.array([0.0, 0.0]), 1.0, rng).hard_index[0] == 0)
                   for _ in range(n))
        sigma = math.sqrt(n * 0.25)
        assert abs(hits - n / 2) <= 3 * sigma

    def test_soft_rows_normalized_and_hard_is_argmax(self):
        rng = RngStream(4, "gs")
        s = gumbel_softmax(np.zeros((6, 4)), 0.7, rng)
        assert np.abs(s.soft.data.sum(axis=1) - 1.0).max() < 1e-6
        assert (s.hard_index == s.soft.data.argmax(axis=1)).all()
        assert ((s.soft.data > 0) & (s.soft.data < 1)).all()

    def test_rejects_bad_inputs(self):
        rng = RngStream(5, "gs")
        with pytest.raises(DistributionError):
            gumbel_softmax(np.array([1.0]), 1.0, rng)
        with pytest.raises(DistributionError):
            gumbel_softmax(np.array([1.0, 2.0]), 0.0, rng)
        with pytest.raises(DistributionError):
            gumbel_softmax(np.array([np.inf, 0.0]), 1.0, rng)

    def test_gradient_matches_finite_differences_with_frozen_noise(self):
        noise = RngStream(6, "gs").gumbel((1, 4))
        logits = np.array([[0.4, -0.3, 0.2, 0.0]])
        temp = 0.8
        w = np.array([[0.7, -0.2, 0.5, 0.1]])

        def soft_loss(arr):
            t = Tensor(arr, requires_grad=True)
            with Tape() as tape:
                soft = ops.softmax_rows(ops.scale(ops.add(t, ops.const(noise)), 1.0 / temp))
                loss = ops.sum_all(ops.mul(soft, ops.const(w)))
            return t, tape, loss

        t, tape, loss = soft_loss(logits)
        backward(tape, loss)
        analytic = t.grad.copy()
        eps = 1e-4
        for j in range(4):
            up = logits.copy()
            up[0, j] += eps
            down = logits.copy()
            down[0, j] -= eps
            _, _, lu = soft_loss(up)
            _, _, ld = soft_loss(down)
            numeric = (lu.item() - ld.item()) / (2 * eps)
            assert abs(analytic[0, j] - numeric) / max(1.0, abs(numeric)) < 1e-4


class TestKL:
    def test_uniform_is_zero(self):
        logp = np.log(np.full((1, 4), 0.25))
        assert abs(kl_categorical_uniform(logp).item()) < 1e-9

    def test_one_hot_limit_is_log_k(self):
        p = np.array([1.0 - 1e-12, 1e-12])
        assert abs(kl_from_probs(p) - math.log(2)) < 1e-6

    def test_derived_value_07_03(self):
        # direct-summation oracle: log 2 - H(0.7, 0.3)
        expected = math.log(2) + 0.7 * math.log(0.7) + 0.3 * math.log(0.3)
        got = kl_categorical_uniform(np.log(np.array([[0.7, 0.3]]))).item()
        assert abs(got - expected) < 1e-9
        assert abs(expected - 0.0823) < 5e-4

    def test_matches_direct_summation_on_random_distributions(self):
        r = np.random.default_rng(0)
        for _ in range(100):
            k = int(r.integers(2, 9))
            p = r.random(k) + 1e-3
            p /= p.sum()
            oracle = float(np.sum(p * (np.log(p) + math.log(k))))
            got = kl_categorical_uniform(np.log(p)[None, :]).item()
            assert abs(got - oracle) < 1e-9
            assert -1e-12 <= got <= math.log(k) + 1e-12

    def test_zero_iff_uniform(self):
        r = np.random.default_rng(1)
        for _ in range(50):
            p = r.random(5) + 1e-3
            p /= p.sum()
            got = kl_categorical_uniform(np.log(p)[None, :]).item()
            is_uniform = np.abs(p - 0.2).max() < 1e-12
            assert (got < 1e-9) == is_uniform or got >= 0

    def test_rejects_unnormalized(self):
        with pytest.raises(DistributionError):
            kl_categorical_uniform(np.log(np.array([[0.5, 0.4]])))

    def test_differentiable(self):
        x = Tensor(np.array([[0.3, -0.2, 0.1]]), requires_grad=True)
        with Tape() as tape:
            lp = ops.log_softmax_rows(x)
            loss = ops.sum_all(kl_categorical_uniform(lp))
        backward(tape, loss)
        assert x.grad is not None and np.isfinite(x.grad).all()


class TestSampleCategorical:
    def test_degenerate(self):
        rng = RngStream(0, "cat")
        assert all(sample_categorical([1.0, 0.0, 0.0], rng) == 0 for _ in range(20))

    def test_uniform_histogram_within_3_sigma(self):
        rng = RngStream(1, "cat")
        n = 40_000
        counts = np.zeros(4, dtype=int)
        for _ in range(n):
            counts[sample_categorical([0.25] * 4, rng)] += 1
        sigma = math.sqrt(n * 0.25 * 0.75)
        assert (np.abs(counts - n / 4) <= 3 * sigma).all()

    def test_seeded_repeatability(self):
        seq1 = [sample_categorical([0.5, 0.5], RngStream(9, "s", counter=i)) for i in range(50)]
        seq2 = [sample_categorical([0.5, 0.5], RngStream(9, "s", counter=i)) for i in range(50)]
        assert seq1 == seq2

    def test_rejects_unnormalized(self):
        with pytest.raises(DistributionError):
            sample_categorical([0.5, 0.6], RngStream(0, "x"))
