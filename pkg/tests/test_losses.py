import numpy as np
import pytest
from pytest import approx

from cll import kl_divergence, scel, softmax


class TestSoftmax:
    def test_sums_to_one(self):
        rng = np.random.default_rng(0)
        p = softmax(rng.standard_normal((100, 5)))
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(p >= 0)

    def test_overflow_safe(self):
        p = softmax(np.array([1e4, 0.0, -1e4]))
        assert np.all(np.isfinite(p))
        assert p[0] == approx(1.0)

    def test_shift_invariant(self):
        z = np.array([0.3, -1.2, 2.0])
        np.testing.assert_allclose(softmax(z), softmax(z + 17.0), atol=1e-15)


class TestKlDivergence:
    def test_self_divergence_is_zero(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            p = rng.dirichlet(np.ones(6))
            assert kl_divergence(p, p) == approx(0.0, abs=1e-15)

    def test_onehot_target_single_term(self):
        # only the target's coordinate contributes: -log 0.5 = log 2
        got = kl_divergence([0.5, 0.25, 0.25], [1.0, 0.0, 0.0])
        assert got == approx(np.log(2))

    def test_uniform_vs_onehot(self):
        for k in (3, 5, 10):
            got = kl_divergence(np.full(k, 1 / k), np.eye(k)[0])
            assert got == approx(np.log(k))

    def test_zero_estimate_clamped(self):
        got = kl_divergence([0.0, 1.0], [0.5, 0.5])
        assert np.isfinite(got) and got > 0

    def test_nonnegative_on_random_pairs(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            p, q = rng.dirichlet(np.ones(4), size=2)
            assert kl_divergence(p, q) >= -1e-15

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            kl_divergence([0.5, 0.5], [0.3, 0.3, 0.4])


class TestScel:
    def test_perfect_onehot_estimates(self):
        labels = np.array([1, 3, 2])
        probs = np.eye(3)[labels - 1]
        assert scel(probs, labels) == approx(0.0, abs=1e-12)

    def test_uniform_predictor(self):
        for k in (3, 7):
            probs = np.full((20, k), 1 / k)
            labels = np.arange(20) % k + 1
            assert scel(probs, labels) == approx(np.log(k))

    def test_single_sample_hand_value(self):
        assert scel(np.array([[0.5, 0.25, 0.25]]), np.array([1])) == approx(
            0.6931, abs=1e-4
        )

    def test_zero_probability_clamped(self):
        probs = np.array([[0.0, 1.0, 0.0]])
        assert np.isfinite(scel(probs, np.array([1])))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            scel(np.eye(3), np.array([1, 2]))
