import numpy as np
import pytest
from pytest import approx

from cll import (
    ComplementaryDataset,
    LabeledDataset,
    SingularTransitionError,
    TransitionMatrix,
    assess,
    decode_l1,
    decoding_error_bound,
    empirical_zero_one,
    exact_estimation_risk,
    kl_divergence,
    mix_uniform_noise,
    perturbation_radius,
    scel_validate,
    select_model,
    ure_zero_one,
    uniform_transition,
)


class FrozenEstimator:
    """Estimator stub returning preassigned rows, keyed by position."""

    def __init__(self, probs):
        self.probs = np.asarray(probs, dtype=float)

    def predict_proba(self, features):
        return self.probs[: len(features)]


def random_population(rng, n, k):
    y = rng.integers(1, k + 1, size=n)
    return LabeledDataset(rng.standard_normal((n, 2)), y, k=k)


def random_clean(rng, k):
    rows = np.zeros((k, k))
    for i in range(k):
        rows[i, np.arange(k) != i] = rng.dirichlet(np.ones(k - 1))
    return TransitionMatrix(rows)


class TestScelValidate:
    def test_perfect_estimates(self):
        labels = np.array([2, 1, 3])
        data = ComplementaryDataset(np.zeros((3, 2)), labels, k=3)
        est = FrozenEstimator(np.eye(3)[labels - 1])
        assert scel_validate(est, data) == approx(0.0, abs=1e-12)

    def test_uniform_predictor(self):
        data = ComplementaryDataset(np.zeros((5, 2)), np.full(5, 2), k=4)
        est = FrozenEstimator(np.full((5, 4), 0.25))
        assert scel_validate(est, data) == approx(np.log(4))

    def test_argmin_matches_independent_recomputation(self):
        rng = np.random.default_rng(0)
        labels = rng.integers(1, 4, size=30)
        data = ComplementaryDataset(np.zeros((30, 2)), labels, k=3)
        candidates = []
        for i in range(6):
            probs = rng.dirichlet(np.ones(3), size=30)
            manual = -np.mean(np.log(probs[np.arange(30), labels - 1]))
            candidates.append((i, scel_validate(FrozenEstimator(probs), data), manual))
        by_library = min(candidates, key=lambda c: c[1])[0]
        by_oracle = min(candidates, key=lambda c: c[2])[0]
        assert by_library == by_oracle

    def test_dimension_mismatch(self):
        data = ComplementaryDataset(np.zeros((2, 2)), np.array([1, 2]), k=4)
        with pytest.raises(ValueError, match="dimension"):
            scel_validate(FrozenEstimator(np.full((2, 3), 1 / 3)), data)


class TestUre:
    def test_per_sample_values_uniform_k3(self):
        # U^{-1} = J - 2I for three classes, so each sample contributes
        # 0 when the prediction differs from the complementary label, 2 else
        t = uniform_transition(3)
        one = ComplementaryDataset(np.zeros((1, 2)), np.array([2]), k=3)
        assert ure_zero_one(np.array([1]), one, t) == approx(0.0, abs=1e-12)
        assert ure_zero_one(np.array([2]), one, t) == approx(2.0, abs=1e-12)

    def test_exact_enumeration_matches_zero_one(self):
        rng = np.random.default_rng(1)
        k, n = 3, 50
        t = uniform_transition(k)
        y = rng.integers(1, k + 1, size=n)
        preds = rng.integers(1, k + 1, size=n)
        # enumerate both complementary labels of every sample: for uniform
        # rows the plain average over the enumeration is the expectation
        idx, ybar = [], []
        for i in range(n):
            for j in range(1, k + 1):
                if j != y[i]:
                    idx.append(i)
                    ybar.append(j)
        comp = ComplementaryDataset(np.zeros((len(idx), 2)),
                                    np.array(ybar), k=k)
        got = ure_zero_one(np.array(preds)[idx], comp, t)
        assert got == approx(empirical_zero_one(preds, y), abs=1e-10)

    def test_all_correct_and_all_wrong(self):
        rng = np.random.default_rng(2)
        k, n = 3, 30
        t = uniform_transition(k)
        y = rng.integers(1, k + 1, size=n)
        idx, ybar = [], []
        for i in range(n):
            for j in range(1, k + 1):
                if j != y[i]:
                    idx.append(i)
                    ybar.append(j)
        comp = ComplementaryDataset(np.zeros((len(idx), 2)), np.array(ybar), k=k)
        assert ure_zero_one(y[idx], comp, t) == approx(0.0, abs=1e-12)
        wrong = y % k + 1  # shift every label to a guaranteed-wrong one
        assert ure_zero_one(wrong[np.array(idx)], comp, t) == approx(1.0, abs=1e-12)

    def test_singular_matrix_refused(self):
        row = [0.0, 0.5, 0.5]
        t = TransitionMatrix([row, row, [0.5, 0.5, 0.0]])
        data = ComplementaryDataset(np.zeros((2, 2)), np.array([2, 3]), k=3)
        with pytest.raises(SingularTransitionError):
            ure_zero_one(np.array([1, 1]), data, t)


class TestExactEstimationRisk:
    def test_realizable_oracle_is_zero(self):
        rng = np.random.default_rng(3)
        t = uniform_transition(3)
        pop = random_population(rng, 40, 3)
        probs = t.rows[pop.labels - 1]
        assert exact_estimation_risk(probs, pop, t, "kl") == approx(0.0, abs=1e-12)
        assert exact_estimation_risk(probs, pop, t, "l1") == approx(0.0, abs=1e-12)

    def test_uniform_estimator_closed_form(self):
        # sum over off-diagonal entries of (1/(K-1)) log((1/(K-1))/(1/K))
        rng = np.random.default_rng(4)
        for k in (3, 5):
            t = uniform_transition(k)
            pop = random_population(rng, 25, k)
            probs = np.full((25, k), 1.0 / k)
            expected = np.log(k / (k - 1))
            got = exact_estimation_risk(probs, pop, t, "kl")
            assert got == approx(expected, abs=1e-12)

    def test_pinsker_chain_on_random_estimators(self):
        rng = np.random.default_rng(5)
        t = uniform_transition(4)
        pop = random_population(rng, 30, 4)
        for _ in range(100):
            probs = rng.dirichlet(np.ones(4), size=30)
            l1 = exact_estimation_risk(probs, pop, t, "l1")
            kl = exact_estimation_risk(probs, pop, t, "kl")
            assert l1 <= 2.0 * np.sqrt(2.0 * kl) + 1e-12

    def test_accepts_estimator_objects(self):
        rng = np.random.default_rng(6)
        t = uniform_transition(3)
        pop = random_population(rng, 10, 3)
        probs = rng.dirichlet(np.ones(3), size=10)
        direct = exact_estimation_risk(probs, pop, t, "kl")
        wrapped = exact_estimation_risk(FrozenEstimator(probs), pop, t, "kl")
        assert direct == wrapped


class TestBound:
    def test_zero_risk_zero_bound(self):
        assert decoding_error_bound(0.0, 1.0, "kl") == 0.0
        assert decoding_error_bound(0.0, 0.5, "generic") == 0.0

    def test_kl_plugin_value(self):
        got = decoding_error_bound(0.01, 1.0, "kl")
        assert got == approx(4 * np.sqrt(2) * 0.1, abs=1e-12)
        assert got == approx(0.56569, abs=1e-5)

    def test_epsilon_half_gamma_adds_one(self):
        gamma = 0.7
        base = decoding_error_bound(0.2, gamma, "generic")
        with_eps = decoding_error_bound(0.2, gamma, "generic", epsilon=gamma / 2)
        assert with_eps - base == approx(1.0, abs=1e-12)

    def test_degenerate_gamma_rejected(self):
        with pytest.raises(ValueError, match="gamma"):
            decoding_error_bound(0.1, 0.0, "kl")

    def test_bound_holds_on_exact_populations(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            k = int(rng.choice([3, 10]))
            t = random_clean(rng, k)
            pop = random_population(rng, 40, k)
            probs = rng.dirichlet(np.ones(k), size=40)
            r01 = empirical_zero_one(decode_l1(probs, t), pop.labels)
            gamma = t.geometry.gamma_l1
            l1_risk = exact_estimation_risk(probs, pop, t, "l1")
            kl_risk = exact_estimation_risk(probs, pop, t, "kl")
            assert r01 <= decoding_error_bound(l1_risk, gamma, "generic") + 1e-12
            assert r01 <= decoding_error_bound(kl_risk, gamma, "kl") + 1e-12

    def test_inaccurate_matrix_bound_holds(self):
        rng = np.random.default_rng(8)
        for lam in (0.0, 0.2, 0.5):
            for _ in range(30):
                k = int(rng.choice([3, 10]))
                t = random_clean(rng, k)
                generating = mix_uniform_noise(t, lam)
                eps = perturbation_radius(generating, t)
                pop = random_population(rng, 40, k)
                probs = rng.dirichlet(np.ones(k), size=40)
                r01 = empirical_zero_one(decode_l1(probs, t), pop.labels)
                risk = exact_estimation_risk(probs, pop, generating, "kl")
                bound = decoding_error_bound(risk, t.geometry.gamma_l1, "kl",
                                             epsilon=eps)
                assert r01 <= bound + 1e-12


class TestEmpiricalZeroOne:
    def test_identical_and_disjoint(self):
        a = np.array([1, 2, 3])
        assert empirical_zero_one(a, a) == 0.0
        assert empirical_zero_one(a, np.array([2, 3, 1])) == 1.0

    def test_half_matching(self):
        assert empirical_zero_one(np.array([1, 1, 2, 2]),
                                  np.array([1, 1, 1, 1])) == 0.5

    def test_matches_counting_oracle(self):
        rng = np.random.default_rng(9)
        preds = rng.integers(1, 5, size=200)
        truth = rng.integers(1, 5, size=200)
        manual = sum(int(p == t) for p, t in zip(preds, truth)) / 200
        assert empirical_zero_one(preds, truth) == approx(1.0 - manual)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            empirical_zero_one(np.array([1]), np.array([1, 2]))


class TestSelectModel:
    def test_single_candidate(self):
        assert select_model([("only", 0.4)]) == "only"

    def test_argmin(self):
        assert select_model([("a", 0.9), ("b", 0.3), ("c", 0.5)]) == "b"

    def test_first_wins_ties(self):
        assert select_model([("a", 0.3), ("b", 0.3)]) == "a"

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="candidates"):
            select_model([])


class TestConstantOffset:
    def test_offset_constant_across_estimators(self):
        rng = np.random.default_rng(10)
        k, n = 3, 50
        t = uniform_transition(k)
        y = rng.integers(1, k + 1, size=n)
        offsets = []
        for _ in range(10):
            probs = rng.dirichlet(np.ones(k), size=n)
            # exact expectation over complementary labels weighted by rows
            onehot = np.mean([
                (t.rows[yi - 1] * -np.log(p)).sum() for yi, p in zip(y, probs)
            ])
            rows = np.mean([
                kl_divergence(p, t.rows[yi - 1]) for yi, p in zip(y, probs)
            ])
            offsets.append(onehot - rows)
        assert max(offsets) - min(offsets) < 1e-9
        # the offset equals the mean negative row entropy
        entropy = np.mean([
            -(row[row > 0] * np.log(row[row > 0])).sum()
            for row in t.rows[y - 1]
        ])
        assert offsets[0] == approx(entropy, abs=1e-9)
