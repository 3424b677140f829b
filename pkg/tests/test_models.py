import math

import numpy as np
import pytest
from pytest import approx

from cll import (
    BaseSpec,
    FixedTransitionMode,
    IdentityMode,
    LinearModel,
    MLPModel,
    SoftmaxComplementMode,
    TrainConfig,
    TrainableTransitionMode,
    TrainingDivergedError,
    apply_hypothesis_mode,
    decode_l1,
    empirical_zero_one,
    init_trainable_transition,
    load_checkpoint,
    make_gaussian_blobs,
    save_checkpoint,
    scel,
    scel_loss_and_grads,
    split_train_validation,
    synthesize_complementary,
    train,
    trainable_transition_matrix,
    uniform_transition,
)
from cll.transition import TransitionMatrix


def make_split(k=3, d=8, n=200, sep=8.0, seed=0, t=None):
    rng = np.random.default_rng(seed)
    data = make_gaussian_blobs(k, d, n, sep, rng)
    t = t or uniform_transition(k)
    comp = synthesize_complementary(data, t, rng)
    return split_train_validation(comp, 0.1, rng), t


class TestHypothesisModes:
    def test_identity_unchanged(self):
        p = np.array([[0.2, 0.3, 0.5]])
        np.testing.assert_array_equal(apply_hypothesis_mode(IdentityMode(), p), p)

    def test_fixed_onehot_selects_row(self):
        t = uniform_transition(3)
        out = apply_hypothesis_mode(FixedTransitionMode(t), np.array([[1.0, 0, 0]]))
        np.testing.assert_allclose(out, [[0.0, 0.5, 0.5]])

    def test_fixed_output_is_hull_combination(self):
        rng = np.random.default_rng(0)
        t = uniform_transition(4)
        for _ in range(50):
            p = rng.dirichlet(np.ones(4))
            out = apply_hypothesis_mode(FixedTransitionMode(t), p)
            reconstructed = sum(p[i] * t.rows[i] for i in range(4))
            np.testing.assert_allclose(out, reconstructed, atol=1e-12)

    def test_softmax_complement_uniform_fixed_point(self):
        p = np.full((1, 5), 0.2)
        out = apply_hypothesis_mode(SoftmaxComplementMode(), p)
        np.testing.assert_allclose(out, 0.2, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            FixedTransitionMode(uniform_transition(3)).apply(np.ones((1, 4)) / 4)

    def test_all_modes_emit_simplex_rows(self):
        rng = np.random.default_rng(1)
        t = uniform_transition(5)
        modes = [IdentityMode(), FixedTransitionMode(t),
                 TrainableTransitionMode.from_transition(t),
                 SoftmaxComplementMode()]
        probs = rng.dirichlet(np.ones(5), size=100)
        for mode in modes:
            out = mode.apply(probs)
            assert np.all(out >= 0)
            np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-9)


class TestTrainableTransition:
    def test_zero_logits_give_uniform(self):
        t = trainable_transition_matrix(np.zeros((4, 4)))
        np.testing.assert_allclose(t.rows, 0.25)

    def test_row_softmax_hand_value(self):
        t = trainable_transition_matrix([[10.0, 0, 0], [0, 10.0, 0], [0, 0, 10.0]])
        big = math.exp(10) / (math.exp(10) + 2)
        small = 1 / (math.exp(10) + 2)
        np.testing.assert_allclose(t.rows[0], [big, small, small], atol=1e-9)
        assert t.rows[0, 0] == approx(0.99990, abs=1e-4)

    def test_row_shift_invariance(self):
        rng = np.random.default_rng(2)
        w = rng.standard_normal((5, 5))
        shifted = w + rng.standard_normal((5, 1))
        np.testing.assert_allclose(
            trainable_transition_matrix(w).rows,
            trainable_transition_matrix(shifted).rows,
            atol=1e-12,
        )

    def test_init_recovers_positive_matrix(self):
        rng = np.random.default_rng(3)
        t = TransitionMatrix(rng.dirichlet(np.ones(4) * 5, size=4))
        w0 = init_trainable_transition(t)
        np.testing.assert_allclose(
            trainable_transition_matrix(w0).rows, t.rows, atol=1e-12
        )

    def test_init_floors_clean_diagonal(self):
        t = uniform_transition(3)
        rows = trainable_transition_matrix(init_trainable_transition(t, 1e-6)).rows
        assert np.all(np.diag(rows) < 1e-5)

    def test_init_strong_row_l1_error(self):
        rng = np.random.default_rng(4)
        from cll import biased_transition

        t = biased_transition(10, 0.75 / 3, 0.24 / 3, 0.01 / 3, rng)
        recovered = trainable_transition_matrix(init_trainable_transition(t)).rows
        gaps = np.abs(recovered - t.rows).sum(axis=1)
        assert np.all(gaps < 1e-4)


class TestGradients:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        h, worst = 1e-5, 0.0
        for trial in range(20):
            k = int(rng.integers(3, 5))
            d = int(rng.integers(2, 5))
            n = int(rng.integers(3, 8))
            model = (LinearModel.init(d, k, rng, scale=1.5) if trial % 2 == 0
                     else MLPModel.init(d, 4, k, rng, scale=1.5))
            mode = [IdentityMode(),
                    FixedTransitionMode(uniform_transition(k)),
                    TrainableTransitionMode(rng.standard_normal((k, k))),
                    SoftmaxComplementMode()][trial % 4]
            x = rng.standard_normal((n, d))
            ybar = rng.integers(1, k + 1, size=n)
            _, grads, dlogits = scel_loss_and_grads(model, mode, x, ybar)
            if mode.trainable:
                grads["logits"] = dlogits
            for name, grad in grads.items():
                target = mode.logits if name == "logits" else model.params[name]
                flat = target.reshape(-1)
                fd = np.zeros_like(flat)
                for j in range(flat.size):
                    keep = flat[j]
                    flat[j] = keep + h
                    up = scel_loss_and_grads(model, mode, x, ybar)[0]
                    flat[j] = keep - h
                    down = scel_loss_and_grads(model, mode, x, ybar)[0]
                    flat[j] = keep
                    fd[j] = (up - down) / (2 * h)
                fd = fd.reshape(target.shape)
                rel = np.linalg.norm(grad - fd) / max(
                    np.linalg.norm(grad), np.linalg.norm(fd), 1e-12
                )
                worst = max(worst, rel)
        assert worst < 1e-4


class TestTraining:
    def test_reaches_population_optimum(self):
        # the fixed uniform layer caps attainable SCEL at the mean row
        # entropy, log 2 for three classes; training should get close
        split, t = make_split(n=500)
        cfg = TrainConfig(learning_rate=1e-3, epochs=30, batch_size=64, seed=0)
        est = train("linear", FixedTransitionMode(t), split, cfg)
        assert abs(est.curves.train_scel[-1] - np.log(2)) < 0.05

    def test_zero_epochs_keeps_initialization(self):
        split, t = make_split(n=50)
        cfg = TrainConfig(learning_rate=1e-3, epochs=0, seed=0, batch_size=16)
        est = train(BaseSpec("linear", init_scale=0.0),
                    FixedTransitionMode(t), split, cfg)
        assert est.curves.train_scel == []
        np.testing.assert_array_equal(est.base.weights, 0.0)
        # symmetric (all-zero) init puts every output at the uniform point
        got = scel(est.predict_proba(split.train.features),
                   split.train.complementary_labels)
        assert got == approx(np.log(3), abs=1e-9)

    def test_identical_seeds_bitwise_identical(self):
        split, t = make_split(n=100)
        cfg = TrainConfig(learning_rate=1e-3, epochs=5, batch_size=32, seed=42)
        a = train("mlp", TrainableTransitionMode.from_transition(t), split, cfg)
        b = train("mlp", TrainableTransitionMode.from_transition(t), split, cfg)
        assert a.curves.train_scel == b.curves.train_scel
        np.testing.assert_array_equal(a.base.weights1, b.base.weights1)
        np.testing.assert_array_equal(a.mode.logits, b.mode.logits)

    def test_trainable_logits_move(self):
        split, t = make_split(n=100)
        mode = TrainableTransitionMode.from_transition(t)
        before = mode.logits.copy()
        cfg = TrainConfig(learning_rate=1e-2, epochs=3, batch_size=32, seed=0)
        est = train("linear", mode, split, cfg)
        assert not np.allclose(est.mode.logits, before)
        np.testing.assert_array_equal(mode.logits, before)  # input untouched

    def test_divergence_reports_last_finite_epoch(self):
        split, t = make_split(n=100)
        cfg = TrainConfig(learning_rate=1e200, epochs=10, batch_size=32, seed=0)
        with pytest.raises(TrainingDivergedError) as err:
            with np.errstate(over="ignore", invalid="ignore"):
                train("mlp", IdentityMode(), split, cfg)
        assert err.value.last_finite_epoch == 0

    def test_validation_curve_recorded(self):
        split, t = make_split(n=100)
        cfg = TrainConfig(learning_rate=1e-3, epochs=7, batch_size=32, seed=0)
        est = train("linear", FixedTransitionMode(t), split, cfg)
        assert len(est.curves.train_scel) == len(est.curves.val_scel) == 7

    def test_mlp_trains_on_blobs(self):
        split, t = make_split(n=300, seed=5)
        cfg = TrainConfig(learning_rate=1e-3, epochs=20, batch_size=64, seed=0)
        est = train(BaseSpec("mlp", hidden=32), FixedTransitionMode(t), split, cfg)
        fresh = make_gaussian_blobs(3, 8, 200, 8.0, np.random.default_rng(77))
        preds = decode_l1(est.predict_proba(fresh.features), t)
        assert 1 - empirical_zero_one(preds, fresh.labels) > 0.95


class TestCheckpoint:
    def test_round_trip_exact(self, tmp_path):
        split, t = make_split(n=60)
        cfg = TrainConfig(learning_rate=1e-3, epochs=2, batch_size=32, seed=1)
        est = train("mlp", TrainableTransitionMode.from_transition(t), split, cfg)
        path = tmp_path / "model.json"
        save_checkpoint(est, path)
        loaded = load_checkpoint(path)
        for name, value in est.base.params.items():
            np.testing.assert_array_equal(loaded.base.params[name], value)
        np.testing.assert_array_equal(loaded.mode.logits, est.mode.logits)
        x = split.validation.features
        np.testing.assert_array_equal(loaded.predict_proba(x), est.predict_proba(x))

    def test_fixed_mode_round_trip(self, tmp_path):
        split, t = make_split(n=60)
        cfg = TrainConfig(learning_rate=1e-3, epochs=1, batch_size=32, seed=1)
        est = train("linear", FixedTransitionMode(t), split, cfg)
        path = tmp_path / "model.json"
        save_checkpoint(est, path)
        loaded = load_checkpoint(path)
        assert loaded.mode.transition == t

    def test_unknown_version_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"version": 99}')
        with pytest.raises(ValueError, match="version"):
            load_checkpoint(path)
