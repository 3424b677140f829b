"""Numerical verification battery for the library's identities and bounds.

Each check exercises one provable property end to end on seeded random
instances: decoder equivalences, loss identities, the constant offset that
justifies training on complementary one-hots, the decoding error bounds,
analytic gradients, and URE unbiasedness. `run_all` prints one line per
check and returns False when anything fails.
"""

import numpy as np

from .data import ComplementaryDataset, LabeledDataset
from .decode import decode_l1, decode_max
from .losses import kl_divergence, scel, softmax
from .models import (
    FixedTransitionMode,
    LinearModel,
    MLPModel,
    SoftmaxComplementMode,
    TrainableTransitionMode,
    scel_loss_and_grads,
)
from .transition import TransitionMatrix, mix_uniform_noise, perturbation_radius, uniform_transition
from .validate import decoding_error_bound, empirical_zero_one, exact_estimation_risk, ure_zero_one


def _random_simplex(rng, n, k):
    return rng.dirichlet(np.ones(k), size=n)


def _random_clean_matrix(rng, k) -> TransitionMatrix:
    rows = np.zeros((k, k))
    for i in range(k):
        off = rng.dirichlet(np.ones(k - 1))
        rows[i, np.arange(k) != i] = off
    return TransitionMatrix(rows)


def check_decoder_equivalence(seed=0, n=10_000) -> tuple:
    """Under the uniform matrix, max decoding, L1 decoding, and the smallest
    estimate coordinate all agree (away from ties)."""
    rng = np.random.default_rng(seed)
    for k in (3, 5, 10):
        u = uniform_transition(k)
        probs = _random_simplex(rng, n, k)
        sorted_p = np.sort(probs, axis=1)
        probs = probs[sorted_p[:, 1] - sorted_p[:, 0] > 1e-9]
        argmin = np.argmin(probs, axis=1) + 1
        if not np.array_equal(decode_l1(probs, u), argmin):
            return False, f"L1 decoder disagrees with argmin at K={k}"
        if not np.array_equal(decode_max(probs, u), argmin):
            return False, f"max decoder disagrees with argmin at K={k}"
    return True, "L1 = max = argmin on uniform matrices, K in {3, 5, 10}"


def check_scl_identity(seed=0, trials=100, k=10, tol=1e-9) -> tuple:
    """Training through a uniform transition layer equals the negative log of
    the complement coordinate plus log(K-1)."""
    rng = np.random.default_rng(seed)
    u = uniform_transition(k)
    mode = FixedTransitionMode(u)
    worst = 0.0
    for _ in range(trials):
        d, n = int(rng.integers(3, 8)), int(rng.integers(5, 40))
        model = LinearModel.init(d, k, rng, scale=2.0)
        x = rng.standard_normal((n, d))
        ybar = rng.integers(1, k + 1, size=n)
        base = model.forward(x)[0]
        through_layer = scel(mode.apply(base), ybar)
        scl_loss = float(np.mean(-np.log(1.0 - base[np.arange(n), ybar - 1])))
        worst = max(worst, abs(through_layer - scl_loss - np.log(k - 1)))
    return worst < tol, f"max |L_cpe - L_scl - log(K-1)| = {worst:.3e}"


def check_constant_offset(seed=0, n=50, k=3, trials=10, tol=1e-9) -> tuple:
    """Replacing transition rows by complementary one-hots shifts the exact
    KL objective by a constant independent of the estimator."""
    rng = np.random.default_rng(seed)
    t = uniform_transition(k)
    y = rng.integers(1, k + 1, size=n)
    offsets = []
    for _ in range(trials):
        probs = _random_simplex(rng, n, k)
        onehot_side = float(np.mean(
            [(t.rows[yi - 1] * -np.log(p)).sum() for yi, p in zip(y, probs)]
        ))
        row_side = float(np.mean(
            [kl_divergence(p, t.rows[yi - 1]) for yi, p in zip(y, probs)]
        ))
        offsets.append(onehot_side - row_side)
    spread = max(offsets) - min(offsets)
    return spread < tol, f"offset spread over {trials} estimators = {spread:.3e}"


def check_error_bounds(seed=0, trials=100, n=60, tol=1e-12) -> tuple:
    """Decoded zero-one error never exceeds the generic, KL, or
    inaccurate-matrix bound on exact finite populations."""
    rng = np.random.default_rng(seed)
    for trial in range(trials):
        k = int(rng.choice([3, 10]))
        lam = float(rng.choice([0.0, 0.2, 0.5]))
        t = _random_clean_matrix(rng, k)
        gamma = t.geometry.gamma_l1
        generating = mix_uniform_noise(t, lam)
        eps = perturbation_radius(generating, t)
        y = rng.integers(1, k + 1, size=n)
        pop = LabeledDataset(features=rng.standard_normal((n, 2)), labels=y, k=k)
        probs = _random_simplex(rng, n, k)
        r01 = empirical_zero_one(decode_l1(probs, t), y)
        risk_l1 = exact_estimation_risk(probs, pop, generating, loss="l1")
        risk_kl = exact_estimation_risk(probs, pop, generating, loss="kl")
        generic = decoding_error_bound(risk_l1, gamma, loss="generic", epsilon=eps)
        kl_form = decoding_error_bound(risk_kl, gamma, loss="kl", epsilon=eps)
        if r01 > generic + tol:
            return False, f"generic bound violated at trial {trial}"
        if r01 > kl_form + tol:
            return False, f"KL bound violated at trial {trial}"
    return True, f"bounds held on {trials} random populations"


def check_gradients(seed=0, trials=20, h=1e-5, tol=1e-4) -> tuple:
    """Analytic SCEL gradients match central finite differences."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for trial in range(trials):
        k = int(rng.integers(3, 5))
        d = int(rng.integers(2, 5))
        n = int(rng.integers(3, 7))
        if trial % 2 == 0:
            model = LinearModel.init(d, k, rng, scale=1.5)
        else:
            model = MLPModel.init(d, int(rng.integers(3, 6)), k, rng, scale=1.5)
        mode = [
            TrainableTransitionMode(rng.standard_normal((k, k))),
            FixedTransitionMode(_random_clean_matrix(rng, k)),
            SoftmaxComplementMode(),
        ][trial % 3]
        x = rng.standard_normal((n, d))
        ybar = rng.integers(1, k + 1, size=n)
        _, grads, dlogits = scel_loss_and_grads(model, mode, x, ybar)
        if mode.trainable:
            grads = dict(grads)
            grads["logits"] = dlogits

        def loss_at():
            return scel_loss_and_grads(model, mode, x, ybar)[0]

        for name, grad in grads.items():
            target = mode.logits if name == "logits" else model.params[name]
            fd = np.zeros_like(target)
            flat_t = target.reshape(-1)
            flat_fd = fd.reshape(-1)
            for j in range(flat_t.size):
                orig = flat_t[j]
                flat_t[j] = orig + h
                up = loss_at()
                flat_t[j] = orig - h
                down = loss_at()
                flat_t[j] = orig
                flat_fd[j] = (up - down) / (2 * h)
            denom = max(np.linalg.norm(grad), np.linalg.norm(fd), 1e-12)
            worst = max(worst, np.linalg.norm(grad - fd) / denom)
    return worst < tol, f"max relative gradient error = {worst:.3e}"


def check_ure_unbiased(seed=0, n=40, k=3, tol=1e-10) -> tuple:
    """With every complementary label enumerated, URE equals the true
    zero-one error for uniform matrices."""
    rng = np.random.default_rng(seed)
    t = uniform_transition(k)
    y = rng.integers(1, k + 1, size=n)
    preds = rng.integers(1, k + 1, size=n)
    # uniform rows weight each non-label equally, so enumeration = expectation
    feats, ybar, idx = [], [], []
    for i in range(n):
        for j in range(1, k + 1):
            if j != y[i]:
                feats.append([0.0, 0.0])
                ybar.append(j)
                idx.append(i)
    comp = ComplementaryDataset(
        features=np.array(feats), complementary_labels=np.array(ybar), k=k
    )
    ure = ure_zero_one(preds[np.array(idx)], comp, t)
    truth = empirical_zero_one(preds, y)
    return abs(ure - truth) < tol, f"|URE - R01| = {abs(ure - truth):.3e}"


def check_dm_equivalence(seed=0, n=2000, k=5) -> tuple:
    """Decoding softmax(1 - f) against the uniform matrix recovers argmax f."""
    rng = np.random.default_rng(seed)
    u = uniform_transition(k)
    f = _random_simplex(rng, n, k)
    sorted_f = np.sort(f, axis=1)
    f = f[sorted_f[:, -1] - sorted_f[:, -2] > 1e-9]
    decoded = decode_l1(softmax(1.0 - f), u)
    return (
        np.array_equal(decoded, np.argmax(f, axis=1) + 1),
        "softmax-complement decoding equals argmax of the base output",
    )


def check_pinsker_chain(seed=0, trials=100, n=50, k=4, tol=1e-12) -> tuple:
    """L1 estimation risk is at most 2 sqrt(2 KL risk) on exact populations."""
    rng = np.random.default_rng(seed)
    t = uniform_transition(k)
    y = rng.integers(1, k + 1, size=n)
    pop = LabeledDataset(features=rng.standard_normal((n, 2)), labels=y, k=k)
    for _ in range(trials):
        probs = _random_simplex(rng, n, k)
        l1 = exact_estimation_risk(probs, pop, t, loss="l1")
        kl = exact_estimation_risk(probs, pop, t, loss="kl")
        if l1 > 2.0 * np.sqrt(2.0 * kl) + tol:
            return False, f"L1 risk {l1} exceeded 2 sqrt(2 KL) = {2*np.sqrt(2*kl)}"
    return True, f"chain held on {trials} random estimators"


ALL_CHECKS = (
    ("decoder-equivalence", check_decoder_equivalence),
    ("scl-identity", check_scl_identity),
    ("constant-offset", check_constant_offset),
    ("error-bounds", check_error_bounds),
    ("gradients", check_gradients),
    ("ure-unbiased", check_ure_unbiased),
    ("dm-equivalence", check_dm_equivalence),
    ("pinsker-chain", check_pinsker_chain),
)


def run_all(seed: int = 0, out=print) -> bool:
    ok = True
    for name, fn in ALL_CHECKS:
        passed, detail = fn(seed=seed)
        ok = ok and passed
        out(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    return ok
