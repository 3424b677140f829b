"""Differentiable complementary-probability models.

A base model maps features to a probability simplex through a terminal
softmax. A hypothesis mode reshapes that output into the complementary
probability estimate that the SCEL objective trains against:

  identity             q = p
  fixed transition     q = T^t p        (output confined to the hull of T's rows)
  trainable transition q = T(W)^t p     with T(W) = rowwise softmax of W
  softmax complement   q = softmax(1 - p)

Gradients are computed analytically; `scel_loss_and_grads` is the single
source of truth that the finite-difference checks verify.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .data import SplitPair
from .exceptions import TrainingDivergedError
from .losses import LOG_CLAMP, scel, softmax
from .transition import TransitionMatrix


# --------------------------------------------------------------------------
# base models


class LinearModel:
    """Softmax regression: p = softmax(x W + b)."""

    kind = "linear"

    def __init__(self, weights: np.ndarray, bias: np.ndarray):
        self.weights = np.array(weights, dtype=float)
        self.bias = np.array(bias, dtype=float)

    @classmethod
    def init(cls, d: int, k: int, rng: np.random.Generator, scale: float = 1.0):
        bound = scale / np.sqrt(d)
        return cls(
            rng.uniform(-bound, bound, size=(d, k)),
            rng.uniform(-bound, bound, size=k),
        )

    @property
    def k(self) -> int:
        return self.weights.shape[1]

    @property
    def params(self) -> dict:
        return {"weights": self.weights, "bias": self.bias}

    def forward(self, x):
        p = softmax(x @ self.weights + self.bias)
        return p, (x, p)

    def backward(self, cache, dprobs):
        x, p = cache
        dz = p * (dprobs - (dprobs * p).sum(axis=1, keepdims=True))
        return {"weights": x.T @ dz, "bias": dz.sum(axis=0)}

    def copy(self):
        return LinearModel(self.weights.copy(), self.bias.copy())


class MLPModel:
    """One hidden rectifier layer: p = softmax(relu(x W1 + b1) W2 + b2)."""

    kind = "mlp"

    def __init__(self, weights1, bias1, weights2, bias2):
        self.weights1 = np.array(weights1, dtype=float)
        self.bias1 = np.array(bias1, dtype=float)
        self.weights2 = np.array(weights2, dtype=float)
        self.bias2 = np.array(bias2, dtype=float)

    @classmethod
    def init(cls, d, hidden, k, rng: np.random.Generator, scale: float = 1.0):
        b1 = scale / np.sqrt(d)
        b2 = scale / np.sqrt(hidden)
        return cls(
            rng.uniform(-b1, b1, size=(d, hidden)),
            rng.uniform(-b1, b1, size=hidden),
            rng.uniform(-b2, b2, size=(hidden, k)),
            rng.uniform(-b2, b2, size=k),
        )

    @property
    def k(self) -> int:
        return self.weights2.shape[1]

    @property
    def params(self) -> dict:
        return {
            "weights1": self.weights1,
            "bias1": self.bias1,
            "weights2": self.weights2,
            "bias2": self.bias2,
        }

    def forward(self, x):
        pre = x @ self.weights1 + self.bias1
        h = np.maximum(pre, 0.0)
        p = softmax(h @ self.weights2 + self.bias2)
        return p, (x, pre, h, p)

    def backward(self, cache, dprobs):
        x, pre, h, p = cache
        dz = p * (dprobs - (dprobs * p).sum(axis=1, keepdims=True))
        dh = dz @ self.weights2.T
        dpre = dh * (pre > 0.0)
        return {
            "weights1": x.T @ dpre,
            "bias1": dpre.sum(axis=0),
            "weights2": h.T @ dz,
            "bias2": dz.sum(axis=0),
        }

    def copy(self):
        return MLPModel(
            self.weights1.copy(), self.bias1.copy(),
            self.weights2.copy(), self.bias2.copy(),
        )


@dataclass(frozen=True)
class BaseSpec:
    """Recipe for a base model; materialized by `train` from its seed."""

    kind: str = "linear"
    hidden: int = 64
    init_scale: float = 1.0

    def build(self, d: int, k: int, rng: np.random.Generator):
        if self.kind == "linear":
            return LinearModel.init(d, k, rng, self.init_scale)
        if self.kind == "mlp":
            return MLPModel.init(d, self.hidden, k, rng, self.init_scale)
        raise ValueError(f"unknown base model kind {self.kind!r}")


# --------------------------------------------------------------------------
# hypothesis modes


def trainable_transition_matrix(w) -> TransitionMatrix:
    """Rowwise softmax of a raw K x K matrix; always row-stochastic with
    strictly positive entries."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError(f"expected a square matrix, got {w.shape}")
    return TransitionMatrix(softmax(w))


def init_trainable_transition(t: TransitionMatrix, floor: float = 1e-6) -> np.ndarray:
    """Logits whose rowwise softmax reproduces `t` up to the floor placed
    under zero entries (exact softmax(log .) needs strictly positive rows)."""
    if floor <= 0:
        raise ValueError(f"floor must be positive, got {floor}")
    return np.log(np.maximum(t.rows, floor))


class IdentityMode:
    kind = "identity"
    trainable = False

    def apply(self, probs):
        return np.asarray(probs, dtype=float)

    def backward(self, probs, comp_probs, dcomp):
        return dcomp, None

    def clone(self):
        return self


class FixedTransitionMode:
    """Left-multiplies by the transition transpose, so a batch row p becomes
    the convex combination sum_i p_i T_i of transition rows."""

    kind = "fixed"
    trainable = False

    def __init__(self, transition: TransitionMatrix):
        self.transition = transition

    def apply(self, probs):
        p = np.asarray(probs, dtype=float)
        if p.shape[-1] != self.transition.k:
            raise ValueError(
                f"dimension mismatch: probs {p.shape[-1]} vs matrix {self.transition.k}"
            )
        return p @ self.transition.rows

    def backward(self, probs, comp_probs, dcomp):
        return dcomp @ self.transition.rows.T, None

    def clone(self):
        return self


class TrainableTransitionMode:
    """Like the fixed mode but the matrix is the rowwise softmax of raw
    logits that receive gradients during training."""

    kind = "trainable"
    trainable = True

    def __init__(self, logits: np.ndarray):
        self.logits = np.array(logits, dtype=float)

    @classmethod
    def from_transition(cls, t: TransitionMatrix, floor: float = 1e-6):
        return cls(init_trainable_transition(t, floor))

    def matrix(self) -> np.ndarray:
        return softmax(self.logits)

    def apply(self, probs):
        p = np.asarray(probs, dtype=float)
        if p.shape[-1] != self.logits.shape[0]:
            raise ValueError(
                f"dimension mismatch: probs {p.shape[-1]} vs logits {self.logits.shape[0]}"
            )
        return p @ self.matrix()

    def backward(self, probs, comp_probs, dcomp):
        t = self.matrix()
        dprobs = dcomp @ t.T
        dt = probs.T @ dcomp
        dlogits = t * (dt - (dt * t).sum(axis=1, keepdims=True))
        return dprobs, dlogits

    def clone(self):
        return TrainableTransitionMode(self.logits.copy())


class SoftmaxComplementMode:
    kind = "softmax_complement"
    trainable = False

    def apply(self, probs):
        return softmax(1.0 - np.asarray(probs, dtype=float))

    def backward(self, probs, comp_probs, dcomp):
        q = comp_probs
        du = q * (dcomp - (dcomp * q).sum(axis=1, keepdims=True))
        return -du, None

    def clone(self):
        return self


def apply_hypothesis_mode(mode, base_output):
    """Map a base-model simplex output through a hypothesis mode."""
    return mode.apply(base_output)


# --------------------------------------------------------------------------
# SCEL gradients and optimization


def scel_loss_and_grads(model, mode, x, comp_labels):
    """SCEL over a batch plus analytic gradients.

    Returns (loss, base model grads dict, transition-logit grads or None).
    The clamp under the log makes the loss flat below LOG_CLAMP, so its
    gradient there is exactly zero.
    """
    probs, cache = model.forward(x)
    comp = mode.apply(probs)
    n = x.shape[0]
    rows = np.arange(n)
    picked = comp[rows, comp_labels - 1]
    loss = float(np.mean(-np.log(np.maximum(picked, LOG_CLAMP))))
    dcomp = np.zeros_like(comp)
    live = picked > LOG_CLAMP
    dcomp[rows[live], comp_labels[live] - 1] = -1.0 / (n * picked[live])
    dprobs, dlogits = mode.backward(probs, comp, dcomp)
    grads = model.backward(cache, dprobs)
    return loss, grads, dlogits


class Adam:
    """Adam with bias correction; weight decay is folded into the gradient."""

    def __init__(self, learning_rate, weight_decay=0.0,
                 beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = learning_rate
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = {}
        self._v = {}

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        for name, p in params.items():
            g = grads[name] + self.weight_decay * p
            m = self._m.get(name, 0.0)
            v = self._v.get(name, 0.0)
            m = self.beta1 * m + (1.0 - self.beta1) * g
            v = self.beta2 * v + (1.0 - self.beta2) * g * g
            self._m[name] = m
            self._v[name] = v
            m_hat = m / (1.0 - self.beta1 ** self.t)
            v_hat = v / (1.0 - self.beta2 ** self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float
    epochs: int
    weight_decay: float = 1e-4
    batch_size: int | None = 256  # None trains full-batch
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.weight_decay < 0:
            raise ValueError("learning rate must be positive, weight decay nonnegative")
        if self.epochs < 0 or (self.batch_size is not None and self.batch_size < 1):
            raise ValueError("epochs must be nonnegative and batch size positive")


@dataclass
class TrainingCurves:
    train_scel: list = field(default_factory=list)
    val_scel: list = field(default_factory=list)


class FittedEstimator:
    """A trained base model plus its hypothesis mode."""

    def __init__(self, base, mode, curves: TrainingCurves | None = None):
        self.base = base
        self.mode = mode
        self.curves = curves if curves is not None else TrainingCurves()

    @property
    def k(self) -> int:
        return self.base.k

    def base_proba(self, x) -> np.ndarray:
        """Simplex output of the base model before the hypothesis mode."""
        return self.base.forward(np.asarray(x, dtype=float))[0]

    def predict_proba(self, x) -> np.ndarray:
        """Complementary probability estimates, one simplex row per sample."""
        return self.mode.apply(self.base_proba(x))


def train(base, mode, split, config: TrainConfig) -> FittedEstimator:
    """Minimize SCEL on the train split with mini-batch Adam.

    `split` is a SplitPair or a bare ComplementaryDataset (then no validation
    curve is recorded). Batch order reshuffles every epoch from the config
    seed, so identical seeds and configs reproduce bit-identical results.
    Per-epoch train and validation SCEL are recorded; a non-finite epoch loss
    aborts with the last finite epoch index.
    """
    if isinstance(base, str):
        base = BaseSpec(kind=base)
    if isinstance(split, SplitPair):
        tr, val = split.train, split.validation
    else:
        tr, val = split, None
    rng = np.random.default_rng(config.seed)
    model = base.build(tr.d, tr.k, rng)
    mode = mode.clone()
    if mode.apply(np.full((1, tr.k), 1.0 / tr.k)).shape[-1] != tr.k:
        raise ValueError("hypothesis mode and dataset disagree on class count")

    opt = Adam(config.learning_rate, config.weight_decay,
               config.beta1, config.beta2, config.eps)
    curves = TrainingCurves()
    n = tr.n
    batch = config.batch_size or n
    x, ybar = tr.features, tr.complementary_labels
    last_finite = 0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            _, grads, dlogits = scel_loss_and_grads(model, mode, x[idx], ybar[idx])
            params = dict(model.params)
            if mode.trainable:
                params["transition_logits"] = mode.logits
                grads["transition_logits"] = dlogits
            opt.step(params, grads)
        train_loss = scel(mode.apply(model.forward(x)[0]), ybar)
        if not np.isfinite(train_loss):
            raise TrainingDivergedError(last_finite)
        last_finite = epoch
        curves.train_scel.append(train_loss)
        if val is not None:
            curves.val_scel.append(
                scel(mode.apply(model.forward(val.features)[0]),
                     val.complementary_labels)
            )
    return FittedEstimator(model, mode, curves)


# --------------------------------------------------------------------------
# checkpoints

CHECKPOINT_VERSION = 1


def _mode_to_dict(mode) -> dict:
    d = {"kind": mode.kind}
    if mode.kind == "fixed":
        d["transition"] = mode.transition.rows.tolist()
    elif mode.kind == "trainable":
        d["logits"] = mode.logits.tolist()
    return d


def _mode_from_dict(d) -> object:
    kind = d["kind"]
    if kind == "identity":
        return IdentityMode()
    if kind == "fixed":
        return FixedTransitionMode(TransitionMatrix(d["transition"]))
    if kind == "trainable":
        return TrainableTransitionMode(np.array(d["logits"]))
    if kind == "softmax_complement":
        return SoftmaxComplementMode()
    raise ValueError(f"unknown mode kind {kind!r}")


def save_checkpoint(estimator: FittedEstimator, path) -> None:
    """JSON checkpoint of parameter arrays and the mode tag. Floats are
    written with shortest-roundtrip repr, so reloads are bit-exact."""
    payload = {
        "version": CHECKPOINT_VERSION,
        "base": {
            "kind": estimator.base.kind,
            "params": {k: v.tolist() for k, v in estimator.base.params.items()},
        },
        "mode": _mode_to_dict(estimator.mode),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_checkpoint(path) -> FittedEstimator:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload.get('version')}")
    params = {k: np.array(v) for k, v in payload["base"]["params"].items()}
    kind = payload["base"]["kind"]
    if kind == "linear":
        base = LinearModel(params["weights"], params["bias"])
    elif kind == "mlp":
        base = MLPModel(params["weights1"], params["bias1"],
                        params["weights2"], params["bias2"])
    else:
        raise ValueError(f"unknown base model kind {kind!r}")
    return FittedEstimator(base, _mode_from_dict(payload["mode"]))
