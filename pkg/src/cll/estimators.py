"""Scikit-learn style estimators for learning from complementary labels.

`CPEClassifier` trains a differentiable complementary-probability model and
decodes ordinary labels against the transition rows. `KnnCPEClassifier` does
the same with neighbor-count probability estimates over PCA features, which
needs no gradients at all. Both follow the fit/predict/get_params protocol,
take X as an (N, d) float matrix and y as complementary labels in 1..K, and
expose `predict_proba` as the complementary-label estimate.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.neighbors import NearestNeighbors
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .data import ComplementaryDataset, split_train_validation
from .decode import decode_l1, decode_max
from .models import (
    FixedTransitionMode,
    IdentityMode,
    BaseSpec,
    SoftmaxComplementMode,
    TrainableTransitionMode,
    TrainConfig,
    train,
)
from .transition import TransitionMatrix, uniform_transition

MODE_NAMES = ("identity", "fixed", "trainable", "softmax-complement")


def _validated(X, y):
    X, y = check_X_y(X, y, dtype=float, y_numeric=True)
    y = y.astype(int)
    if y.min() < 1:
        raise ValueError("complementary labels must be 1-based (values in 1..K)")
    return X, y


def _resolve_transition(transition, n_classes, y):
    if transition is not None:
        return transition
    k = n_classes if n_classes is not None else int(y.max())
    return uniform_transition(k)


class CPEClassifier(ClassifierMixin, BaseEstimator):
    """Complementary-probability estimator with transition-row decoding.

    Parameters
    ----------
    transition : TransitionMatrix or None
        Matrix assumed to have generated the complementary labels; decoding
        is done against its rows. None builds the uniform matrix for the
        inferred class count.
    mode : str
        Hypothesis mode: "identity", "fixed", "trainable" or
        "softmax-complement". "fixed" and "trainable" put a transition layer
        on top of the base model; "trainable" lets it move during training.
    base : str
        "linear" or "mlp" (one hidden rectifier layer of `hidden` units).
    decoder : str
        "l1" (nearest transition row) or "max" (invert the transition).
    validation_fraction : float
        Held-out share used for the per-epoch validation loss curve; 0
        trains on everything and leaves the validation curve empty.
    """

    def __init__(self, transition=None, mode="fixed", base="linear", hidden=64,
                 learning_rate=1e-3, weight_decay=1e-4, epochs=30,
                 batch_size=256, decoder="l1", validation_fraction=0.1,
                 init_scale=1.0, n_classes=None, seed=0):
        self.transition = transition
        self.mode = mode
        self.base = base
        self.hidden = hidden
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.epochs = epochs
        self.batch_size = batch_size
        self.decoder = decoder
        self.validation_fraction = validation_fraction
        self.init_scale = init_scale
        self.n_classes = n_classes
        self.seed = seed

    def _make_mode(self, t: TransitionMatrix):
        if self.mode == "identity":
            return IdentityMode()
        if self.mode == "fixed":
            return FixedTransitionMode(t)
        if self.mode == "trainable":
            return TrainableTransitionMode.from_transition(t)
        if self.mode == "softmax-complement":
            return SoftmaxComplementMode()
        raise ValueError(f"mode must be one of {MODE_NAMES}, got {self.mode!r}")

    def fit(self, X, y):
        X, y = _validated(X, y)
        t = _resolve_transition(self.transition, self.n_classes, y)
        if y.max() > t.k:
            raise ValueError(f"labels exceed the matrix class count {t.k}")
        if self.decoder not in ("l1", "max"):
            raise ValueError(f"decoder must be 'l1' or 'max', got {self.decoder!r}")
        data = ComplementaryDataset(features=X, complementary_labels=y, k=t.k)
        split = data
        if self.validation_fraction > 0:
            split = split_train_validation(
                data, self.validation_fraction,
                np.random.default_rng(self.seed),
            )
        config = TrainConfig(
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            weight_decay=self.weight_decay,
            batch_size=self.batch_size,
            seed=self.seed,
        )
        spec = BaseSpec(kind=self.base, hidden=self.hidden,
                        init_scale=self.init_scale)
        self.estimator_ = train(spec, self._make_mode(t), split, config)
        self.transition_ = t
        self.classes_ = np.arange(1, t.k + 1)
        self.n_features_in_ = X.shape[1]
        self.curves_ = self.estimator_.curves
        return self

    def predict_proba(self, X):
        """Complementary probability estimates, one simplex row per sample."""
        check_is_fitted(self, "estimator_")
        X = check_array(X, dtype=float)
        return self.estimator_.predict_proba(X)

    def predict(self, X):
        decode = decode_l1 if self.decoder == "l1" else decode_max
        return decode(self.predict_proba(X), self.transition_)


class PrincipalComponents(TransformerMixin, BaseEstimator):
    """Projection onto the top principal directions of the mean-centered
    covariance, computed by eigendecomposition. Each component's
    largest-magnitude coordinate is made positive so the projection is
    deterministic."""

    def __init__(self, dims=32):
        self.dims = dims

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        n, d = X.shape
        if self.dims > min(n, d) or self.dims < 1:
            raise ValueError(f"dims must lie in 1..min(N, d)={min(n, d)}, got {self.dims}")
        self.mean_ = X.mean(axis=0)
        centered = X - self.mean_
        cov = centered.T @ centered / max(n - 1, 1)
        eigvals, eigvecs = np.linalg.eigh(cov)
        order = np.argsort(eigvals)[::-1][: self.dims]
        components = eigvecs[:, order].T
        flip = components[np.arange(self.dims),
                          np.argmax(np.abs(components), axis=1)] < 0
        components[flip] *= -1.0
        self.components_ = components
        self.explained_variance_ = eigvals[order]
        self.n_features_in_ = d
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = check_array(X, dtype=float)
        return (X - self.mean_) @ self.components_.T

    def inverse_transform(self, Z):
        check_is_fitted(self, "components_")
        return np.asarray(Z, dtype=float) @ self.components_ + self.mean_


class KnnCPEClassifier(ClassifierMixin, BaseEstimator):
    """Complementary probability estimates from neighbor counts.

    The estimate for class j is (count of complementary label j among the
    n_neighbors nearest training points + alpha) / (n_neighbors + K alpha);
    the additive smoothing keeps validation SCEL finite. Neighbors are found
    by Euclidean distance in PCA space (pca_dims, clamped to the data size).
    """

    def __init__(self, transition=None, n_neighbors=10, alpha=1.0,
                 pca_dims=32, n_classes=None):
        self.transition = transition
        self.n_neighbors = n_neighbors
        self.alpha = alpha
        self.pca_dims = pca_dims
        self.n_classes = n_classes

    def fit(self, X, y):
        if self.n_neighbors < 1 or self.alpha <= 0:
            raise ValueError("need n_neighbors >= 1 and alpha > 0")
        X, y = _validated(X, y)
        t = _resolve_transition(self.transition, self.n_classes, y)
        if y.max() > t.k:
            raise ValueError(f"labels exceed the matrix class count {t.k}")
        self.transition_ = t
        self.pca_ = PrincipalComponents(
            dims=min(self.pca_dims, X.shape[0], X.shape[1])
        ).fit(X)
        projected = self.pca_.transform(X)
        self.index_ = NearestNeighbors(n_neighbors=self.n_neighbors).fit(projected)
        self.labels_ = y
        self.classes_ = np.arange(1, t.k + 1)
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "index_")
        X = check_array(X, dtype=float)
        _, idx = self.index_.kneighbors(self.pca_.transform(X))
        neighbor_labels = self.labels_[idx]  # (N, n_neighbors)
        k = self.transition_.k
        counts = np.stack(
            [(neighbor_labels == c).sum(axis=1) for c in range(1, k + 1)], axis=1
        ).astype(float)
        return (counts + self.alpha) / (self.n_neighbors + k * self.alpha)

    def predict(self, X):
        return decode_l1(self.predict_proba(X), self.transition_)
