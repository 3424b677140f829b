"""Model-selection metrics and the error bounds they certify.

SCEL on a held-out split is the primary selection metric: it needs no matrix
inversion and stays well defined even when the transition matrix is singular.
The unbiased risk estimator (URE) of the zero-one loss is provided for
comparison and refuses singular matrices.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import ComplementaryDataset, LabeledDataset
from .exceptions import SingularTransitionError
from .losses import kl_divergence, scel
from .transition import TransitionMatrix


def scel_empirical(estimator, dataset: ComplementaryDataset) -> float:
    """Mean negative log of the complementary-label coordinate of the
    estimator's output over a complementary dataset."""
    probs = estimator.predict_proba(dataset.features)
    if probs.shape[1] != dataset.k:
        raise ValueError(
            f"dimension mismatch: estimator {probs.shape[1]} vs dataset {dataset.k}"
        )
    return scel(probs, dataset.complementary_labels)


def scel_validate(estimator, validation: ComplementaryDataset) -> float:
    """SCEL on a validation split, the selection metric for hyperparameters."""
    return scel_empirical(estimator, validation)


def ure_zero_one(
    predictions, complementary: ComplementaryDataset, t: TransitionMatrix
) -> float:
    """Unbiased estimate of the ordinary zero-one risk from complementary
    labels: mean of e_ybar^t T^{-1} l(x), with l_k = 1 when the prediction
    differs from k. Can legitimately go negative on finite samples."""
    preds = np.asarray(predictions, dtype=int)
    if preds.shape[0] != complementary.n:
        raise ValueError("predictions and dataset disagree on sample count")
    if not t.geometry.invertible:
        raise SingularTransitionError("URE needs an invertible transition matrix")
    t_inv = np.linalg.solve(t.rows, np.eye(t.k))
    loss = 1.0 - np.eye(t.k)[preds - 1]  # (N, K) zero-one loss vectors
    picked = t_inv[complementary.complementary_labels - 1]
    return float(np.mean((picked * loss).sum(axis=1)))


def _estimates(estimator_or_probs, features):
    if hasattr(estimator_or_probs, "predict_proba"):
        return np.asarray(estimator_or_probs.predict_proba(features), dtype=float)
    return np.asarray(estimator_or_probs, dtype=float)


def exact_estimation_risk(
    estimator, population: LabeledDataset, t: TransitionMatrix, loss: str = "kl"
) -> float:
    """Exact mean distance between estimates and the transition rows of the
    true labels over a finite population; no complementary labels are drawn.

    `estimator` may be anything with predict_proba or a precomputed (N, K)
    array of estimates.
    """
    probs = _estimates(estimator, population.features)
    rows = t.rows[population.labels - 1]
    if loss == "kl":
        vals = [kl_divergence(p, r) for p, r in zip(probs, rows)]
        return float(np.mean(vals))
    if loss == "l1":
        return float(np.abs(probs - rows).sum(axis=1).mean())
    raise ValueError(f"unknown loss {loss!r}")


def decoding_error_bound(
    risk: float, gamma: float, loss: str = "kl", epsilon: float = 0.0
) -> float:
    """Upper bound on the zero-one error of nearest-row decoding.

    Generic distances give (2/gamma) risk; the KL-driven form of the same
    argument gives (4 sqrt(2)/gamma) sqrt(risk). An inaccurate decoding
    matrix adds 2 epsilon / gamma, with epsilon the largest L1 row gap
    between the generating and the provided matrix.
    """
    if gamma <= 0:
        raise ValueError("bound needs gamma > 0 (distinct transition rows)")
    if risk < 0 or epsilon < 0:
        raise ValueError("risk and epsilon must be nonnegative")
    if loss == "kl":
        return (4.0 * np.sqrt(2.0) / gamma) * np.sqrt(risk) + 2.0 * epsilon / gamma
    if loss == "generic":
        return (2.0 / gamma) * risk + 2.0 * epsilon / gamma
    raise ValueError(f"unknown loss {loss!r}")


def empirical_zero_one(predictions, truth) -> float:
    """Fraction of mismatched labels."""
    preds = np.asarray(predictions)
    y = np.asarray(truth)
    if preds.shape != y.shape:
        raise ValueError(f"length mismatch: {preds.shape} vs {y.shape}")
    return float(np.mean(preds != y))


def select_model(candidates):
    """Config with the smallest metric value; first wins ties."""
    if not candidates:
        raise ValueError("no candidates to select from")
    best_config, best_value = candidates[0]
    for config, value in candidates[1:]:
        if value < best_value:
            best_config, best_value = config, value
    return best_config


@dataclass(frozen=True)
class RiskReport:
    """One estimator's validation metrics, with the label-dependent fields
    filled only when a population with ordinary labels is available."""

    scel_validation: float
    ure_zero_one: Optional[float] = None
    empirical_r01: Optional[float] = None
    r_kl_exact: Optional[float] = None
    bound_value: Optional[float] = None


def assess(
    estimator,
    validation: ComplementaryDataset,
    t: TransitionMatrix,
    population: Optional[LabeledDataset] = None,
) -> RiskReport:
    """Bundle the selection metrics for one estimator.

    URE is reported with L1-decoded predictions and left out when the matrix
    is singular. Passing a labeled population additionally fills the exact
    KL estimation risk, the true zero-one error of L1 decoding, and the
    error bound those two certify.
    """
    from .decode import decode_l1

    scel_val = scel_validate(estimator, validation)
    ure = None
    if t.geometry.invertible:
        preds = decode_l1(estimator.predict_proba(validation.features), t)
        ure = ure_zero_one(preds, validation, t)
    r01 = risk = bound = None
    if population is not None:
        probs = estimator.predict_proba(population.features)
        r01 = empirical_zero_one(decode_l1(probs, t), population.labels)
        risk = exact_estimation_risk(probs, population, t, "kl")
        bound = decoding_error_bound(risk, t.geometry.gamma_l1, "kl")
    return RiskReport(
        scel_validation=scel_val,
        ure_zero_one=ure,
        empirical_r01=r01,
        r_kl_exact=risk,
        bound_value=bound,
    )
