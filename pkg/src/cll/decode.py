"""Decoders mapping complementary probability estimates to ordinary labels.

Every decoder accepts a single simplex vector or an (N, K) batch and returns
1-based labels. Ties break toward the lowest label index.
"""

import numpy as np

from .exceptions import SingularTransitionError
from .losses import LOG_CLAMP
from .transition import TransitionMatrix


def _as_batch(comp_probs, k):
    p = np.asarray(comp_probs, dtype=float)
    single = p.ndim == 1
    p = np.atleast_2d(p)
    if p.shape[1] != k:
        raise ValueError(f"dimension mismatch: probs {p.shape[1]} vs matrix {k}")
    return p, single


def _result(labels, single):
    return int(labels[0]) if single else labels


def decode_l1(comp_probs, t: TransitionMatrix):
    """Label whose transition row is nearest in L1 distance."""
    p, single = _as_batch(comp_probs, t.k)
    dists = np.abs(p[:, None, :] - t.rows[None, :, :]).sum(axis=2)
    return _result(np.argmin(dists, axis=1) + 1, single)


def decode_max(comp_probs, t: TransitionMatrix):
    """Argmax of the ordinary-side estimate recovered by solving T^t v = q.

    Refuses singular matrices outright: substituting a pseudo-inverse would
    silently change the estimate, so callers should fall back to decode_l1
    themselves.
    """
    if not t.geometry.invertible:
        raise SingularTransitionError(
            "max decoding needs an invertible transition matrix"
        )
    p, single = _as_batch(comp_probs, t.k)
    v = np.linalg.solve(t.rows.T, p.T).T
    return _result(np.argmax(v, axis=1) + 1, single)


def _kl_rows(p, rows):
    # d(p, T_k) = sum_j T_kj (log T_kj - log p_j), zero target entries skipped
    logp = np.log(np.maximum(p, LOG_CLAMP))
    with np.errstate(divide="ignore", invalid="ignore"):
        contrib = np.where(rows > 0, rows * np.log(np.where(rows > 0, rows, 1.0)), 0.0)
    const = contrib.sum(axis=1)
    return const[None, :] - logp @ rows.T


def decode_generic(comp_probs, t: TransitionMatrix, distance: str = "l1"):
    """Nearest transition row under an L1, L2, or KL distance."""
    p, single = _as_batch(comp_probs, t.k)
    if distance == "l1":
        dists = np.abs(p[:, None, :] - t.rows[None, :, :]).sum(axis=2)
    elif distance == "l2":
        dists = ((p[:, None, :] - t.rows[None, :, :]) ** 2).sum(axis=2)
    elif distance == "kl":
        dists = _kl_rows(p, t.rows)
    else:
        raise ValueError(f"unknown distance {distance!r}")
    return _result(np.argmin(dists, axis=1) + 1, single)
