"""Probability-simplex losses: stabilized softmax, KL divergence, and the
negative log-likelihood of complementary labels (SCEL)."""

import numpy as np

# Probabilities are clamped to this floor before any log.
LOG_CLAMP = 1e-12


def softmax(logits):
    """Rowwise softmax with max-subtraction for overflow safety.

    Accepts a 1-D vector or a 2-D batch of row vectors.
    """
    z = np.asarray(logits, dtype=float)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def kl_divergence(estimate, target) -> float:
    """KL divergence of `target` from `estimate`: sum_k -t_k (log e_k - log t_k).

    Zero target entries contribute nothing (0 log 0 = 0). Estimate entries are
    clamped to LOG_CLAMP before the log, so zeros in the estimate are absorbed
    rather than raised.
    """
    e = np.asarray(estimate, dtype=float)
    t = np.asarray(target, dtype=float)
    if e.shape != t.shape:
        raise ValueError(f"shape mismatch: estimate {e.shape} vs target {t.shape}")
    mask = t > 0
    e = np.maximum(e[mask], LOG_CLAMP)
    t = t[mask]
    return float(np.sum(t * (np.log(t) - np.log(e))))


def scel(comp_probs, comp_labels) -> float:
    """Mean negative log of the complementary-label coordinate.

    `comp_probs` is an (N, K) array of complementary probability estimates and
    `comp_labels` an array of N labels in 1..K.
    """
    p = np.asarray(comp_probs, dtype=float)
    y = np.asarray(comp_labels)
    if p.ndim != 2 or p.shape[0] != y.shape[0]:
        raise ValueError(f"shape mismatch: probs {p.shape} vs labels {y.shape}")
    picked = p[np.arange(p.shape[0]), y - 1]
    return float(np.mean(-np.log(np.maximum(picked, LOG_CLAMP))))
