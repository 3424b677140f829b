"""Transition matrices governing complementary-label generation.

A transition matrix T is a K x K row-stochastic matrix where T[i, j] is the
probability of observing complementary label j+1 when the ordinary label is
i+1. Clean matrices have a zero diagonal: a complementary label is never the
ordinary one.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

ROW_SUM_TOL = 1e-9
PIVOT_TOL = 1e-10


@dataclass(frozen=True)
class MatrixGeometry:
    """Geometry summary of a transition matrix.

    gamma_l1 is the minimal L1 distance between any pair of rows; it is zero
    exactly when two rows coincide (a degenerate matrix that no decoder can
    tell apart). condition_hint is the ratio of extreme singular values and is
    diagnostic only.
    """

    gamma_l1: float
    invertible: bool
    condition_hint: float


def _full_pivot_invertible(a: np.ndarray, tol: float = PIVOT_TOL) -> bool:
    """Gaussian elimination with full pivoting; singular when any pivot
    magnitude falls below `tol`."""
    m = a.astype(float).copy()
    k = m.shape[0]
    for step in range(k):
        sub = np.abs(m[step:, step:])
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        pivot = sub[i, j]
        if pivot < tol:
            return False
        m[[step, step + i]] = m[[step + i, step]]
        m[:, [step, step + j]] = m[:, [step + j, step]]
        m[step + 1:] -= np.outer(m[step + 1:, step] / m[step, step], m[step])
    return True


class TransitionMatrix:
    """Immutable row-stochastic matrix with cached geometry."""

    def __init__(self, rows):
        r = np.array(rows, dtype=float)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ValueError(f"transition matrix must be square, got {r.shape}")
        if r.shape[0] <= 2:
            raise ValueError(f"class count must exceed 2, got {r.shape[0]}")
        if np.any(r < 0) or np.any(r > 1):
            raise ValueError("transition entries must lie in [0, 1]")
        sums = r.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > ROW_SUM_TOL):
            raise ValueError(f"rows must sum to 1 within {ROW_SUM_TOL}, got {sums}")
        r.setflags(write=False)
        self._rows = r

    @property
    def rows(self) -> np.ndarray:
        return self._rows

    @property
    def k(self) -> int:
        return self._rows.shape[0]

    @property
    def clean(self) -> bool:
        """True when the diagonal is identically zero."""
        return bool(np.all(np.diag(self._rows) == 0.0))

    @cached_property
    def geometry(self) -> MatrixGeometry:
        """Exhaustive pairwise row scan; cheap for the class counts in use."""
        r = self._rows
        gaps = np.abs(r[:, None, :] - r[None, :, :]).sum(axis=2)
        iu = np.triu_indices(self.k, k=1)
        gamma = float(gaps[iu].min())
        sv = np.linalg.svd(r, compute_uv=False)
        hint = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
        return MatrixGeometry(
            gamma_l1=gamma,
            invertible=_full_pivot_invertible(r),
            condition_hint=hint,
        )

    def __eq__(self, other):
        return isinstance(other, TransitionMatrix) and np.array_equal(
            self._rows, other._rows
        )

    def __repr__(self):
        return f"TransitionMatrix(k={self.k}, clean={self.clean})"

    def to_text(self) -> str:
        """Plain-text form: first line K, then K lines of K decimals.

        Values are written with repr so a round trip is exact.
        """
        lines = [str(self.k)]
        for row in self._rows:
            lines.append(" ".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TransitionMatrix":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        k = int(lines[0])
        if len(lines) != k + 1:
            raise ValueError(f"expected {k} matrix lines, got {len(lines) - 1}")
        rows = [[float(v) for v in ln.split()] for ln in lines[1:]]
        return cls(rows)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path) -> "TransitionMatrix":
        with open(path) as fh:
            return cls.from_text(fh.read())


def uniform_transition(k: int) -> TransitionMatrix:
    """Uniform complementary generation: off-diagonal entries 1/(k-1)."""
    if k <= 2:
        raise ValueError(f"class count must exceed 2, got {k}")
    rows = (np.ones((k, k)) - np.eye(k)) / (k - 1)
    return TransitionMatrix(rows)


def biased_transition(
    k: int, p1: float, p2: float, p3: float, rng: np.random.Generator
) -> TransitionMatrix:
    """Biased generation: per row, the k-1 complementary classes are split
    uniformly at random into three equal subsets with constant probabilities
    p1, p2, p3. Requires (k-1) divisible by 3 and ((k-1)/3)(p1+p2+p3) = 1.
    """
    if k <= 2 or (k - 1) % 3 != 0:
        raise ValueError(f"class count must exceed 2 with k-1 divisible by 3, got {k}")
    size = (k - 1) // 3
    if abs(size * (p1 + p2 + p3) - 1.0) > ROW_SUM_TOL:
        raise ValueError(
            f"subset probabilities must satisfy ((k-1)/3)(p1+p2+p3)=1, "
            f"got {size * (p1 + p2 + p3)}"
        )
    rows = np.zeros((k, k))
    for i in range(k):
        others = np.delete(np.arange(k), i)
        perm = rng.permutation(others)
        rows[i, perm[:size]] = p1
        rows[i, perm[size:2 * size]] = p2
        rows[i, perm[2 * size:]] = p3
    return TransitionMatrix(rows)


def mix_uniform_noise(t: TransitionMatrix, lam: float) -> TransitionMatrix:
    """Entrywise convex combination (1-lam) T + lam (1/K) 1. The result keeps
    row sums but loses the zero diagonal for lam > 0."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"noise level must lie in [0, 1], got {lam}")
    k = t.k
    rows = (1.0 - lam) * t.rows + lam * np.full((k, k), 1.0 / k)
    return TransitionMatrix(rows)


def perturbation_radius(t_true: TransitionMatrix, t_given: TransitionMatrix) -> float:
    """Max over rows of the L1 difference between two matrices."""
    if t_true.k != t_given.k:
        raise ValueError(f"class counts differ: {t_true.k} vs {t_given.k}")
    return float(np.abs(t_true.rows - t_given.rows).sum(axis=1).max())
