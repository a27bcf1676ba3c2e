"""Per-round update matrices.

Every function returns a dense ``(n, n)`` float array ``A`` with ``A @ 1 == 1``;
row ``i`` holds the weights agent ``i + 1`` puts on its neighbors' previous
estimates. The learning rules thread a :class:`LearningState` explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import Graph, require_class_g

INITIAL_DEGREE = 2


@dataclass(frozen=True)
class LearningState:
    """Largest degree each agent has seen so far (starts at 2)."""

    d_prime: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "d_prime", tuple(int(d) for d in self.d_prime))
        n = len(self.d_prime)
        hi = max(n, INITIAL_DEGREE)
        if any(not INITIAL_DEGREE <= d <= hi for d in self.d_prime):
            raise ValueError(f"d' entries must lie in [{INITIAL_DEGREE}, {hi}], got {self.d_prime}")

    @classmethod
    def initial(cls, n: int) -> "LearningState":
        return cls((INITIAL_DEGREE,) * n)

    @property
    def n(self) -> int:
        return len(self.d_prime)

    @property
    def total(self) -> int:
        return sum(self.d_prime)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.d_prime, dtype=float)

    def observe(self, g: Graph) -> "LearningState":
        """Raise each entry to the agent's degree in ``g``."""
        if g.n != self.n:
            raise ValueError(f"state has n={self.n} but graph has n={g.n}")
        return LearningState(tuple(max(d, int(k)) for d, k in zip(self.d_prime, g.degrees)))


def _off_diagonal(g: Graph) -> np.ndarray:
    off = g.adjacency.astype(float)
    np.fill_diagonal(off, 0.0)
    return off


def _with_row_complement(off: np.ndarray) -> np.ndarray:
    a = off.copy()
    np.fill_diagonal(a, 1.0 - off.sum(axis=1))
    return a


def equal_neighbor_matrix(g: Graph) -> np.ndarray:
    require_class_g(g)
    return g.adjacency / g.degrees[:, None]


def metropolis_symmetrize(a: np.ndarray) -> np.ndarray:
    """Pairwise-minimum off-diagonal weights, diagonal absorbing the rest."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if (a < 0).any():
        raise ValueError("symmetrization needs a non-negative matrix")
    off = np.minimum(a, a.T)
    np.fill_diagonal(off, 0.0)
    return _with_row_complement(off)


def metropolis_matrix(g: Graph) -> np.ndarray:
    """Round-wise symmetrized EqualNeighbor matrix: weight ``1/max(d_i, d_j)``.

    Only a matrix-level reference; it has no local implementation over
    changing graphs.
    """
    return metropolis_symmetrize(equal_neighbor_matrix(g))


def fixed_weight_matrix(g: Graph, q: Sequence[float]) -> np.ndarray:
    """Neighbor weight ``1/q_i``; the diagonal goes negative once ``q_i < d_i - 1``."""
    require_class_g(g)
    q = np.asarray(q, dtype=float)
    if q.shape != (g.n,):
        raise ValueError(f"q must have length {g.n}, got shape {q.shape}")
    if (q <= 0).any():
        raise ValueError("q entries must be positive")
    return _with_row_complement(_off_diagonal(g) / q[:, None])


def max_weight_step(g: Graph, state: LearningState) -> tuple[np.ndarray, LearningState]:
    """MaxWeight round: raise ``d'`` to the current degree, then weight by ``1/d'_i``."""
    require_class_g(g)
    new = state.observe(g)
    return fixed_weight_matrix(g, new.as_array()), new


def max_metropolis_step(g: Graph, state: LearningState) -> tuple[np.ndarray, LearningState]:
    """MaxMetropolis round: weights ``1/max(d'_i, d'_j)`` from the *previous* ``d'``.

    The state is raised only after the matrix is built, which is what lets
    the diagonal go negative on learning rounds.
    """
    require_class_g(g)
    if g.n != state.n:
        raise ValueError(f"state has n={state.n} but graph has n={g.n}")
    dp = state.as_array()
    off = _off_diagonal(g) / np.maximum(dp[:, None], dp[None, :])
    return _with_row_complement(off), state.observe(g)
