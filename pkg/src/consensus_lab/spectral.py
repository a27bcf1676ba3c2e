"""Perron vectors, spectra, weighted variances and numerical lemma checks.

The ``check_*`` functions evaluate both sides of an inequality and return
them; they never decide the verdict with a hidden tolerance. Use
:meth:`Slack.holds` for that.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SLACK_TOL = 1e-12
STOCHASTIC_TOL = 1e-12
REVERSIBLE_TOL = 1e-10
PERRON_MAX_ITER = 100_000
PERRON_TARGET = 1e-13
PERRON_ACCEPT = 1e-10


class SpectralError(ValueError):
    """A matrix fails a precondition of a spectral routine."""


@dataclass(frozen=True)
class Slack:
    """Both sides of ``lhs <= rhs``."""

    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    def holds(self, tol: float = SLACK_TOL) -> bool:
        return self.slack >= -tol


# -- elementary quantities --------------------------------------------------

def diameter(v) -> float:
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        raise ValueError("diameter of an empty vector")
    return float(v.max() - v.min())


def _check_weights(pi, v) -> tuple[np.ndarray, np.ndarray]:
    pi = np.asarray(pi, dtype=float)
    v = np.asarray(v, dtype=float)
    if pi.shape != v.shape or pi.ndim != 1:
        raise ValueError(f"dimension mismatch: weights {pi.shape}, vector {v.shape}")
    return pi, v


def weighted_variance(pi, v) -> float:
    """``sum pi_i v_i^2 - (sum pi_i v_i)^2``, computed on the centred vector."""
    pi, v = _check_weights(pi, v)
    centred = v - pi @ v
    return float(pi @ centred**2)


def _is_stochastic(a: np.ndarray) -> bool:
    return bool((a >= 0).all() and np.allclose(a.sum(axis=1), 1.0, rtol=0, atol=STOCHASTIC_TOL))


def is_irreducible(a: np.ndarray) -> bool:
    """Strong connectivity of the nonzero pattern, by transitive closure."""
    a = np.asarray(a)
    n = a.shape[0]
    reach = (a != 0) | np.eye(n, dtype=bool)
    for _ in range(int(np.ceil(np.log2(max(n, 2))))):
        reach = (reach.astype(np.int64) @ reach.astype(np.int64)) > 0
    return bool(reach.all())


def _square(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


# -- Perron vector and spectrum ---------------------------------------------

def perron_vector(a) -> np.ndarray:
    """Left fixed point ``pi = A^T pi`` of an irreducible stochastic matrix.

    Power iteration on ``A^T`` from the uniform vector. Matrices with a
    zero diagonal entry are iterated through their lazy version
    ``(A + I) / 2``, which has the same Perron vector but no periodicity.
    """
    a = _square(a)
    if not _is_stochastic(a):
        raise SpectralError("Perron vector needs a non-negative matrix with unit row sums")
    if not is_irreducible(a):
        raise SpectralError("matrix is reducible")
    n = a.shape[0]
    step = a.T if (np.diag(a) > 0).all() else (a.T + np.eye(n)) / 2
    pi = np.full(n, 1.0 / n)
    residual = np.inf
    for _ in range(PERRON_MAX_ITER):
        nxt = step @ pi
        nxt /= nxt.sum()
        residual = float(np.max(np.abs(a.T @ nxt - nxt)))
        pi = nxt
        if residual <= PERRON_TARGET:
            break
    if residual > PERRON_ACCEPT:
        raise SpectralError(f"power iteration stalled at residual {residual:.3e}")
    return pi


def is_reversible(a, pi=None, tol: float = REVERSIBLE_TOL) -> bool:
    a = _square(a)
    if pi is None:
        pi = perron_vector(a)
    flow = pi[:, None] * a
    return bool(np.max(np.abs(flow - flow.T)) <= tol)


def eigenvalues(a) -> np.ndarray:
    """Eigenvalues sorted by decreasing modulus.

    Symmetric inputs go straight to a symmetric solver; reversible
    stochastic inputs are first made symmetric by the similarity
    ``diag(pi)^{1/2} A diag(pi)^{-1/2}``. Anything else falls back to the
    general dense solver and may return complex values.
    """
    a = _square(a)
    if np.array_equal(a, a.T):
        vals = np.linalg.eigvalsh(a)
    else:
        vals = None
        if _is_stochastic(a) and is_irreducible(a):
            pi = perron_vector(a)
            if is_reversible(a, pi):
                root = np.sqrt(pi)
                s = root[:, None] * a / root[None, :]
                vals = np.linalg.eigvalsh((s + s.T) / 2)
        if vals is None:
            vals = np.linalg.eigvals(a)
            if np.allclose(vals.imag, 0.0, atol=1e-12):
                vals = vals.real
    return vals[np.argsort(-np.abs(vals), kind="stable")]


def spectral_radius(a) -> float:
    return float(np.abs(eigenvalues(a)[0]))


def spectral_gap(a) -> float:
    """``|lambda_1| - |lambda_2|``; a 1x1 matrix has gap ``|lambda_1|``."""
    mods = np.abs(eigenvalues(a))
    return float(mods[0] - (mods[1] if len(mods) > 1 else 0.0))


# -- lemma checkers ---------------------------------------------------------

def check_variance_switch(pi, pi2, v) -> Slack:
    """Switching geometry costs at most the largest weight ratio.

    ``Var_{pi2} v <= max_i (pi2_i / pi_i) * Var_pi v``.
    """
    pi, v = _check_weights(pi, v)
    pi2, _ = _check_weights(pi2, v)
    ratio = float(np.max(pi2 / pi))
    return Slack(weighted_variance(pi2, v), ratio * weighted_variance(pi, v))


@dataclass(frozen=True)
class DispersionReport:
    """``lower``: ``c_lo * Var <= diam^2``; ``upper``: ``diam^2 <= c_hi * Var``.

    ``consensus`` marks inputs with zero diameter, where the strict
    inequalities degenerate into ``0 = 0``.
    """

    lower: Slack
    upper: Slack
    consensus: bool

    def holds(self, tol: float = SLACK_TOL) -> bool:
        return self.consensus or (self.lower.holds(tol) and self.upper.holds(tol))


def check_weighted_dispersion(pi, v) -> DispersionReport:
    """``2 Var_pi v < (diam v)^2 < 4 / min(pi) * Var_pi v``."""
    pi, v = _check_weights(pi, v)
    var = weighted_variance(pi, v)
    d2 = diameter(v) ** 2
    return DispersionReport(Slack(2 * var, d2), Slack(d2, 4 / pi.min() * var), d2 == 0.0)


def check_dispersion(v, mean_zero: bool = False) -> DispersionReport:
    """Unweighted dispersion bounds.

    With ``mean_zero=False`` this is the uniform-weight case of
    :func:`check_weighted_dispersion`. With ``mean_zero=True`` it checks
    ``sqrt(2/n) ||v|| < diam v < 2 ||v||`` for a vector of mean zero.
    """
    v = np.asarray(v, dtype=float)
    n = len(v)
    if not mean_zero:
        return check_weighted_dispersion(np.full(n, 1.0 / n), v)
    if abs(v.mean()) > 1e-12 * max(1.0, np.abs(v).max()):
        raise ValueError(f"vector must have mean zero, mean is {v.mean():.3e}")
    norm = float(np.linalg.norm(v))
    diam = diameter(v)
    return DispersionReport(Slack(np.sqrt(2 / n) * norm, diam), Slack(diam, 2 * norm), norm == 0.0)


def _contraction_preconditions(a: np.ndarray) -> np.ndarray:
    if not _is_stochastic(a):
        raise SpectralError("contraction bound needs a stochastic matrix")
    if not is_irreducible(a):
        raise SpectralError("contraction bound needs an irreducible matrix")
    if not (np.diag(a) > 0).all():
        raise SpectralError("contraction bound needs a positive diagonal")
    pi = perron_vector(a)
    if not is_reversible(a, pi):
        raise SpectralError("contraction bound needs a reversible matrix")
    return pi


def check_contraction(a, v, euclidean: bool = False) -> Slack:
    """One multiplication shrinks the dispersion by ``1 - gap``.

    Default: ``Var_pi(A v) <= (1 - gap)^2 Var_pi(v)`` with ``pi`` the Perron
    vector of a reversible ``A``. With ``euclidean=True`` (symmetric ``A``,
    mean-zero ``v``): ``||A v|| <= (1 - gap) ||v||``.
    """
    a = _square(a)
    v = np.asarray(v, dtype=float)
    if v.shape != (a.shape[0],):
        raise ValueError(f"dimension mismatch: matrix {a.shape}, vector {v.shape}")
    pi = _contraction_preconditions(a)
    gap = spectral_gap(a)
    if euclidean:
        if not np.allclose(a, a.T, rtol=0, atol=1e-15):
            raise SpectralError("euclidean contraction bound needs a symmetric matrix")
        if abs(v.mean()) > 1e-12 * max(1.0, np.abs(v).max()):
            raise ValueError("euclidean contraction bound needs a mean-zero vector")
        return Slack(float(np.linalg.norm(a @ v)), (1 - gap) * float(np.linalg.norm(v)))
    return Slack(weighted_variance(pi, a @ v), (1 - gap) ** 2 * weighted_variance(pi, v))


@dataclass(frozen=True)
class GapReport:
    gap: float
    alpha_bound: float
    symmetric_bound: float | None

    def holds(self, tol: float = SLACK_TOL) -> bool:
        ok = self.gap >= self.alpha_bound - tol
        if self.symmetric_bound is not None:
            ok = ok and self.gap >= self.symmetric_bound - tol
        return ok


def check_gap_bounds(a) -> GapReport:
    """Spectral gap against ``alpha(A)/(n-1)`` and, when symmetric, ``A^-/(n(n-1))``.

    ``alpha(A)`` is the smallest nonzero ``pi_i A_ij``; ``A^-`` the smallest
    nonzero entry.
    """
    a = _square(a)
    n = a.shape[0]
    pi = _contraction_preconditions(a)
    gap = spectral_gap(a)
    if n == 1:
        return GapReport(gap, 0.0, 0.0 if np.array_equal(a, a.T) else None)
    flows = pi[:, None] * a
    alpha = float(flows[flows != 0].min())
    sym = None
    if np.array_equal(a, a.T):
        sym = float(a[a != 0].min()) / (n * (n - 1))
    return GapReport(gap, alpha / (n - 1), sym)


def nu_bound(a) -> tuple[float, float]:
    """``nu = max_i (1 - min(0, A_ii))`` and the radius bound ``nu^2``.

    Every eigenvalue of a symmetric ``A`` with unit row sums lies in
    ``[1 - 2 nu, 1]``, so ``rho(A) <= 2 nu - 1 <= nu^2``.
    """
    a = _square(a)
    if not np.allclose(a, a.T, rtol=0, atol=1e-15):
        raise ValueError("nu bound needs a symmetric matrix")
    if not np.allclose(a.sum(axis=1), 1.0, rtol=0, atol=STOCHASTIC_TOL):
        raise ValueError("nu bound needs unit row sums")
    nu = float(np.max(1.0 - np.minimum(0.0, np.diag(a))))
    return nu, nu * nu
