"""Convergence times measured on traces, and the closed-form bounds they are held to."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import engine
from .engine import MAX_METROPOLIS, MAX_WEIGHT, Trace
from .graph import DynamicGraphModel, model_from_dict

SAFETY_WINDOW = 50
# floating-point slack when certifying that a convex trace's diameter never grows
MONOTONE_TOL = 1e-12


def diameter_series(trace: Trace) -> np.ndarray:
    est = trace.estimates
    return est.max(axis=1) - est.min(axis=1)


def is_weakly_decreasing(series: np.ndarray, tol: float = MONOTONE_TOL) -> bool:
    return bool(np.all(np.diff(series) <= tol))


def convergence_time(trace: Trace, epsilon: float, window: int = SAFETY_WINDOW) -> int | None:
    """First round after which ``diam x(t) <= epsilon * diam mu`` for good.

    Returns ``None`` when the horizon cannot certify the suffix: the last
    round is still above threshold, or, for traces whose diameter is not
    provably monotone, some round in the trailing ``window`` is. Convex
    rules whose diameter series is weakly decreasing only need the final
    round to be within threshold.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    diam = diameter_series(trace)
    if diam[0] == 0:
        return 0
    over = np.flatnonzero(diam > epsilon * diam[0])
    if len(over) == 0:
        return 0
    last = int(over[-1])
    T = trace.horizon
    if last == T:
        return None
    monotone = trace.rule in engine.CONVEX_RULES and is_weakly_decreasing(diam)
    if not monotone and last > T - window:
        return None
    return last + 1


def _check_bound_args(d_prime: Sequence[int], n: int, epsilon: float) -> np.ndarray:
    d = np.asarray(d_prime)
    if d.shape != (n,):
        raise ValueError(f"d' must have length n={n}, got shape {d.shape}")
    if n < 2:
        raise ValueError("bounds need n >= 2")
    if (d < 2).any() or (d > n).any():
        raise ValueError(f"d' entries must lie in [2, {n}]")
    if not 0 < epsilon <= 1:
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon}")
    return d.astype(float)


def bound_maxweight(d_prime: Sequence[int], n: int, epsilon: float) -> float:
    """``(n-1) D'/2 * (sum log d'_i + log n - 2 log eps - n log 2)``, natural logs."""
    d = _check_bound_args(d_prime, n, epsilon)
    return (n - 1) * d.sum() / 2 * (
        np.log(d).sum() + math.log(n) - 2 * math.log(epsilon) - n * math.log(2))


def bound_maxmetropolis(d_prime: Sequence[int], n: int, epsilon: float) -> float:
    """``n^3 (2 sum log d'_i - log eps - (2n-1) log 2) + sum d'_i - 2n``, natural logs."""
    d = _check_bound_args(d_prime, n, epsilon)
    return n**3 * (2 * np.log(d).sum() - math.log(epsilon) - (2 * n - 1) * math.log(2)) + d.sum() - 2 * n


def bound_for(algorithm: str, d_prime: Sequence[int], n: int, epsilon: float) -> float | None:
    if algorithm == MAX_WEIGHT:
        return float(bound_maxweight(d_prime, n, epsilon))
    if algorithm == MAX_METROPOLIS:
        return float(bound_maxmetropolis(d_prime, n, epsilon))
    return None


@dataclass
class ConvergenceReport:
    """Measured convergence of one trace next to the theoretical quantities.

    ``beta`` and ``gamma_lower`` follow the MaxMetropolis analysis on
    MaxMetropolis traces and the MaxWeight analysis otherwise:
    ``beta = n prod(d'_i/2)`` with ``gamma >= 1/((n-1) D')``, or
    ``beta = prod(d'_i/2)^2`` with ``gamma >= 1/n^3``.
    """

    epsilon: float
    t_eps: int | None
    horizon: int
    diam_series: np.ndarray
    bound_mw: float | None
    bound_mm: float | None
    beta: float | None
    gamma_lower: float | None
    learning_rounds: frozenset[int] = field(default_factory=frozenset)

    @property
    def converged(self) -> bool:
        return self.t_eps is not None


def convergence_report(trace: Trace, epsilon: float, window: int = SAFETY_WINDOW) -> ConvergenceReport:
    n = trace.n
    d = trace.final_d_prime
    bound_mw = bound_mm = beta = gamma = None
    if n >= 2:
        bound_mw = float(bound_maxweight(d, n, epsilon))
        bound_mm = float(bound_maxmetropolis(d, n, epsilon))
        half = np.asarray(d, dtype=float) / 2
        if trace.rule == MAX_METROPOLIS:
            beta = float(np.prod(half) ** 2)
            gamma = 1.0 / n**3
        else:
            beta = float(n * np.prod(half))
            gamma = 1.0 / ((n - 1) * int(np.sum(d)))
    return ConvergenceReport(
        epsilon=epsilon,
        t_eps=convergence_time(trace, epsilon, window),
        horizon=trace.horizon,
        diam_series=diameter_series(trace),
        bound_mw=bound_mw,
        bound_mm=bound_mm,
        beta=beta,
        gamma_lower=gamma,
        learning_rounds=trace.learning_rounds,
    )


# -- sweeps -----------------------------------------------------------------

def make_mu(spec, n: int, seed: int) -> np.ndarray:
    """Input vector from ``"indicator"``, ``"uniform-random"`` or an explicit list.

    Random inputs are uniform on ``[0, 1)`` from a stream seeded with
    ``(seed, 0)``; graph randomness uses ``(seed, t)`` with ``t >= 1``.
    """
    if isinstance(spec, str):
        if spec == "indicator":
            mu = np.zeros(n)
            mu[0] = 1.0
            return mu
        if spec == "uniform-random":
            return np.random.default_rng([seed, 0]).random(n)
        raise ValueError(f"unknown mu mode {spec!r}")
    mu = np.asarray(spec, dtype=float)
    if mu.shape != (n,):
        raise ValueError(f"mu has length {len(mu)} but n={n}")
    return mu


@dataclass(frozen=True)
class SweepSpec:
    algorithms: tuple[str, ...]
    models: tuple[dict, ...]
    n_values: tuple[int, ...]
    seeds: tuple[int, ...]
    epsilon: float
    horizon: int
    mu: object = "uniform-random"
    engine: str = "agents"
    window: int = SAFETY_WINDOW

    def __post_init__(self):
        if not self.algorithms:
            raise ValueError("sweep needs at least one algorithm")
        if not self.models:
            raise ValueError("sweep needs at least one model")
        if not self.n_values or not self.seeds:
            raise ValueError("sweep needs n values and seeds")
        for a in self.algorithms:
            if a not in (*engine.AGENT_ALGORITHMS, engine.METROPOLIS):
                raise ValueError(f"unknown algorithm {a!r}")
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.engine not in ("matrix", "agents"):
            raise ValueError(f"engine must be 'matrix' or 'agents', got {self.engine!r}")


@dataclass(frozen=True)
class SweepRow:
    algorithm: str
    model: str
    n: int
    seed: int
    epsilon: float
    t_eps: int | None
    bound: float | None
    ratio: float | None
    converged: bool


def model_label(desc: dict) -> str:
    """Compact, deterministic name for a model descriptor, e.g. ``RotatingStar(period=2)``."""
    params = ";".join(f"{k}={desc[k]}" for k in sorted(desc) if k not in ("kind", "n", "seed"))
    return f"{desc['kind']}({params})"


def run_cell(algorithm: str, model: DynamicGraphModel, mu: np.ndarray, epsilon: float,
             horizon: int, engine_kind: str = "agents", window: int = SAFETY_WINDOW):
    """Run one execution and return ``(trace, t_eps, bound, ratio)``."""
    if engine_kind == "agents" and algorithm in engine.AGENT_ALGORITHMS:
        trace = engine.run_agents(algorithm, model, mu, horizon)
    else:
        trace = engine.run_matrix(algorithm, model, mu, horizon, keep_matrices=False)
    t_eps = convergence_time(trace, epsilon, window)
    bound = bound_for(algorithm, trace.final_d_prime, model.n, epsilon) if model.n >= 2 else None
    ratio = t_eps / bound if (t_eps is not None and bound) else None
    return trace, t_eps, bound, ratio


def sweep(spec: SweepSpec) -> list[SweepRow]:
    """Every (algorithm, model, n, seed) cell, in that nesting order."""
    rows = []
    for algorithm in spec.algorithms:
        for desc in spec.models:
            for n in spec.n_values:
                for seed in spec.seeds:
                    model = model_from_dict(desc, n=n, seed=seed)
                    mu = make_mu(spec.mu, model.n, seed)
                    _, t_eps, bound, ratio = run_cell(
                        algorithm, model, mu, spec.epsilon, spec.horizon, spec.engine, spec.window)
                    rows.append(SweepRow(algorithm, model_label(desc), model.n, seed,
                                         spec.epsilon, t_eps, bound, ratio, t_eps is not None))
    return rows
