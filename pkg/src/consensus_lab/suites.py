"""Randomized verification suites.

Each suite draws ``cases`` random instances from a seeded generator and
counts failures. ``cmd_verify`` runs all of them; the acceptance tests run
them at the required sizes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import engine, rules, spectral
from .graph import (DegreeBurst, Graph, RandomConnected, RotatingStar, Schedule, Static,
                    cycle_graph, path_graph, star_graph)
from .rules import LearningState

EQUIVALENCE_TOL = 1e-12
MEAN_TOL = 1e-9
PERRON_TOL = 1e-10
STOCHASTIC_TOL = 1e-12
RADIUS_TOL = spectral.SLACK_TOL


@dataclass
class SuiteResult:
    name: str
    cases: int = 0
    failures: int = 0
    worst: float = np.inf  # smallest slack seen (or largest error, negated)
    first_failure: str | None = None

    @property
    def passed(self) -> bool:
        return self.cases > 0 and self.failures == 0

    def record(self, ok: bool, margin: float, detail: str = "") -> None:
        self.cases += 1
        self.worst = min(self.worst, margin)
        if not ok:
            self.failures += 1
            if self.first_failure is None:
                self.first_failure = detail

    def run(self, check: Callable[[], tuple[bool, float, str]]) -> None:
        """Record one case; a precondition error counts as a failure."""
        try:
            ok, margin, detail = check()
        except ValueError as exc:
            self.record(False, -np.inf, f"{type(exc).__name__}: {exc}")
            return
        self.record(ok, margin, detail)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.cases - self.failures}/{self.cases} ok, worst margin {self.worst:.3e}"


# -- random instances -------------------------------------------------------

def random_graph(rng: np.random.Generator, n: int) -> Graph:
    return RandomConnected(n, float(rng.uniform(0.05, 0.9)), int(rng.integers(2**31))).graph(1)


def random_model(rng: np.random.Generator, n: int):
    """A random member of one of the five model families."""
    kind = int(rng.integers(5))
    if kind == 0:
        return Static(random_graph(rng, n))
    if kind == 1:
        return Schedule(tuple(random_graph(rng, n) for _ in range(int(rng.integers(1, 5)))))
    if kind == 2:
        return RandomConnected(n, float(rng.uniform(0.05, 0.9)), int(rng.integers(2**31)))
    if kind == 3:
        return RotatingStar(n, int(rng.integers(1, 6)))
    base = path_graph(n) if rng.random() < 0.5 else cycle_graph(n)
    return DegreeBurst(base, star_graph(n, int(rng.integers(1, n + 1))), int(rng.integers(1, 60)))


def random_weights(rng: np.random.Generator, n: int) -> np.ndarray:
    w = rng.uniform(0.05, 1.0, n)
    return w / w.sum()


def random_vector(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.uniform(-1.0, 1.0, n)


def _random_d_prime(rng: np.random.Generator, g: Graph, at_least_degree: bool) -> LearningState:
    hi = max(g.n, rules.INITIAL_DEGREE)
    lo = np.maximum(g.degrees, rules.INITIAL_DEGREE) if at_least_degree else np.full(g.n, 2)
    return LearningState(tuple(int(rng.integers(l, hi + 1)) for l in lo))


def random_reversible(rng: np.random.Generator, n: int) -> np.ndarray:
    """EqualNeighbor or MaxWeight matrix on a random graph (reversible, positive diagonal)."""
    g = random_graph(rng, n)
    if rng.random() < 0.5:
        return rules.equal_neighbor_matrix(g)
    return rules.max_weight_step(g, _random_d_prime(rng, g, False))[0]


def random_symmetric(rng: np.random.Generator, n: int) -> np.ndarray:
    """Metropolis or non-learning MaxMetropolis matrix (symmetric, positive diagonal)."""
    g = random_graph(rng, n)
    if rng.random() < 0.5:
        return rules.metropolis_matrix(g)
    return rules.max_metropolis_step(g, _random_d_prime(rng, g, True))[0]


def _sizes(rng, cases: int, n_min: int, n_max: int):
    for _ in range(cases):
        yield int(rng.integers(n_min, n_max + 1))


# -- lemma suites -----------------------------------------------------------
# Each case function draws one instance and returns (ok, margin, detail).

def _variance_switch_case(rng, n):
    r = spectral.check_variance_switch(random_weights(rng, n), random_weights(rng, n), random_vector(rng, n))
    return r.holds(), r.slack, repr(r)


def _weighted_dispersion_case(rng, n):
    v = random_vector(rng, n)
    if rng.random() < 0.1:
        v = 0.3 + 1e-9 * v  # near-consensus edge case
    r = spectral.check_weighted_dispersion(random_weights(rng, n), v)
    return r.holds(), min(r.lower.slack, r.upper.slack), repr(r)


def _dispersion_case(rng, n):
    v = random_vector(rng, n)
    r = spectral.check_dispersion(v - v.mean(), mean_zero=True)
    return r.holds(), min(r.lower.slack, r.upper.slack), repr(r)


def _contraction_case(rng, n):
    r = spectral.check_contraction(random_reversible(rng, n), random_vector(rng, n))
    return r.holds(), r.slack, repr(r)


def _euclidean_contraction_case(rng, n):
    v = random_vector(rng, n)
    r = spectral.check_contraction(random_symmetric(rng, n), v - v.mean(), euclidean=True)
    return r.holds(), r.slack, repr(r)


def _alpha_gap_case(rng, n):
    r = spectral.check_gap_bounds(random_reversible(rng, n))
    return r.holds(), r.gap - r.alpha_bound, repr(r)


def _symmetric_gap_case(rng, n):
    r = spectral.check_gap_bounds(random_symmetric(rng, n))
    return r.holds(), r.gap - r.symmetric_bound, repr(r)


def _nu_radius_case(rng, n):
    # MaxMetropolis matrices with arbitrary previous d', so diagonals may be negative
    g = random_graph(rng, n)
    a, _ = rules.max_metropolis_step(g, _random_d_prime(rng, g, False))
    _, bound = spectral.nu_bound(a)
    rho = spectral.spectral_radius(a)
    return rho <= bound + RADIUS_TOL, bound - rho, f"rho={rho} bound={bound}"


def _lemma_suite(name: str, stream: int, case: Callable):
    def suite(cases: int, n_max: int, seed: int) -> SuiteResult:
        res = SuiteResult(name)
        rng = np.random.default_rng([seed, stream])
        for n in _sizes(rng, cases, 2, n_max):
            res.run(lambda: case(rng, n))
        return res
    suite.__name__ = case.__name__.strip("_").replace("_case", "_suite")
    return suite


variance_switch_suite = _lemma_suite("variance switch", 1, _variance_switch_case)
weighted_dispersion_suite = _lemma_suite("weighted dispersion", 2, _weighted_dispersion_case)
dispersion_suite = _lemma_suite("mean-zero dispersion", 3, _dispersion_case)
contraction_suite = _lemma_suite("weighted contraction", 4, _contraction_case)
euclidean_contraction_suite = _lemma_suite("euclidean contraction", 5, _euclidean_contraction_case)
alpha_gap_suite = _lemma_suite("gap >= alpha/(n-1)", 6, _alpha_gap_case)
symmetric_gap_suite = _lemma_suite("gap >= A-/(n(n-1))", 7, _symmetric_gap_case)
nu_radius_suite = _lemma_suite("radius <= nu^2", 8, _nu_radius_case)


# -- engine suites ----------------------------------------------------------

def equivalence_suite(cases: int, n_max: int, seed: int, T: int = 200,
                      algorithms=engine.AGENT_ALGORITHMS,
                      on_trace: Callable | None = None) -> SuiteResult:
    """Agent-level and matrix-level executions agree entrywise.

    ``on_trace`` receives every ``(agent_trace, matrix_trace)`` pair so callers
    can run extra checks on the same executions.
    """
    res = SuiteResult("agent/matrix equivalence")
    for algorithm in algorithms:
        rng = np.random.default_rng([seed, 9])
        for n in _sizes(rng, cases, 1, n_max):
            model = random_model(rng, n)
            mu = random_vector(rng, n)
            a = engine.run_agents(algorithm, model, mu, T)
            b = engine.run_matrix(algorithm, model, mu, T, keep_matrices=False)
            dev = engine.max_deviation(a, b)
            same_dp = np.array_equal(a.d_prime_history, b.d_prime_history)
            res.record(dev <= EQUIVALENCE_TOL and same_dp, EQUIVALENCE_TOL - dev,
                       f"{algorithm} {model!r} deviation {dev:.3e}")
            if on_trace is not None:
                on_trace(a, b)
    return res


def conservation_suite(cases: int, n_max: int, seed: int, T: int = 500) -> SuiteResult:
    res = SuiteResult("average conservation")
    rng = np.random.default_rng([seed, 10])
    for n in _sizes(rng, cases, 1, n_max):
        model = random_model(rng, n)
        mu = random_vector(rng, n)
        tr = engine.run_agents(engine.MAX_METROPOLIS, model, mu, T)
        drift = float(np.max(np.abs(tr.estimates.mean(axis=1) - mu.mean())))
        res.record(drift <= MEAN_TOL, MEAN_TOL - drift, f"{model!r} drift {drift:.3e}")
    return res


def double_stochasticity_suite(cases: int, n_max: int, seed: int) -> SuiteResult:
    """Metropolis matrices are non-negative, symmetric, with unit row and column sums;
    MaxMetropolis matrices are symmetric with unit row and column sums."""
    res = SuiteResult("double stochasticity")
    rng = np.random.default_rng([seed, 11])
    for n in _sizes(rng, cases, 1, n_max):
        g = random_graph(rng, n)
        checks = [(rules.metropolis_matrix(g), True),
                  (rules.max_metropolis_step(g, _random_d_prime(rng, g, False))[0], False)]
        for a, nonneg in checks:
            err = max(np.max(np.abs(a.sum(axis=0) - 1)), np.max(np.abs(a.sum(axis=1) - 1)))
            ok = err <= STOCHASTIC_TOL and np.array_equal(a, a.T)
            if nonneg:
                ok = ok and bool((a >= 0).all())
            res.record(ok, STOCHASTIC_TOL - err, f"matrix {a.tolist()}")
    return res


def perron_closed_form_suite(cases: int, n_max: int, seed: int, T: int = 50) -> SuiteResult:
    """Numeric Perron vector of every MaxWeight round matrix equals ``d'/D'``."""
    res = SuiteResult("MaxWeight Perron = d'/D'")
    rng = np.random.default_rng([seed, 12])
    for n in _sizes(rng, cases, 2, n_max):
        model = random_model(rng, n)
        tr = engine.run_matrix(engine.MAX_WEIGHT, model, random_vector(rng, n), T)
        for t, a in enumerate(tr.matrices, start=1):
            d = tr.d_prime_history[t]
            err = float(np.max(np.abs(spectral.perron_vector(a) - d / d.sum())))
            res.record(err <= PERRON_TOL, PERRON_TOL - err, f"{model!r} round {t} err {err:.3e}")
    return res


LEMMA_SUITES = (
    variance_switch_suite,
    weighted_dispersion_suite,
    dispersion_suite,
    contraction_suite,
    euclidean_contraction_suite,
    alpha_gap_suite,
    symmetric_gap_suite,
    nu_radius_suite,
)


def run_all(n_max: int, cases: int, seed: int, engine_rounds: int = 100) -> list[SuiteResult]:
    results = [suite(cases, n_max, seed) for suite in LEMMA_SUITES]
    results.append(double_stochasticity_suite(cases, n_max, seed))
    results.append(equivalence_suite(cases, n_max, seed, T=engine_rounds))
    results.append(conservation_suite(cases, n_max, seed, T=engine_rounds))
    results.append(perron_closed_form_suite(max(1, cases // 20), n_max, seed, T=min(engine_rounds, 50)))
    return results
