"""Executing update rules over dynamic graphs.

Two independent paths produce a :class:`Trace`:

* :func:`run_agents` simulates anonymous agents exchanging messages in
  synchronized rounds (broadcast, receive along ``G(t)``, transition,
  output). Agents see their inbox as an unordered multiset and only use
  order-independent, exactly rounded sums over it.
* :func:`run_matrix` multiplies the estimate vector by the round matrices
  from :mod:`consensus_lab.rules`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import rules
from .graph import DynamicGraphModel, Graph, generate
from .rules import LearningState

EQUAL_NEIGHBOR = "EqualNeighbor"
METROPOLIS = "Metropolis"
MAX_WEIGHT = "MaxWeight"
MAX_METROPOLIS = "MaxMetropolis"
FIXED_WEIGHT = "FixedWeight"

AGENT_ALGORITHMS = (EQUAL_NEIGHBOR, MAX_WEIGHT, MAX_METROPOLIS)
# rules whose matrices are stochastic every round, so estimates stay in their hull
CONVEX_RULES = frozenset({EQUAL_NEIGHBOR, METROPOLIS, MAX_WEIGHT})
SYMMETRIC_RULES = frozenset({METROPOLIS, MAX_METROPOLIS})


@dataclass(frozen=True)
class FixedWeight:
    q: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(float(v) for v in self.q))

    name = FIXED_WEIGHT


Rule = Union[str, FixedWeight]


def rule_name(rule: Rule) -> str:
    return rule.name if isinstance(rule, FixedWeight) else rule


# -- agents -----------------------------------------------------------------

@dataclass(frozen=True)
class Message:
    x: float
    q: int | None = None


@dataclass
class AgentState:
    x: float
    q: int = rules.INITIAL_DEGREE


class EqualNeighborAgent:
    def __init__(self, mu: float):
        self.state = AgentState(float(mu))

    def send(self) -> Message:
        return Message(self.state.x)

    def transition(self, inbox: Sequence[Message]) -> None:
        self.state.x = math.fsum(m.x for m in inbox) / len(inbox)

    def output(self) -> float:
        return self.state.x


class MaxWeightAgent(EqualNeighborAgent):
    """Raises ``q`` to the inbox size, then takes a ``1/q`` step toward its neighbors."""

    def transition(self, inbox: Sequence[Message]) -> None:
        s = self.state
        s.q = max(s.q, len(inbox))
        s.x = s.x + math.fsum(m.x - s.x for m in inbox) / s.q


class MaxMetropolisAgent(EqualNeighborAgent):
    """Steps with weights ``1/max(q_i, q_j)`` and only then raises ``q``."""

    def send(self) -> Message:
        return Message(self.state.x, self.state.q)

    def transition(self, inbox: Sequence[Message]) -> None:
        s = self.state
        s.x = s.x + math.fsum((m.x - s.x) / max(s.q, m.q) for m in inbox)
        s.q = max(s.q, len(inbox))


AGENT_CLASSES = {
    EQUAL_NEIGHBOR: EqualNeighborAgent,
    MAX_WEIGHT: MaxWeightAgent,
    MAX_METROPOLIS: MaxMetropolisAgent,
}


# -- traces -----------------------------------------------------------------

@dataclass
class Trace:
    """Full record of an execution over rounds ``0..T``.

    ``estimates[t]`` is ``x(t)`` and ``d_prime_history[t]`` is ``d'(t)``,
    with ``d'(0) = (2, ..., 2)``. ``learning_rounds`` holds the rounds
    ``t >= 1`` in which some ``d'_i`` grew.
    """

    rule: str
    mu: np.ndarray
    estimates: np.ndarray
    d_prime_history: np.ndarray
    learning_rounds: frozenset[int]
    matrices: list[np.ndarray] | None = None

    @property
    def horizon(self) -> int:
        return len(self.estimates) - 1

    @property
    def n(self) -> int:
        return len(self.mu)

    @property
    def final_d_prime(self) -> np.ndarray:
        return self.d_prime_history[-1]

    @property
    def stabilization_round(self) -> int:
        """Last learning round, 0 if ``d'`` never moved."""
        return max(self.learning_rounds, default=0)


def _check_inputs(model: DynamicGraphModel, mu, T: int) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (model.n,):
        raise ValueError(f"mu has shape {mu.shape} but the model has n={model.n}")
    if T < 0:
        raise ValueError(f"horizon must be non-negative, got {T}")
    return mu


def _learning_rounds(history: np.ndarray) -> frozenset[int]:
    changed = (history[1:] != history[:-1]).any(axis=1)
    return frozenset(int(t) + 1 for t in np.flatnonzero(changed))


def run_agents(algorithm: str, model: DynamicGraphModel, mu, T: int,
               delivery_rng: np.random.Generator | None = None) -> Trace:
    """Simulate the local algorithm for ``T`` rounds.

    ``delivery_rng`` shuffles each inbox; a correct anonymous algorithm
    produces the same trace regardless.
    """
    try:
        agent_cls = AGENT_CLASSES[algorithm]
    except KeyError:
        raise ValueError(f"no local algorithm for {algorithm!r}; expected one of {AGENT_ALGORITHMS}") from None
    mu = _check_inputs(model, mu, T)
    n = len(mu)
    agents = [agent_cls(m) for m in mu]
    estimates = np.empty((T + 1, n))
    history = np.empty((T + 1, n), dtype=int)
    estimates[0] = mu
    observed = np.full(n, rules.INITIAL_DEGREE)
    history[0] = observed
    for t in range(1, T + 1):
        g = generate(model, t)
        outbox = [a.send() for a in agents]
        for i, agent in enumerate(agents):
            inbox = [outbox[j - 1] for j in g.neighbors(i + 1)]
            if delivery_rng is not None:
                inbox = [inbox[k] for k in delivery_rng.permutation(len(inbox))]
            agent.transition(inbox)
            observed[i] = max(observed[i], len(inbox))
        estimates[t] = [a.output() for a in agents]
        if algorithm == EQUAL_NEIGHBOR:
            history[t] = observed
        else:
            history[t] = [a.state.q for a in agents]
    return Trace(algorithm, mu, estimates, history, _learning_rounds(history))


def round_matrix(rule: Rule, g: Graph, state: LearningState) -> tuple[np.ndarray, LearningState]:
    """The round matrix for ``rule`` on ``g`` and the learning state after the round.

    ``d'`` is tracked for every rule so traces stay comparable; only the
    Max rules read it.
    """
    name = rule_name(rule)
    if name == MAX_WEIGHT:
        return rules.max_weight_step(g, state)
    if name == MAX_METROPOLIS:
        return rules.max_metropolis_step(g, state)
    if name == EQUAL_NEIGHBOR:
        a = rules.equal_neighbor_matrix(g)
    elif name == METROPOLIS:
        a = rules.metropolis_matrix(g)
    elif name == FIXED_WEIGHT:
        a = rules.fixed_weight_matrix(g, rule.q)
    else:
        raise ValueError(f"unknown rule {rule!r}")
    return a, state.observe(g)


def run_matrix(rule: Rule, model: DynamicGraphModel, mu, T: int,
               keep_matrices: bool = True) -> Trace:
    """Evolve ``x(t) = A(t) x(t-1)`` for ``T`` rounds."""
    mu = _check_inputs(model, mu, T)
    n = len(mu)
    state = LearningState.initial(n)
    estimates = np.empty((T + 1, n))
    history = np.empty((T + 1, n), dtype=int)
    estimates[0] = mu
    history[0] = state.d_prime
    matrices = [] if keep_matrices else None
    x = mu
    for t in range(1, T + 1):
        a, state = round_matrix(rule, generate(model, t), state)
        x = a @ x
        estimates[t] = x
        history[t] = state.d_prime
        if keep_matrices:
            matrices.append(a)
    return Trace(rule_name(rule), mu, estimates, history, _learning_rounds(history), matrices)


def max_deviation(a: Trace, b: Trace) -> float:
    if a.estimates.shape != b.estimates.shape:
        raise ValueError(f"trace shapes differ: {a.estimates.shape} vs {b.estimates.shape}")
    return float(np.max(np.abs(a.estimates - b.estimates)))


def traces_agree(a: Trace, b: Trace, tol: float) -> bool:
    return max_deviation(a, b) <= tol
