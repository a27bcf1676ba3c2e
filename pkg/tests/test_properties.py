"""Invariants checked on generated inputs."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from consensus_lab import engine, metrics, spectral
from consensus_lab.graph import (RandomConnected, RotatingStar, Schedule, format_graphs, generate,
                                 parse_graphs, validate_class_g)
from consensus_lab.rules import (LearningState, equal_neighbor_matrix, max_metropolis_step, max_weight_step,
                                 metropolis_matrix)

sizes = st.integers(min_value=1, max_value=12)
probs = st.floats(min_value=0.0, max_value=1.0)
seeds = st.integers(min_value=0, max_value=2**31 - 1)
rounds = st.integers(min_value=1, max_value=500)
finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)


@st.composite
def graphs(draw, min_n=1):
    n = draw(st.integers(min_value=min_n, max_value=12))
    return generate(RandomConnected(n, draw(probs), draw(seeds)), draw(rounds))


@st.composite
def weights(draw, n):
    w = np.array(draw(st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=n, max_size=n)))
    return w / w.sum()


@st.composite
def learning_states(draw, g):
    hi = max(g.n, 2)
    return LearningState(tuple(draw(st.integers(min_value=2, max_value=hi)) for _ in range(g.n)))


@given(sizes, probs, seeds, rounds)
def test_random_graphs_in_class_and_pure(n, p, seed, t):
    g = generate(RandomConnected(n, p, seed), t)
    assert validate_class_g(g) is None
    assert generate(RandomConnected(n, p, seed), t) == g
    if n >= 2:
        assert (g.degrees >= 2).all()


@given(st.integers(min_value=1, max_value=10), st.integers(min_value=1, max_value=4), rounds)
def test_rotating_star_in_class(n, period, t):
    assert validate_class_g(generate(RotatingStar(n, period), t)) is None


@given(st.data())
def test_rule_matrices_are_affine_on_edges(data):
    g = data.draw(graphs())
    state = data.draw(learning_states(g))
    support = g.adjacency
    for a in (equal_neighbor_matrix(g), metropolis_matrix(g),
              max_weight_step(g, state)[0], max_metropolis_step(g, state)[0]):
        np.testing.assert_allclose(a.sum(axis=1), 1.0, atol=1e-12)
        off = ~np.eye(g.n, dtype=bool)
        assert not (a[off & ~support]).any()
        assert (a[off] >= 0).all()


@given(st.data())
def test_metropolis_doubly_stochastic(data):
    a = metropolis_matrix(data.draw(graphs()))
    assert np.array_equal(a, a.T) and (a >= 0).all()
    np.testing.assert_allclose(a.sum(axis=0), 1.0, atol=1e-12)


@given(st.data())
def test_max_metropolis_symmetric_and_learns_after(data):
    g = data.draw(graphs())
    state = data.draw(learning_states(g))
    a, new = max_metropolis_step(g, state)
    assert np.array_equal(a, a.T)
    np.testing.assert_allclose(a.sum(axis=0), 1.0, atol=1e-12)
    assert all(d >= max(s, k) for d, s, k in zip(new.d_prime, state.d_prime, g.degrees))
    # negative diagonal only possible while some neighbor degree exceeds the old estimate
    if (np.array(state.d_prime) >= g.degrees).all():
        assert (a >= 0).all()


@given(st.data())
def test_max_weight_perron_vector_closed_form(data):
    g = data.draw(graphs(min_n=2))
    a, state = max_weight_step(g, data.draw(learning_states(g)))
    d = state.as_array()
    np.testing.assert_allclose(spectral.perron_vector(a), d / d.sum(), atol=1e-10)


@given(st.data())
def test_equal_neighbor_perron_is_degree_share(data):
    g = data.draw(graphs(min_n=2))
    pi = spectral.perron_vector(equal_neighbor_matrix(g))
    assert (pi > 0).all() and abs(pi.sum() - 1) <= 1e-12
    np.testing.assert_allclose(pi, g.degrees / g.degrees.sum(), atol=1e-10)


@given(st.data())
def test_weighted_variance_shift_invariant(data):
    n = data.draw(st.integers(min_value=1, max_value=10))
    pi = data.draw(weights(n))
    v = np.array(data.draw(st.lists(finite, min_size=n, max_size=n)))
    c = data.draw(finite)
    var = spectral.weighted_variance(pi, v)
    assert var >= 0
    assert abs(spectral.weighted_variance(pi, v + c) - var) <= 1e-9 * max(1.0, var)


@given(st.data())
def test_lemma_checks_hold(data):
    n = data.draw(st.integers(min_value=2, max_value=10))
    pi, pi2 = data.draw(weights(n)), data.draw(weights(n))
    v = np.array(data.draw(st.lists(st.floats(min_value=-1, max_value=1), min_size=n, max_size=n)))
    assert spectral.check_variance_switch(pi, pi2, v).holds()
    assert spectral.check_weighted_dispersion(pi, v).holds()
    assert spectral.check_dispersion(v - v.mean(), mean_zero=True).holds()


@given(st.data())
def test_contraction_and_gap_bounds_hold(data):
    g = data.draw(graphs(min_n=2))
    v = np.array(data.draw(st.lists(st.floats(min_value=-1, max_value=1), min_size=g.n, max_size=g.n)))
    en, met = equal_neighbor_matrix(g), metropolis_matrix(g)
    assert spectral.check_contraction(en, v).holds()
    assert spectral.check_contraction(met, v - v.mean(), euclidean=True).holds()
    assert spectral.check_gap_bounds(en).holds()
    assert spectral.check_gap_bounds(met).holds()


@given(st.data())
def test_nu_bound_dominates_radius(data):
    g = data.draw(graphs(min_n=2))
    a, _ = max_metropolis_step(g, data.draw(learning_states(g)))
    nu, bound = spectral.nu_bound(a)
    assert nu >= 1
    assert spectral.spectral_radius(a) <= bound + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=2, max_value=8), probs, seeds,
       st.floats(min_value=1e-4, max_value=0.9), st.floats(min_value=1e-4, max_value=0.9))
def test_convergence_time_monotone_in_epsilon(n, p, seed, e1, e2):
    e1, e2 = sorted((e1, e2))
    mu = np.random.default_rng(seed).random(n)
    for rule in (engine.MAX_WEIGHT, engine.MAX_METROPOLIS):
        tr = engine.run_matrix(rule, RandomConnected(n, p, seed), mu, 300, keep_matrices=False)
        t1, t2 = metrics.convergence_time(tr, e1), metrics.convergence_time(tr, e2)
        if t1 is not None:
            assert t2 is not None and t1 >= t2


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=1, max_value=8), probs, seeds)
def test_symmetric_rules_conserve_mean(n, p, seed):
    mu = np.random.default_rng(seed).normal(size=n)
    for rule in engine.SYMMETRIC_RULES:
        tr = engine.run_matrix(rule, RandomConnected(n, p, seed), mu, 100, keep_matrices=False)
        assert np.max(np.abs(tr.estimates.mean(axis=1) - mu.mean())) <= 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=1, max_value=8), probs, seeds)
def test_convex_rules_stay_in_hull(n, p, seed):
    mu = np.random.default_rng(seed).normal(size=n)
    for rule in (engine.EQUAL_NEIGHBOR, engine.METROPOLIS, engine.MAX_WEIGHT):
        tr = engine.run_matrix(rule, RandomConnected(n, p, seed), mu, 100, keep_matrices=False)
        assert (np.diff(tr.estimates.max(axis=1)) <= 1e-12).all()
        assert (np.diff(tr.estimates.min(axis=1)) >= -1e-12).all()


@given(st.data())
def test_graph_file_roundtrip(data):
    n = data.draw(st.integers(min_value=1, max_value=10))
    gs = [generate(RandomConnected(n, data.draw(probs), data.draw(seeds)), 1)
          for _ in range(data.draw(st.integers(min_value=1, max_value=4)))]
    assert parse_graphs(format_graphs(gs)) == gs
    assert Schedule(tuple(parse_graphs(format_graphs(gs)))) == Schedule(tuple(gs))


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_csv_floats_round_trip(x):
    from consensus_lab.cli import _fmt
    assert float(_fmt(x)) == x
