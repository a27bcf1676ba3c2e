from fractions import Fraction as F

import numpy as np
import pytest

from consensus_lab import rules
from consensus_lab.graph import Graph, complete_graph, cycle_graph, path_graph, star_graph
from consensus_lab.rules import (LearningState, equal_neighbor_matrix, fixed_weight_matrix,
                                 max_metropolis_step, max_weight_step, metropolis_matrix,
                                 metropolis_symmetrize)

THIRD = [[2 / 3, 1 / 3, 0], [1 / 3, 1 / 3, 1 / 3], [0, 1 / 3, 2 / 3]]


def exact(rows):
    return np.array([[float(F(x)) for x in r] for r in rows])


def test_equal_neighbor_path():
    expected = exact([["1/2", "1/2", 0], ["1/3", "1/3", "1/3"], [0, "1/2", "1/2"]])
    np.testing.assert_allclose(equal_neighbor_matrix(path_graph(3)), expected, rtol=0, atol=1e-15)


@pytest.mark.parametrize("n", [1, 2, 5])
def test_equal_neighbor_complete(n):
    np.testing.assert_allclose(equal_neighbor_matrix(complete_graph(n)), np.full((n, n), 1 / n), atol=1e-15)


def test_metropolis_symmetrize_examples():
    np.testing.assert_allclose(metropolis_symmetrize(equal_neighbor_matrix(path_graph(3))), THIRD, atol=1e-15)
    np.testing.assert_array_equal(metropolis_symmetrize(np.eye(3)), np.eye(3))
    sym = metropolis_matrix(cycle_graph(5))
    np.testing.assert_allclose(metropolis_symmetrize(sym), sym, atol=1e-15)


def test_metropolis_symmetrize_rejects_negative():
    with pytest.raises(ValueError):
        metropolis_symmetrize(np.array([[1.5, -0.5], [0.5, 0.5]]))


def test_metropolis_matrix_examples():
    np.testing.assert_allclose(metropolis_matrix(path_graph(3)), THIRD, atol=1e-15)
    np.testing.assert_allclose(metropolis_matrix(complete_graph(4)), np.full((4, 4), 0.25), atol=1e-15)
    star = metropolis_matrix(star_graph(4))
    assert star[0, 0] == pytest.approx(0.25)
    assert all(star[0, j] == pytest.approx(0.25) and star[j, j] == pytest.approx(0.75) for j in (1, 2, 3))


def test_fixed_weight_examples():
    g = path_graph(3)
    np.testing.assert_allclose(fixed_weight_matrix(g, (3, 3, 3)), THIRD, atol=1e-15)
    np.testing.assert_allclose(fixed_weight_matrix(g, g.degrees), equal_neighbor_matrix(g), atol=1e-15)
    a = fixed_weight_matrix(star_graph(4), (2, 2, 2, 2))
    assert a[0, 0] == pytest.approx(-0.5)
    np.testing.assert_allclose(a.sum(axis=1), 1.0, atol=1e-15)


def test_max_weight_learns_first():
    a, s = max_weight_step(path_graph(3), LearningState.initial(3))
    assert s.d_prime == (2, 3, 2)
    np.testing.assert_allclose(a, equal_neighbor_matrix(path_graph(3)), atol=1e-15)


def test_max_weight_remembers_triangle():
    _, s = max_weight_step(cycle_graph(3), LearningState.initial(3))
    assert s.d_prime == (3, 3, 3)
    a, s2 = max_weight_step(path_graph(3), s)
    assert s2 == s
    np.testing.assert_allclose(a, THIRD, atol=1e-15)


def test_max_weight_complete_forever():
    s = LearningState.initial(5)
    for _ in range(4):
        a, s = max_weight_step(complete_graph(5), s)
    assert s.d_prime == (5,) * 5
    np.testing.assert_allclose(a, np.full((5, 5), 0.2), atol=1e-15)


def test_max_metropolis_uses_old_degrees():
    a, s = max_metropolis_step(star_graph(4), LearningState.initial(4))
    assert s.d_prime == (4, 2, 2, 2)
    assert a[0, 0] == pytest.approx(-0.5)
    assert all(a[0, j] == a[j, 0] == pytest.approx(0.5) and a[j, j] == pytest.approx(0.5) for j in (1, 2, 3))


def test_max_metropolis_nonnegative_once_learned():
    g = star_graph(5, hub=3)
    state = LearningState((5, 2, 5, 2, 2))
    a, s = max_metropolis_step(g, state)
    assert (a >= 0).all()
    np.testing.assert_allclose(a.sum(axis=0), 1.0, atol=1e-15)
    np.testing.assert_allclose(a.sum(axis=1), 1.0, atol=1e-15)


def test_single_vertex():
    g = Graph.from_edges(1, [])
    a, s = max_metropolis_step(g, LearningState.initial(1))
    np.testing.assert_array_equal(a, [[1.0]])
    assert s == LearningState.initial(1)


def test_learning_state_bounds():
    with pytest.raises(ValueError):
        LearningState((1, 2, 2))
    with pytest.raises(ValueError):
        LearningState((2, 4, 2))
    with pytest.raises(ValueError):
        LearningState.initial(3).observe(path_graph(4))


def test_rules_reject_graphs_outside_class():
    with pytest.raises(ValueError):
        equal_neighbor_matrix(Graph.from_edges(4, [(1, 2), (3, 4)]))


def test_support_matches_graph():
    g = path_graph(4)
    for a in (equal_neighbor_matrix(g), metropolis_matrix(g), max_metropolis_step(g, LearningState.initial(4))[0]):
        off = a.copy()
        np.fill_diagonal(off, 0)
        assert np.array_equal(off != 0, rules._off_diagonal(g) != 0)
