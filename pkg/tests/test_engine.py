import numpy as np
import pytest

from consensus_lab import engine
from consensus_lab.engine import FixedWeight, run_agents, run_matrix, traces_agree
from consensus_lab.graph import RandomConnected, RotatingStar, Static, complete_graph, path_graph, star_graph
from consensus_lab.metrics import convergence_time


def test_hull_escape_single_round():
    tr = run_agents(engine.MAX_METROPOLIS, Static(star_graph(4)), [0, 1, 1, 1], 1)
    np.testing.assert_array_equal(tr.estimates[1], [1.5, 0.5, 0.5, 0.5])
    assert tr.estimates[1].mean() == 0.75
    assert list(tr.d_prime_history[1]) == [4, 2, 2, 2]
    assert tr.learning_rounds == frozenset({1})


@pytest.mark.parametrize("algorithm", engine.AGENT_ALGORITHMS)
def test_consensus_is_fixed_point(algorithm):
    tr = run_agents(algorithm, RotatingStar(5, 2), [0.3] * 5, 20)
    assert (tr.estimates == 0.3).all()


@pytest.mark.parametrize("algorithm", engine.AGENT_ALGORITHMS)
def test_trace_shape(algorithm):
    mu = np.arange(6.0)
    tr = run_agents(algorithm, RandomConnected(6, 0.4, 1), mu, 15)
    assert tr.estimates.shape == (16, 6) and tr.d_prime_history.shape == (16, 6)
    np.testing.assert_array_equal(tr.estimates[0], mu)
    assert (tr.d_prime_history[0] == 2).all()
    assert tr.horizon == 15 and tr.n == 6
    assert (np.diff(tr.d_prime_history, axis=0) >= 0).all()
    assert (tr.d_prime_history <= 6).all()


def test_equal_neighbor_complete_averages_in_one_round():
    mu = np.array([3.0, -1.0, 4.0, 1.0, 5.0])
    tr = run_matrix(engine.EQUAL_NEIGHBOR, Static(complete_graph(5)), mu, 1)
    np.testing.assert_allclose(tr.estimates[1], mu.mean(), atol=1e-15)


def test_metropolis_path_one_round():
    tr = run_matrix(engine.METROPOLIS, Static(path_graph(3)), [1, 0, 0], 1)
    np.testing.assert_allclose(tr.estimates[1], [2 / 3, 1 / 3, 0], atol=1e-15)


def test_fixed_weight_star_never_converges():
    # eigenvalue -1: the two classes swap forever
    tr = run_matrix(FixedWeight((2, 2, 2, 2)), Static(star_graph(4)), [1, 0, 0, 0], 200)
    diam = tr.estimates.max(axis=1) - tr.estimates.min(axis=1)
    assert diam[-1] > 0.5
    assert convergence_time(tr, 0.1) is None
    assert tr.rule == "FixedWeight"


@pytest.mark.parametrize("algorithm", engine.AGENT_ALGORITHMS)
def test_agents_match_matrices(algorithm):
    for seed in range(5):
        model = RandomConnected(9, 0.25, seed)
        mu = np.random.default_rng(seed).normal(size=9)
        a = run_agents(algorithm, model, mu, 80)
        b = run_matrix(algorithm, model, mu, 80)
        assert traces_agree(a, b, 1e-12)
        np.testing.assert_array_equal(a.d_prime_history, b.d_prime_history)
        assert a.learning_rounds == b.learning_rounds


@pytest.mark.parametrize("algorithm", engine.AGENT_ALGORITHMS)
def test_anonymity_under_shuffled_delivery(algorithm):
    model = RotatingStar(7, 3)
    mu = np.linspace(-1, 1, 7)
    plain = run_agents(algorithm, model, mu, 60)
    shuffled = run_agents(algorithm, model, mu, 60, delivery_rng=np.random.default_rng(5))
    np.testing.assert_array_equal(plain.estimates, shuffled.estimates)


def test_traces_agree_tolerance():
    tr = run_matrix(engine.EQUAL_NEIGHBOR, Static(path_graph(3)), [1, 0, 0], 5)
    assert traces_agree(tr, tr, 0.0)
    other = run_matrix(engine.EQUAL_NEIGHBOR, Static(path_graph(3)), [1, 0, 0], 5)
    other.estimates[3, 1] += 2e-9
    assert not traces_agree(tr, other, 1e-9)
    shorter = run_matrix(engine.EQUAL_NEIGHBOR, Static(path_graph(3)), [1, 0, 0], 4)
    with pytest.raises(ValueError):
        traces_agree(tr, shorter, 1.0)


def test_input_validation():
    with pytest.raises(ValueError):
        run_agents(engine.METROPOLIS, Static(path_graph(3)), [1, 0, 0], 2)
    with pytest.raises(ValueError):
        run_matrix(engine.EQUAL_NEIGHBOR, Static(path_graph(3)), [1, 0], 2)
    with pytest.raises(ValueError):
        run_matrix("Nope", Static(path_graph(3)), [1, 0, 0], 2)


def test_matrices_kept_on_request():
    tr = run_matrix(engine.MAX_WEIGHT, Static(path_graph(3)), [1, 0, 0], 4)
    assert len(tr.matrices) == 4
    assert run_matrix(engine.MAX_WEIGHT, Static(path_graph(3)), [1, 0, 0], 4, keep_matrices=False).matrices is None
