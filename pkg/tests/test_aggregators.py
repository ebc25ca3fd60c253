import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ranksiege.aggregators import (
    LaplacianSystem,
    hodgerank,
    rank_centrality,
    stationary_distribution,
    transition_matrix,
)
from ranksiege.btl import pair_probs
from ranksiege.core import ComparisonGraph, num_pairs, pair_index, ranking_from_scores
from ranksiege.errors import AggregationError, NumericError


def noiseless(order, copies=1):
    n = len(order)
    w = np.zeros(num_pairs(n), dtype=np.int64)
    for a, b in itertools.combinations(order, 2):
        w[pair_index(a, b, n)] = copies
    return ComparisonGraph(n, w)


def expected_counts(order, total=1000):
    """BTL-proportional counts: every pair compared, outcomes in expectation."""
    n = len(order)
    theta = np.empty(n)
    theta[list(order)] = np.linspace(1.5, -1.5, n)
    return ComparisonGraph(n, np.rint(total * pair_probs(theta)).astype(np.int64))


def test_laplacian_invariants(rng):
    g = ComparisonGraph(4, rng.integers(0, 5, size=12))
    sys = LaplacianSystem.from_graph(g)
    np.testing.assert_allclose(sys.laplacian.sum(axis=1), 0, atol=1e-9)
    np.testing.assert_allclose(sys.laplacian, sys.laplacian.T)
    assert np.linalg.eigvalsh(sys.laplacian).min() > -1e-9


def test_hodgerank_two_candidates_normal_equations():
    # minimize 3 (t0 - t1 - 1)^2 + (t0 - t1 + 1)^2 with t0 + t1 = 0
    np.testing.assert_allclose(hodgerank(ComparisonGraph(2, [3, 1])), [0.25, -0.25], atol=1e-12)


def test_hodgerank_symmetric_data_gives_zero(rng):
    m = rng.integers(1, 4, size=(4, 4))
    m = m + m.T
    w = [m[i, j] for i in range(4) for j in range(4) if i != j]
    np.testing.assert_allclose(hodgerank(ComparisonGraph(4, w)), 0, atol=1e-12)


def test_hodgerank_disconnected_names_components():
    with pytest.raises(AggregationError) as err:
        hodgerank(ComparisonGraph(4, [1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1]))
    assert sorted(map(sorted, err.value.components)) == [[0, 1], [2, 3]]


@pytest.mark.parametrize("n", [2, 5, 8])
def test_hodgerank_recovers_noiseless_order(n, rng):
    order = tuple(rng.permutation(n).tolist())
    assert ranking_from_scores(hodgerank(noiseless(order))) == order


def test_hodgerank_scale_invariance(rng):
    g = ComparisonGraph(5, rng.integers(1, 6, size=20))
    s = hodgerank(g)
    assert s.sum() == pytest.approx(0, abs=1e-12)
    assert ranking_from_scores(hodgerank(ComparisonGraph(5, 7 * g.weights))) == ranking_from_scores(s)


def test_rank_centrality_two_state_chain():
    # the walk moves toward winners; pi P = pi solved by hand with d_max = 1
    np.testing.assert_allclose(rank_centrality(ComparisonGraph(2, [3, 1])), [0.75, 0.25], atol=1e-12)


def test_rank_centrality_uniform_weights():
    np.testing.assert_allclose(rank_centrality(ComparisonGraph(4, np.ones(12))), 0.25, atol=1e-12)


def test_rank_centrality_rejects_absorbing_winner():
    with pytest.raises(AggregationError):
        rank_centrality(noiseless((0, 1, 2)))
    with pytest.raises(AggregationError):
        rank_centrality(ComparisonGraph.empty(3))


@pytest.mark.parametrize("n", range(2, 9))
def test_rank_centrality_recovers_expected_count_order(n, rng):
    order = tuple(rng.permutation(n).tolist())
    assert ranking_from_scores(rank_centrality(expected_counts(order))) == order


def test_transition_matrix_is_stochastic(rng):
    g = ComparisonGraph(5, rng.integers(0, 4, size=20))
    p = transition_matrix(g)
    np.testing.assert_allclose(p.sum(axis=1), 1, atol=1e-12)
    assert (p >= 0).all()
    with pytest.raises(AggregationError):
        transition_matrix(g, d_max=1)


def test_stationary_distribution_reports_residual():
    p = np.array([[0.9, 0.1], [0.5, 0.5]])
    np.testing.assert_allclose(stationary_distribution(p), [5 / 6, 1 / 6], atol=1e-9)
    with pytest.raises(NumericError) as err:
        stationary_distribution(p, max_iters=1)
    assert err.value.residual > 1e-10


@given(st.integers(3, 6), st.integers(0, 2**31 - 1), st.integers(0, 4))
def test_rank_centrality_fixed_point_and_d_max_invariance(n, seed, extra):
    rng = np.random.default_rng(seed)
    g = ComparisonGraph(n, rng.integers(1, 6, size=num_pairs(n)))
    pi = rank_centrality(g)
    assert pi.sum() == pytest.approx(1.0, abs=1e-12) and (pi >= 0).all()
    assert np.abs(pi @ transition_matrix(g) - pi).max() <= 1e-10
    np.testing.assert_allclose(rank_centrality(g, d_max=n - 1 + extra), pi, atol=1e-8)
