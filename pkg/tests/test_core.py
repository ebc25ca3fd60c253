import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ranksiege.core import (
    Comparison,
    ComparisonGraph,
    Origin,
    PairIndex,
    check_ranking,
    num_pairs,
    pair_arrays,
    pair_from_index,
    pair_index,
    positions,
    ranking_from_scores,
    weights_from_stream,
)
from ranksiege.errors import DataError, InvalidPairError


def test_pair_index_examples():
    assert pair_index(0, 1, 3) == 0
    assert pair_index(2, 1, 3) == 5
    with pytest.raises(InvalidPairError):
        pair_index(1, 1, 3)
    with pytest.raises(InvalidPairError):
        pair_index(0, 3, 3)


def test_pair_index_matches_lexicographic_enumeration():
    for n in range(2, 7):
        ordered = [(i, j) for i, j in itertools.product(range(n), repeat=2) if i != j]
        assert [pair_index(i, j, n) for i, j in ordered] == list(range(num_pairs(n)))


@pytest.mark.parametrize("n", [2, 3, 8, 32])
def test_pair_index_round_trip(n):
    for flat in range(num_pairs(n)):
        i, j = pair_from_index(flat, n)
        assert pair_index(i, j, n) == flat
        assert PairIndex.from_flat(flat, n) == PairIndex.of(i, j, n)


def test_pair_arrays_reverse():
    first, second, rev = pair_arrays(5)
    assert np.array_equal(first[rev], second)
    assert np.array_equal(second[rev], first)
    assert not first.flags.writeable


def test_comparison_rejects_self_pair():
    with pytest.raises(InvalidPairError):
        Comparison(2, 2)
    assert Comparison(0, 1).origin is Origin.ORIGINAL


def test_weights_from_stream_counts():
    g = weights_from_stream([Comparison(0, 1), Comparison(0, 1), Comparison(1, 0)], 2)
    assert g.weight(0, 1) == 2 and g.weight(1, 0) == 1
    assert g.total == 3
    assert weights_from_stream([], 4).total == 0
    with pytest.raises(InvalidPairError):
        weights_from_stream([Comparison(0, 5)], 3)


def test_graph_is_immutable_and_validated():
    g = ComparisonGraph(3, [1, 0, 0, 2, 0, 0])
    with pytest.raises(ValueError):
        g.weights[0] = 5
    with pytest.raises(DataError):
        ComparisonGraph(3, [1, 2])
    with pytest.raises(DataError):
        ComparisonGraph(2, [-1, 0])
    m = g.matrix()
    assert m[0, 1] == 1 and m[1, 2] == 2
    np.testing.assert_allclose(g.normalized().sum(), 1.0)
    with pytest.raises(DataError):
        ComparisonGraph.empty(3).normalized()


def test_ranking_from_scores_examples():
    assert ranking_from_scores([0.5, 0.3, 0.2]) == (0, 1, 2)
    assert ranking_from_scores([0.1, 0.2, 0.7]) == (2, 1, 0)
    assert ranking_from_scores([0.4, 0.4, 0.2]) == (0, 1, 2)
    with pytest.raises(DataError):
        ranking_from_scores([0.1, np.nan])


def test_check_ranking_and_positions():
    assert check_ranking([2, 0, 1]) == (2, 0, 1)
    with pytest.raises(DataError):
        check_ranking([0, 0, 1])
    assert positions((2, 0, 1)).tolist() == [1, 2, 0]


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=12), st.floats(1e-3, 1e3))
def test_ranking_is_scale_invariant(scores, a):
    s = np.asarray(scores)
    assert ranking_from_scores(a * s) == ranking_from_scores(s) or np.unique(s).size < s.size


@given(
    st.integers(2, 7).flatmap(
        lambda n: st.tuples(
            st.just(n),
            st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda p: p[0] != p[1]),
                     max_size=40),
            st.permutations(range(n)),
        )
    )
)
def test_counting_commutes_with_relabeling(case):
    n, pairs, perm = case
    stream = [Comparison(i, j) for i, j in pairs]
    relabeled = weights_from_stream([Comparison(perm[c.winner], perm[c.loser]) for c in stream], n)
    counted = weights_from_stream(stream, n).matrix()
    expect = np.zeros_like(counted)
    expect[np.ix_(perm, perm)] = counted
    assert np.array_equal(relabeled.matrix(), expect)
    assert relabeled.total == len(stream)
