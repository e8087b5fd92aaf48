import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zmdsense.errors import InfeasibleGraph, NonIntegralDegree, UnrealizableDistribution
from zmdsense.graphs import (
    DegreeDistribution,
    SensingGraph,
    build_irregular_graph,
    build_one_to_one_graph,
    build_regular_graph,
    degree_distribution_of,
    largest_remainder,
)


def test_regular_small_forced():
    g = build_regular_graph(4, 2, 2, seed=1)
    g.check()
    assert g.num_edges == 4
    assert np.all(g.var_degrees == 1)
    assert np.all(g.meas_degrees == 2)


def test_regular_fig2_setup():
    g = build_regular_graph(1000, 500, 4, seed=3)
    g.check()
    assert set(g.var_degrees.tolist()) == {2}
    assert set(g.meas_degrees.tolist()) == {4}


def test_regular_dense_degrees_have_no_parallel_edges():
    # expected parallel edges under plain stub matching here is ~27, so repair must kick in
    g = build_regular_graph(1000, 500, 12, seed=0)
    g.check()
    assert set(g.var_degrees.tolist()) == {6}


def test_regular_errors():
    with pytest.raises(NonIntegralDegree):
        build_regular_graph(4, 3, 2, seed=0)
    with pytest.raises(InfeasibleGraph):
        build_regular_graph(2, 4, 4, seed=0)


def test_complete_bipartite_is_reachable():
    g = build_regular_graph(3, 3, 3, seed=0)
    assert g.num_edges == 9


def test_seeded_determinism():
    a = build_regular_graph(200, 100, 4, seed=42)
    b = build_regular_graph(200, 100, 4, seed=42)
    c = build_regular_graph(200, 100, 4, seed=43)
    assert a == b
    assert a != c


def test_irregular_degenerate_matches_regular_law():
    g = build_irregular_graph(100, 50, DegreeDistribution.regular(2, 4), seed=5)
    g.check()
    assert degree_distribution_of(g).allclose(DegreeDistribution.regular(2, 4), 0)


def test_irregular_forced():
    g = build_irregular_graph(6, 3, DegreeDistribution({1: 1.0}, {2: 1.0}), seed=0)
    assert g.num_edges == 6
    assert np.all(g.meas_degrees == 2)


def test_irregular_round_trip():
    dist = DegreeDistribution({1: 0.5, 2: 0.5}, {3: 1.0})
    assert dist.is_consistent(500, 250)
    g = build_irregular_graph(500, 250, dist, seed=9)
    g.check()
    back = degree_distribution_of(g)
    assert back.allclose(dist, atol=1 / 250)


def test_irregular_unrealizable():
    with pytest.raises(UnrealizableDistribution):
        build_irregular_graph(10, 5, DegreeDistribution({1: 1.0}, {3: 1.0}), seed=0)


def test_largest_remainder_keeps_totals():
    counts = largest_remainder({1: 1 / 3, 2: 1 / 3, 3: 1 / 3}, 10)
    assert sum(counts.values()) == 10
    assert counts == {1: 4, 2: 3, 3: 3}


def test_one_to_one():
    g = build_one_to_one_graph(5, 5, seed=0)
    assert np.all(g.var_degrees == 1) and np.all(g.meas_degrees == 1)
    g = build_one_to_one_graph(500, 100, seed=0)
    assert (g.var_degrees == 1).sum() == 100
    assert (g.var_degrees == 0).sum() == 400
    with pytest.raises(InfeasibleGraph):
        build_one_to_one_graph(3, 4, seed=0)


def test_degree_distribution_examples():
    d = degree_distribution_of(build_regular_graph(4, 2, 2, seed=0))
    assert d.lam == {1: 1.0} and d.rho == {2: 1.0}
    d = degree_distribution_of(build_one_to_one_graph(5, 2, seed=0))
    assert d.lam == {0: 0.6, 1: 0.4} and d.rho == {1: 1.0}


def test_distribution_validation():
    with pytest.raises(ValueError):
        DegreeDistribution({1: 0.5}, {2: 1.0})
    with pytest.raises(ValueError):
        DegreeDistribution({1: 1.5, 2: -0.5}, {2: 1.0})


def test_text_round_trip(tmp_path):
    g = build_regular_graph(12, 6, 4, seed=2)
    text = g.to_text()
    assert text.splitlines()[0] == "12 6"
    assert text.splitlines()[1].startswith("0: ")
    p = tmp_path / "g.txt"
    g.save(p)
    assert SensingGraph.load(p) == g


def test_rejects_parallel_edges():
    with pytest.raises(ValueError):
        SensingGraph(3, 2, np.array([0, 0]), np.array([1, 1]))


def test_edge_frequencies_uniform():
    # regular(L=8, M=4, d_M=2): each VN has one edge, to each MN with probability 1/4
    n = 10_000
    counts = np.zeros((8, 4))
    rng = np.random.default_rng(123)
    for _ in range(n):
        g = build_regular_graph(8, 4, 2, seed=rng)
        counts[g.edge_v, g.edge_m] += 1
    p = 0.25
    se = np.sqrt(p * (1 - p) / n)
    assert np.all(np.abs(counts / n - p) < 5 * se)


@settings(max_examples=40, deadline=None)
@given(L=st.integers(1, 30), mult=st.integers(1, 4), d_M=st.integers(1, 6), seed=st.integers(0, 2**32 - 1))
def test_regular_invariants_property(L, mult, d_M, seed):
    # choose M so that L | M*d_M
    M = L * mult
    if d_M > L:
        with pytest.raises(InfeasibleGraph):
            build_regular_graph(L, M, d_M, seed=seed)
        return
    g = build_regular_graph(L, M, d_M, seed=seed)
    g.check()
    assert np.all(g.meas_degrees == d_M)
    assert np.all(g.var_degrees == mult * d_M)
    assert degree_distribution_of(g).lam == {mult * d_M: 1.0}
