import itertools
import math
from collections import deque

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from epigsp.errors import ArgumentError, ConfigurationError
from epigsp.graph import (
    DistanceGraphConfig,
    Graph,
    ScaleFreeConfig,
    betweenness_centrality,
    build_distance_graph,
    build_scale_free_graph,
    closeness_centrality,
    degrees,
    distance_graph_from_coords,
    isolate_nodes,
    laplacian,
    rank_nodes,
)

from conftest import random_graph


def _star(n):
    w = np.zeros((n, n))
    w[0, 1:] = w[1:, 0] = 1.0
    return Graph(w)


# --- construction -------------------------------------------------------------


@pytest.mark.parametrize(
    "w",
    [
        np.zeros((2, 3)),
        np.array([[0, 1], [2, 0]], dtype=float),
        np.array([[1, 0], [0, 0]], dtype=float),
        np.array([[0, -1], [-1, 0]], dtype=float),
        np.array([[0, np.nan], [np.nan, 0]]),
    ],
)
def test_graph_rejects_invalid_weights(w):
    with pytest.raises(ArgumentError):
        Graph(w)


def test_graph_weights_are_read_only():
    g = Graph(np.array([[0, 1], [1, 0]], dtype=float))
    with pytest.raises(ValueError):
        g.weights[0, 1] = 5.0


@pytest.mark.parametrize("kwargs", [dict(n=1), dict(box_side=0), dict(threshold=-1), dict(sigma2=0)])
def test_distance_config_validation(kwargs):
    with pytest.raises(ConfigurationError):
        DistanceGraphConfig(**kwargs)


def test_scale_free_config_validation():
    with pytest.raises(ConfigurationError):
        ScaleFreeConfig(n=3, m=3)


def test_identical_coordinates_give_unit_weight():
    g = distance_graph_from_coords([[1.0, 1.0], [1.0, 1.0]], threshold=1.0, sigma2=1.0)
    assert g.weights[0, 1] == 1.0 and g.weights[0, 0] == 0.0


def test_pair_beyond_threshold_has_no_edge():
    g = distance_graph_from_coords([[0.0, 0.0], [1.5, 0.0]], threshold=1.0)
    assert g.weights[0, 1] == 0.0


def test_distance_graph_matches_pairwise_recheck():
    cfg = DistanceGraphConfig(n=400, box_side=10, threshold=1.95, seed=11)
    g = build_distance_graph(cfg)
    c = g.coords
    for i in range(0, 400, 7):
        for j in range(400):
            d = math.dist(c[i], c[j])
            expected = math.exp(-(d**2) / 1.95**2) if (i != j and d <= 1.95) else 0.0
            assert g.weights[i, j] == pytest.approx(expected, abs=1e-15)
    assert np.all(c >= 0) and np.all(c <= 10)


def test_distance_graph_is_seed_deterministic():
    a = build_distance_graph(DistanceGraphConfig(n=50, seed=4))
    b = build_distance_graph(DistanceGraphConfig(n=50, seed=4))
    c = build_distance_graph(DistanceGraphConfig(n=50, seed=5))
    assert np.array_equal(a.weights, b.weights) and np.array_equal(a.coords, b.coords)
    assert not np.array_equal(a.weights, c.weights)


def test_scale_free_mean_degree_and_structure():
    g = build_scale_free_graph(ScaleFreeConfig(n=500, m=3, seed=0))
    deg = (g.weights > 0).sum(axis=1)
    assert set(np.unique(g.weights)) <= {0.0, 1.0}
    assert g.num_edges == 3 * 2 // 2 + 3 * (500 - 3)
    assert deg.mean() == pytest.approx(6.0, abs=0.05)
    assert deg.min() >= 3
    assert nx.is_connected(g.to_networkx())


def test_scale_free_tail_heavier_than_random_graph():
    g = build_scale_free_graph(ScaleFreeConfig(n=50, m=2, seed=1))
    er = nx.gnm_random_graph(50, g.num_edges, seed=1)
    assert (g.weights > 0).sum(axis=1).max() > max(d for _, d in er.degree())


@given(st.integers(2, 40), st.integers(1, 5), st.integers(0, 10_000))
def test_scale_free_min_degree_property(n, m, seed):
    if m >= n:
        return
    g = build_scale_free_graph(ScaleFreeConfig(n=n, m=m, seed=seed))
    deg = (g.weights > 0).sum(axis=1)
    assert deg.min() >= m
    assert g.num_edges == m * (m - 1) // 2 + m * (n - m)


# --- degrees, Laplacian, isolation -------------------------------------------------


def test_degrees_examples(path3):
    assert degrees(Graph(np.zeros((3, 3)))).tolist() == [0, 0, 0]
    assert degrees(path3).tolist() == [1, 2, 1]
    tri = np.full((3, 3), 0.5)
    np.fill_diagonal(tri, 0)
    assert degrees(Graph(tri)).tolist() == [1, 1, 1]


def test_laplacian_two_nodes():
    L = laplacian(Graph(np.array([[0, 1], [1, 0]], dtype=float)))
    assert L.tolist() == [[1, -1], [-1, 1]]


@given(st.integers(2, 20), st.integers(0, 10_000))
def test_laplacian_rows_sum_to_zero_and_psd(n, seed):
    g = random_graph(np.random.default_rng(seed), n)
    L = laplacian(g)
    assert np.abs(L.sum(axis=1)).max() <= 1e-12
    assert np.linalg.eigvalsh(L).min() >= -1e-10


def test_isolate_nodes_examples(path3):
    assert isolate_nodes(path3, []) == path3
    out = isolate_nodes(path3, [0])
    assert out.num_edges == 1 and out.weights[1, 2] == 1.0
    assert isolate_nodes(path3, [0, 1, 2]).num_edges == 0
    assert path3.num_edges == 2  # original untouched
    with pytest.raises(ArgumentError):
        isolate_nodes(path3, [3])


@given(st.integers(2, 15), st.integers(0, 10_000), st.data())
def test_isolate_nodes_properties(n, seed, data):
    g = random_graph(np.random.default_rng(seed), n)
    nodes = data.draw(st.sets(st.integers(0, n - 1)))
    once = isolate_nodes(g, nodes)
    assert isolate_nodes(once, nodes) == once
    w = once.weights
    assert np.array_equal(w, w.T) and np.all(np.diag(w) == 0) and np.all(w >= 0)
    keep = [i for i in range(n) if i not in nodes]
    assert np.array_equal(w[np.ix_(keep, keep)], g.weights[np.ix_(keep, keep)])
    if nodes:
        assert not w[list(nodes)].any()


# --- centralities ---------------------------------------------------------------------


def _bfs(adj, s):
    dist = {s: 0}
    q = deque([s])
    while q:
        u = q.popleft()
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                q.append(v)
    return dist


def _oracle_centralities(g):
    """Enumerate every simple path; shortest ones define betweenness."""
    n = g.n
    adj = {i: [j for j in range(n) if g.weights[i, j] > 0] for i in range(n)}
    bc = np.zeros(n)
    for s, t in itertools.combinations(range(n), 2):
        paths = []

        def walk(path):
            u = path[-1]
            if u == t:
                paths.append(list(path))
                return
            for v in adj[u]:
                if v not in path:
                    path.append(v)
                    walk(path)
                    path.pop()

        walk([s])
        if not paths:
            continue
        best = min(len(p) for p in paths)
        shortest = [p for p in paths if len(p) == best]
        for p in shortest:
            for v in p[1:-1]:
                bc[v] += 1.0 / len(shortest)
    cc = np.zeros(n)
    for i in range(n):
        d = _bfs(adj, i)
        others = [v for k, v in d.items() if k != i]
        cc[i] = len(others) / sum(others) if others else 0.0
    return bc, cc


def test_centrality_examples(path3):
    assert betweenness_centrality(path3).tolist() == [0, 1, 0]
    assert closeness_centrality(path3)[1] == 1.0
    star = _star(6)
    bc, cc = betweenness_centrality(star), closeness_centrality(star)
    assert bc.argmax() == 0 and np.all(bc[1:] == 0)
    assert cc.argmax() == 0
    k5 = np.ones((5, 5)) - np.eye(5)
    assert np.all(betweenness_centrality(Graph(k5)) == 0)
    iso = np.zeros((3, 3))
    iso[0, 1] = iso[1, 0] = 1
    assert closeness_centrality(Graph(iso))[2] == 0.0


@given(st.integers(2, 8), st.integers(0, 100_000), st.floats(0.15, 0.8))
def test_centralities_match_exhaustive_paths(n, seed, density):
    g = random_graph(np.random.default_rng(seed), n, density)
    bc, cc = _oracle_centralities(g)
    np.testing.assert_allclose(betweenness_centrality(g), bc, rtol=0, atol=1e-12)
    np.testing.assert_allclose(closeness_centrality(g), cc, rtol=0, atol=1e-12)


def test_centralities_ignore_weight_values():
    g = random_graph(np.random.default_rng(3), 8, 0.5)
    binary = Graph((g.weights > 0).astype(float))
    assert np.array_equal(betweenness_centrality(g), betweenness_centrality(binary))


def test_rank_nodes_breaks_ties_by_index():
    assert rank_nodes([1.0, 3.0, 3.0, 0.5, 1.0]).tolist() == [1, 2, 0, 4, 3]
