import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from epigsp.errors import ArgumentError
from epigsp.graph import Graph, isolate_nodes, laplacian
from epigsp.variation import (
    local_variation,
    sign_phi,
    temporal_variation,
    tlv,
    tlv_normalized,
    total_variation,
)

from conftest import random_graph
from oracles import naive_lv, naive_temporal, naive_tlv, naive_tlv_normalized, naive_tv


graphs = st.builds(
    lambda n, seed, dens: random_graph(np.random.default_rng(seed), n, dens),
    st.integers(2, 10), st.integers(0, 100_000), st.floats(0.1, 1.0),
)


# --- hand examples ----------------------------------------------------------------


def test_examples(path3):
    assert total_variation(path3, np.ones(3)) == 0.0
    two = Graph(np.array([[0, 1], [1, 0]], dtype=float))
    assert total_variation(two, [0.0, 1.0]) == 2.0
    assert local_variation(path3, [0.0, 1.0, 3.0]).tolist() == [1, 5, 4]
    assert temporal_variation([[0.0, 2.0, 1.0]]).tolist() == [[0, 4, 1]]
    v = tlv(two, [[0.0, 1.0], [0.0, 0.0]], 0.5).values
    assert v[:, 1].tolist() == [1.0, 0.5]


def test_sign_phi():
    assert sign_phi(0.0) == 0 and sign_phi(3.2) == 1 and sign_phi(-1e-300) == -1


def test_dimension_mismatch(path3):
    with pytest.raises(ArgumentError):
        local_variation(path3, np.ones(4))
    with pytest.raises(ArgumentError):
        total_variation(path3, np.ones((3, 2)))
    with pytest.raises(ArgumentError):
        tlv(path3, np.ones((3, 2)), 1.5)
    with pytest.raises(ArgumentError):
        tlv_normalized(path3, np.ones((3, 1)), 0.5)


def test_normalized_constant_window_is_zero(path3):
    assert not tlv_normalized(path3, np.ones((3, 5)), 0.4).values.any()


def test_normalized_single_changing_node():
    # node 0 is the only one that changes, and edge 0-1 carries all spatial variation
    w = np.zeros((3, 3))
    w[0, 1] = w[1, 0] = 1.0
    X = np.array([[0.0, 2.0], [0.0, 0.0], [5.0, 5.0]])
    alpha = 0.3
    v = tlv_normalized(Graph(w), X, alpha).values
    lv_share = 4.0 / 4.0
    assert v[0, 1] == pytest.approx(alpha * 1 + (1 - alpha) * lv_share, abs=1e-15)
    assert v[1, 1] == pytest.approx((1 - alpha) * 1.0, abs=1e-15)
    assert v[2, 1] == 0.0


# --- oracle equivalence -------------------------------------------------------


@given(graphs, st.integers(2, 6), st.floats(0, 1), st.integers(0, 100_000))
def test_oracle_equivalence(g, T, alpha, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(g.n, T))
    w = g.weights.tolist()
    Xl = X.tolist()
    for t in range(T):
        np.testing.assert_allclose(local_variation(g, X[:, t]), naive_lv(w, X[:, t].tolist()),
                                   rtol=0, atol=1e-12)
    np.testing.assert_allclose(temporal_variation(X), naive_temporal(Xl), rtol=0, atol=1e-12)
    np.testing.assert_allclose(tlv(g, X, alpha).values, naive_tlv(w, Xl, alpha), rtol=0, atol=1e-12)
    np.testing.assert_allclose(tlv_normalized(g, X, alpha).values, naive_tlv_normalized(w, Xl, alpha),
                               rtol=0, atol=1e-12)


# --- properties --------------------------------------------------------------------


@given(graphs, st.integers(0, 100_000))
def test_decomposition_and_quadratic_form(g, seed):
    x = np.random.default_rng(seed).normal(size=g.n)
    lv = local_variation(g, x)
    tv = total_variation(g, x)
    assert np.all(lv >= 0)
    quad = 2 * x @ laplacian(g) @ x
    assert tv == pytest.approx(naive_tv(g.weights.tolist(), x.tolist()), rel=1e-12, abs=1e-12)
    assert abs(lv.sum() - tv) <= 1e-10 * max(1.0, abs(tv))
    assert abs(tv - quad) <= 1e-10 * max(1.0, abs(tv))


@given(graphs, st.floats(0, 1), st.integers(0, 100_000))
def test_tlv_affine_in_alpha(g, alpha, seed):
    X = np.random.default_rng(seed).normal(size=(g.n, 4))
    blend = alpha * tlv(g, X, 1.0).values + (1 - alpha) * tlv(g, X, 0.0).values
    np.testing.assert_allclose(tlv(g, X, alpha).values, blend, rtol=0, atol=1e-12)
    assert np.array_equal(tlv(g, X, 0.0).values, local_variation(g, X))
    d = np.diff(X, axis=1)
    assert np.array_equal(tlv(g, X, 1.0).values[:, 1:], np.sign(d) * d**2)
    assert not tlv(g, X, 1.0).values[:, 0].any()


@given(graphs, st.floats(0, 1), st.integers(2, 8), st.integers(0, 100_000))
def test_normalized_range(g, alpha, T, seed):
    X = np.random.default_rng(seed).random((g.n, T))
    v = tlv_normalized(g, X, alpha).values
    assert v.min() >= -1.0 and v.max() <= 2.0
    assert v.min() >= -alpha - 1e-15 and v.max() <= 1.0 + 1e-15


@given(graphs, st.integers(0, 100_000))
def test_permutation_equivariance(g, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(g.n, 3))
    perm = rng.permutation(g.n)
    gp = Graph(g.weights[np.ix_(perm, perm)])
    np.testing.assert_allclose(local_variation(gp, X[perm]), local_variation(g, X)[perm], atol=1e-12)
    np.testing.assert_allclose(tlv_normalized(gp, X[perm], 0.6).values,
                               tlv_normalized(g, X, 0.6).values[perm], atol=1e-12)


@given(graphs, st.floats(0.1, 10), st.integers(0, 100_000))
def test_scaling(g, c, seed):
    X = np.random.default_rng(seed).normal(size=(g.n, 3))
    np.testing.assert_allclose(local_variation(g, c * X), c**2 * local_variation(g, X), rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(tlv(g, c * X, 0.4).values, c**2 * tlv(g, X, 0.4).values, rtol=1e-10, atol=1e-12)
    a = tlv_normalized(g, X, 0.4).values[:, -1]
    b = tlv_normalized(g, c * X, 0.4).values[:, -1]
    assert set(np.flatnonzero(np.isclose(a, a.max(), rtol=1e-9, atol=1e-12))) == \
        set(np.flatnonzero(np.isclose(b, b.max(), rtol=1e-9, atol=1e-12)))


def test_isolated_nodes_have_zero_local_variation():
    g = random_graph(np.random.default_rng(0), 10, 0.6)
    g = isolate_nodes(g, [2, 7])
    lv = local_variation(g, np.random.default_rng(1).random(10))
    assert lv[2] == 0.0 and lv[7] == 0.0
