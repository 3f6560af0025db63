import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gpgc.exceptions import ShapeError
from gpgc.graph import Graph, normalize_adjacency, propagate, sandwich
from oracles import dense_a_hat, random_graph, random_psd


def test_single_node_is_identity():
    a = normalize_adjacency(Graph(1)).toarray()
    np.testing.assert_array_equal(a, [[1.0]])


def test_two_nodes_uniform():
    a = normalize_adjacency(Graph(2, [(0, 1)])).toarray()
    np.testing.assert_array_equal(a, [[0.5, 0.5], [0.5, 0.5]])


def test_path_entries(path3_hat):
    a = path3_hat.toarray()
    r6 = 1 / np.sqrt(6)
    expected = [[1 / 2, r6, 0], [r6, 1 / 3, r6], [0, r6, 1 / 2]]
    np.testing.assert_allclose(a, expected, rtol=0, atol=1e-15)
    assert a[0, 2] == 0
    assert path3_hat.max_degree == 3


def test_graph_canonicalizes_and_dedups():
    g = Graph(4, [(1, 0), (0, 1), (2, 3), (3, 2)])
    np.testing.assert_array_equal(g.edges, [[0, 1], [2, 3]])
    assert g.n_edges == 2


@pytest.mark.parametrize(
    "edges, msg",
    [([(1, 1)], "self-loop"), ([(0, 5)], "out of range"), ([(-1, 0)], "out of range")],
)
def test_graph_rejects_bad_edges(edges, msg):
    with pytest.raises(ValueError, match=msg):
        Graph(3, edges)


def test_stored_matrix_is_exactly_symmetric(rng):
    for _ in range(10):
        g = random_graph(rng, 40, 0.15)
        a = normalize_adjacency(g).matrix
        assert (a != a.T).nnz == 0
        assert np.all(a.diagonal() > 0)
        assert a.has_sorted_indices


def test_diagonal_is_inverse_degree(rng):
    g = random_graph(rng, 30, 0.2)
    a = normalize_adjacency(g)
    np.testing.assert_array_equal(a.matrix.diagonal(), 1.0 / (g.degrees() + 1))


def test_matches_definition(rng):
    for _ in range(5):
        g = random_graph(rng, 25, 0.2)
        np.testing.assert_allclose(normalize_adjacency(g).toarray(), dense_a_hat(g), atol=1e-15)


def test_row_counts_bounded(rng):
    g = random_graph(rng, 50, 0.1)
    a = normalize_adjacency(g)
    counts = np.diff(a.matrix.indptr)
    assert counts.min() >= 1 and counts.max() == a.max_degree


def test_propagate_identity_graph(rng):
    x = rng.standard_normal((5, 3))
    np.testing.assert_array_equal(propagate(normalize_adjacency(Graph(5)), x), x)


def test_propagate_two_nodes():
    a = normalize_adjacency(Graph(2, [(0, 1)]))
    np.testing.assert_allclose(propagate(a, np.eye(2)), [[0.5, 0.5], [0.5, 0.5]])


def test_propagate_path(path3_hat):
    out = propagate(path3_hat, np.array([[1.0], [0.0], [0.0]]))
    np.testing.assert_allclose(out, [[0.5], [1 / np.sqrt(6)], [0.0]], atol=1e-15)


def test_propagate_shape_mismatch(path3_hat):
    with pytest.raises(ShapeError):
        propagate(path3_hat, np.ones((4, 2)))


def test_sandwich_identity_graph(rng):
    k = random_psd(rng, 6)
    np.testing.assert_allclose(sandwich(normalize_adjacency(Graph(6)), k), k, atol=1e-12)


def test_sandwich_two_nodes():
    out = sandwich(normalize_adjacency(Graph(2, [(0, 1)])), np.eye(2))
    np.testing.assert_allclose(out, np.full((2, 2), 0.5))


def test_sandwich_path(path3_hat):
    out = sandwich(path3_hat, np.eye(3))
    assert out[0, 0] == pytest.approx(5 / 12, abs=1e-15)
    a = dense_a_hat(Graph(3, [(0, 1), (1, 2)]))
    np.testing.assert_allclose(out, a @ a.T, atol=1e-15)


def test_sandwich_shape_mismatch(path3_hat):
    with pytest.raises(ShapeError):
        sandwich(path3_hat, np.eye(4))


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 64), p=st.floats(0.0, 0.5), seed=st.integers(0, 2**32 - 1))
def test_sparse_ops_match_dense(n, p, seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n, p)
    a_hat = normalize_adjacency(g)
    a = dense_a_hat(g)
    k = random_psd(rng, n)
    x = rng.standard_normal((n, 3))
    m = sandwich(a_hat, k)
    assert np.abs(m - a @ k @ a.T).max() <= 1e-10 * max(1.0, np.abs(k).max())
    assert np.abs(propagate(a_hat, x) - a @ x).max() <= 1e-12 * max(1.0, np.abs(x).max())
    np.testing.assert_array_equal(m, m.T)


@settings(max_examples=20, deadline=None)
@given(n=st.integers(2, 40), seed=st.integers(0, 2**32 - 1))
def test_sandwich_preserves_psd(n, seed):
    rng = np.random.default_rng(seed)
    a_hat = normalize_adjacency(random_graph(rng, n, 0.2))
    k = random_psd(rng, n, rank=max(1, n // 3))
    k /= np.abs(k).max()
    assert np.linalg.eigvalsh(sandwich(a_hat, k)).min() >= -1e-8


def test_sandwich_deterministic(rng):
    a_hat = normalize_adjacency(random_graph(rng, 50, 0.1))
    k = random_psd(rng, 50)
    assert np.array_equal(sandwich(a_hat, k), sandwich(a_hat, k))


def test_from_adjacency_round_trip(rng):
    g = random_graph(rng, 12, 0.3)
    a = g.adjacency().toarray()
    np.testing.assert_array_equal(Graph.from_adjacency(a).edges, g.edges)


def test_graph_equality_and_hash():
    a = Graph(3, [(1, 0), (1, 2)])
    b = Graph(3, [(0, 1), (2, 1), (0, 1)])
    assert a == b and hash(a) == hash(b)
    assert a != Graph(4, [(0, 1), (1, 2)])
