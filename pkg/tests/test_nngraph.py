import math

import numpy as np
import pytest
from scipy.spatial.distance import cdist

from mixclust.errors import GraphError
from mixclust.nngraph import (AffinityMatrix, Kernel, NeighborIndex, build_affinity,
                              build_affinity_local, degrees, knn, knn_graph, local_scales)


def test_indicator_inside_and_outside():
    X = np.array([[0.0, 0.0], [0.05, 0.0], [0.2, 0.0]])
    W = build_affinity(X, Kernel.indicator(), 0.1).toarray()
    assert W[0, 1] == 1 and W[0, 2] == 0 and W[1, 2] == 0


def test_gaussian_value():
    X = np.array([[0.0], [0.1]])
    W = build_affinity(X, Kernel.gaussian(), 0.1).toarray()
    assert W[0, 1] == pytest.approx(math.exp(-0.5), rel=1e-12)


def test_table_kernel_interpolates():
    k = Kernel.parse("table:0,1;0.5,0.5;1,0")
    assert k(np.array([0.25, 0.75, 2.0])).tolist() == pytest.approx([0.75, 0.25, 0.0])


@pytest.mark.parametrize("bad", ["table:0,1;0.5,1.5;1,0", "table:0.1,1;1,0", "cosine"])
def test_bad_kernels(bad):
    with pytest.raises(GraphError):
        Kernel.parse(bad)


def test_knn_collinear(backend):
    X = np.array([[0.0], [1.0], [3.0]])
    nb = knn(X, 1, backend=backend)
    assert nb.distances[:, 0].tolist() == [1, 1, 2]
    assert local_scales(X, 1, backend=backend).scales.tolist() == [1, 1, 2]


def test_knn_all_others(rng):
    X = rng.random((20, 2))
    nb = knn(X, 19)
    for i in range(20):
        assert sorted(nb.indices[i]) == [j for j in range(20) if j != i]


def test_knn_matches_bruteforce(rng, backend):
    X = rng.random((200, 3))
    nb = knn(X, 5, backend=backend)
    D = cdist(X, X)
    np.fill_diagonal(D, np.inf)
    ref = np.argsort(D, axis=1, kind="stable")[:, :5]
    assert np.array_equal(nb.indices, ref)
    assert np.allclose(nb.distances, np.take_along_axis(D, ref, 1), rtol=0, atol=1e-15)


def test_duplicate_points_zero_scale():
    with pytest.raises(GraphError):
        local_scales(np.array([[0.1, 0.1], [0.1, 0.1], [0.5, 0.5]]), 1)


def test_local_affinity_examples():
    X = np.array([[0.0], [1.0]])
    assert build_affinity_local(X, Kernel.indicator(), [1.0, 1.0]).toarray()[0, 1] == 1
    assert build_affinity_local(X, Kernel.indicator(), [0.25, 0.25]).nnz == 0
    w = build_affinity_local(X, Kernel.gaussian(), [4.0, 1.0]).toarray()[0, 1]
    assert w == pytest.approx(math.exp(-0.125), rel=1e-12)


def test_degrees_examples():
    assert degrees(AffinityMatrix.from_dense(np.array([[0, 1], [1, 0.]]))).tolist() == [1, 1]
    assert degrees(AffinityMatrix.from_dense(np.zeros((3, 3)))).tolist() == [0, 0, 0]
    T = np.ones((3, 3)) - np.eye(3)
    assert degrees(AffinityMatrix.from_dense(T)).tolist() == [2, 2, 2]


@pytest.mark.parametrize("D,n", [(1, 800), (2, 1000), (3, 600), (8, 300)])
def test_range_search_matches_cdist(D, n, rng, backend):
    X = rng.random((n, D))
    r = 0.08 if D < 8 else 0.6
    I, J, d = NeighborIndex(X, r, backend).pairs()
    C = cdist(X, X)
    ri, rj = np.nonzero(np.triu(C <= r, 1))
    assert set(zip(I.tolist(), J.tolist())) == set(zip(ri.tolist(), rj.tolist()))
    assert np.allclose(d, C[I, J], rtol=0, atol=1e-14)


def test_grid_and_brute_agree(rng, backend):
    X = rng.random((1500, 2))
    a = NeighborIndex(X, 0.03, backend, force="grid").pairs()
    b = NeighborIndex(X, 0.03, backend, force="brute").pairs()
    for u, v in zip(a, b):
        assert np.array_equal(u, v)


def test_backends_bit_identical(rng):
    X = rng.random((2000, 2))
    a = build_affinity(X, Kernel.gaussian(), 0.01, backend="numpy")
    b = build_affinity(X, Kernel.gaussian(), 0.01, backend="cython")
    assert all(np.array_equal(u, v) for u, v in zip(a.edges(), b.edges()))


def test_threads_do_not_change_result(rng):
    X = rng.random((3000, 2))
    a = build_affinity(X, Kernel.indicator(), 0.02, threads=1)
    b = build_affinity(X, Kernel.indicator(), 0.02, threads=4)
    assert all(np.array_equal(u, v) for u, v in zip(a.edges(), b.edges()))


def test_triples_roundtrip(tmp_path, rng):
    W = build_affinity(rng.random((100, 2)), Kernel.gaussian(), 0.1)
    p = tmp_path / "w.csv"
    W.write_triples(p)
    V = AffinityMatrix.read_triples(p, W.n)
    assert all(np.array_equal(u, v) for u, v in zip(W.edges(), V.edges()))


def test_knn_graph_modes(rng):
    X = rng.random((60, 2))
    m = knn_graph(X, 3, "mutual").toarray()
    u = knn_graph(X, 3, "union").toarray()
    assert np.all(m <= u) and np.array_equal(m, m.T) and np.array_equal(u, u.T)
    assert np.all(u.sum(axis=1) >= 3)


def test_scaled_affinity_invariant():
    W = AffinityMatrix.from_dense(np.array([[0, 2, 0], [2, 0, 1], [0, 1, 0.]]))
    assert np.array_equal(W.scaled(3.0).toarray(), 3 * W.toarray())
