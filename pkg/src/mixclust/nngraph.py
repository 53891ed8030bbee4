"""Affinity matrices from pairwise distances, fixed-scale or locally scaled.

Pairs are found with a uniform grid (cell side = query radius) in low
dimension and by exhaustive search otherwise; both paths compute distances
the same way, so they return identical edge sets.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from . import _kernels
from ._parallel import chunk_bounds, num_threads, ordered_map
from .errors import GraphError

DEFAULT_CUTOFF = 1e-12
GRID_MAX_DIM = 6
GRID_MIN_POINTS = 512
_CELL_MARGIN = 1e-6
_PAIR_BLOCK_ROWS = 2048


@dataclass(frozen=True)
class Kernel:
    """Nonincreasing profile phi on [0, inf) with phi(0) = 1.

    kind is ``"indicator"`` (support ``[0, omega]``), ``"gaussian"``
    (``exp(-s^2/2)``) or ``"table"`` (linear interpolation of monotone knots,
    zero past the last knot).
    """

    kind: str = "indicator"
    omega: float = 1.0
    knots: tuple = ()

    def __post_init__(self):
        if self.kind not in ("indicator", "gaussian", "table"):
            raise GraphError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "indicator" and not self.omega > 0:
            raise GraphError("indicator support omega must be positive")
        if self.kind == "table":
            k = np.asarray(self.knots, dtype=float)
            if k.ndim != 2 or k.shape[1] != 2 or len(k) < 2:
                raise GraphError("table kernel needs at least two (s, phi) knots")
            s, v = k[:, 0], k[:, 1]
            if s[0] != 0 or v[0] != 1:
                raise GraphError("table kernel must start at (0, 1)")
            if np.any(np.diff(s) <= 0) or np.any(np.diff(v) > 0) or np.any(v < 0):
                raise GraphError("table kernel knots must be increasing in s, nonincreasing in phi")
            object.__setattr__(self, "knots", tuple(map(tuple, k.tolist())))

    @classmethod
    def indicator(cls, omega=1.0):
        return cls("indicator", omega)

    @classmethod
    def gaussian(cls):
        return cls("gaussian")

    @classmethod
    def parse(cls, text):
        """``"indicator"``, ``"indicator:2"``, ``"gaussian"`` or ``"table:0,1;0.5,0.7;1,0"``."""
        name, _, arg = text.partition(":")
        if name == "indicator":
            return cls.indicator(float(arg) if arg else 1.0)
        if name == "gaussian":
            return cls.gaussian()
        if name == "table":
            return cls("table", knots=tuple(tuple(map(float, p.split(","))) for p in arg.split(";")))
        raise GraphError(f"cannot parse kernel {text!r}")

    @property
    def compact(self):
        return self.kind != "gaussian"

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "indicator":
            return (s <= self.omega).astype(float)
        if self.kind == "gaussian":
            return np.exp(-0.5 * s * s)
        k = np.asarray(self.knots)
        return np.where(s <= k[-1, 0], np.interp(s, k[:, 0], k[:, 1]), 0.0)

    def support_radius(self, cutoff=DEFAULT_CUTOFF):
        """Largest s with phi(s) >= cutoff (in units of the scale)."""
        if self.kind == "indicator":
            return self.omega
        if self.kind == "gaussian":
            return math.sqrt(-2.0 * math.log(cutoff))
        return self.knots[-1][0]

    def describe(self):
        if self.kind == "indicator":
            return f"indicator:{self.omega:.12g}"
        if self.kind == "gaussian":
            return "gaussian"
        return "table:" + ";".join(f"{s:.12g},{v:.12g}" for s, v in self.knots)


@dataclass
class AffinityMatrix:
    """Sparse symmetric affinity with zero diagonal and entries in (0, 1]."""

    matrix: sparse.csr_matrix
    cutoff: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def nnz(self):
        return self.matrix.nnz

    @classmethod
    def from_edges(cls, n, I, J, w, cutoff=0.0, **meta):
        I, J, w = np.asarray(I, np.int64), np.asarray(J, np.int64), np.asarray(w, float)
        M = sparse.csr_matrix((np.concatenate([w, w]), (np.concatenate([I, J]), np.concatenate([J, I]))),
                              shape=(n, n))
        M.sum_duplicates()
        M.sort_indices()
        return cls(M, cutoff, dict(meta))

    @classmethod
    def from_dense(cls, A, cutoff=0.0):
        A = np.asarray(A, dtype=float)
        if A.shape[0] != A.shape[1] or not np.array_equal(A, A.T):
            raise GraphError("affinity must be square and symmetric")
        if np.any(np.diag(A) != 0):
            raise GraphError("affinity diagonal must be zero")
        I, J = np.nonzero(np.triu(A, 1))
        return cls.from_edges(A.shape[0], I, J, A[I, J], cutoff)

    def edges(self):
        """Upper-triangle entries ``(i, j, w)`` with ``i < j``, sorted."""
        C = sparse.triu(self.matrix, k=1).tocoo()
        o = np.lexsort((C.col, C.row))
        return C.row[o].astype(np.int64), C.col[o].astype(np.int64), C.data[o]

    def toarray(self):
        return self.matrix.toarray()

    def subgraph(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        M = self.matrix[idx][:, idx].tocsr()
        M.sort_indices()
        return AffinityMatrix(M, self.cutoff, dict(self.meta))

    def scaled(self, c):
        return AffinityMatrix(self.matrix * c, self.cutoff, dict(self.meta))

    def to_triples(self):
        """Coordinate-list text, ``i j w`` per line, 0-based, ``i < j`` only."""
        I, J, w = self.edges()
        return "".join(f"{i} {j} {x:.17g}\n" for i, j, x in zip(I.tolist(), J.tolist(), w.tolist()))

    def write_triples(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_triples())

    @classmethod
    def read_triples(cls, path, n):
        data = np.loadtxt(path, ndmin=2)
        if data.size == 0:
            return cls.from_edges(n, [], [], [])
        return cls.from_edges(n, data[:, 0].astype(np.int64), data[:, 1].astype(np.int64), data[:, 2])


class NeighborIndex:
    """Immutable radius-search index over a point cloud.

    Uses a uniform grid whose cell side is (slightly above) the query radius
    when ``D <= 6`` and ``N >= 512``; exhaustive search otherwise.
    """

    def __init__(self, points, radius, backend=None, force=None):
        X = np.ascontiguousarray(points, dtype=float)
        if X.ndim != 2:
            raise GraphError("points must be an N x D array")
        if not radius > 0:
            raise GraphError("radius must be positive")
        self.points = X
        self.radius = float(radius)
        self._k = _kernels.get_backend(backend)
        N, D = X.shape
        use_grid = D <= GRID_MAX_DIM and N >= GRID_MIN_POINTS
        if force is not None:
            use_grid = force == "grid"
        self.mode = "grid" if use_grid else "exhaustive"
        if use_grid:
            self._build_grid()

    def _build_grid(self):
        X = self.points
        N, D = X.shape
        lo = X.min(axis=0)
        span = X.max(axis=0) - lo
        side = self.radius * (1 + _CELL_MARGIN)
        cap = min(1 << 20, int(2 ** (62 / D)))
        side = max(side, float(span.max()) / (cap - 1)) if cap > 1 else side
        dims = (np.floor(span / side).astype(np.int64) + 1)
        cells = np.minimum(np.floor((X - lo) / side).astype(np.int64), dims - 1)
        strides = np.ones(D, dtype=np.int64)
        for k in range(D - 2, -1, -1):
            strides[k] = strides[k + 1] * dims[k + 1]
        keys = cells @ strides
        order = np.argsort(keys, kind="stable").astype(np.int64)
        ukeys, starts, counts = np.unique(keys[order], return_index=True, return_counts=True)
        self.side = side
        self._grid = dict(
            cells=np.ascontiguousarray(cells), dims=dims, strides=strides, order=order,
            ukeys=ukeys.astype(np.int64), starts=starts.astype(np.int64),
            counts=counts.astype(np.int64),
            offsets=np.array(list(itertools.product((-1, 0, 1), repeat=D)), dtype=np.int64))

    def _pairs_rows(self, bounds):
        a, b = bounds
        if self.mode == "grid":
            g = self._grid
            return self._k.radius_pairs_grid(self.points, self.radius, g["cells"], g["dims"], g["strides"],
                                             g["order"], g["ukeys"], g["starts"], g["counts"],
                                             g["offsets"], a, b)
        return self._k.radius_pairs_brute(self.points, self.radius, a, b)

    def pairs(self, threads=None):
        """All ``(i, j, dist)`` with ``i < j`` and ``dist <= radius``, sorted by ``(i, j)``."""
        N = len(self.points)
        n_chunks = max(1, math.ceil(N / _PAIR_BLOCK_ROWS))
        parts = ordered_map(self._pairs_rows, chunk_bounds(N, n_chunks), threads)
        I = np.concatenate([p[0] for p in parts])
        J = np.concatenate([p[1] for p in parts])
        d = np.concatenate([p[2] for p in parts])
        o = np.lexsort((J, I))
        return I[o], J[o], d[o]

    def range_query(self, i, r=None):
        """Indices ``j != i`` with ``||x_i - x_j|| <= r`` (``r <= radius``), ascending."""
        r = self.radius if r is None else float(r)
        if r > self.radius:
            raise GraphError("query radius exceeds the index radius")
        X = self.points
        if self.mode == "grid":
            g = self._grid
            cand = []
            for off in g["offsets"]:
                c = g["cells"][i] + off
                if np.any(c < 0) or np.any(c >= g["dims"]):
                    continue
                pos = np.searchsorted(g["ukeys"], c @ g["strides"])
                if pos < len(g["ukeys"]) and g["ukeys"][pos] == c @ g["strides"]:
                    cand.append(g["order"][g["starts"][pos]:g["starts"][pos] + g["counts"][pos]])
            cand = np.sort(np.concatenate(cand)) if cand else np.empty(0, np.int64)
        else:
            cand = np.arange(len(X))
        acc = np.zeros(len(cand))
        for k in range(X.shape[1]):
            t = X[cand, k] - X[i, k]
            acc += t * t
        keep = (np.sqrt(acc) <= r) & (cand != i)
        return cand[keep]


def _check_points(points):
    X = np.ascontiguousarray(points, dtype=float)
    if X.ndim != 2:
        raise GraphError("points must be an N x D array")
    if len(X) < 2:
        raise GraphError("need at least two points")
    return X


def build_affinity(points, kernel, eps, cutoff=DEFAULT_CUTOFF, backend=None, threads=None):
    """W_ij = phi(||x_i - x_j|| / eps), zero diagonal, entries below ``cutoff`` dropped.

    Compact kernels keep every positive entry (the recorded cutoff is 0);
    the indicator includes a pair iff ``dist <= omega * eps``.
    """
    X = _check_points(points)
    if not eps > 0:
        raise GraphError("eps must be positive")
    radius = kernel.support_radius(cutoff) * eps
    I, J, d = NeighborIndex(X, radius, backend).pairs(threads)
    if kernel.kind == "indicator":
        w = np.ones(len(d))
        used_cutoff = 0.0
    else:
        w = kernel(d / eps)
        used_cutoff = 0.0 if kernel.compact else cutoff
        keep = (w > 0) & (w >= used_cutoff)
        I, J, w = I[keep], J[keep], w[keep]
    return AffinityMatrix.from_edges(len(X), I, J, w, used_cutoff, kernel=kernel.describe(), eps=float(eps))


@dataclass(frozen=True)
class Neighbors:
    indices: np.ndarray
    distances: np.ndarray


def knn(points, ell, backend=None, threads=None):
    """The ``ell`` nearest other points of every point, sorted by (distance, index)."""
    X = _check_points(points)
    N = len(X)
    ell = int(ell)
    if not 1 <= ell <= N - 1:
        raise GraphError(f"ell must lie in [1, {N - 1}], got {ell}")
    k = _kernels.get_backend(backend)
    bounds = chunk_bounds(N, max(1, math.ceil(N / 1024)))
    parts = ordered_map(lambda ab: k.knn_brute(X, ell, ab[0], ab[1]), bounds, threads)
    return Neighbors(np.vstack([p[0] for p in parts]), np.vstack([p[1] for p in parts]))


@dataclass(frozen=True)
class LocalScales:
    scales: np.ndarray
    ell: int


def local_scales(points, ell, backend=None, threads=None):
    """eps_i = distance from x_i to its ell-th nearest neighbour."""
    nb = knn(points, ell, backend, threads)
    scales = nb.distances[:, -1].copy()
    zero = np.flatnonzero(scales <= 0)
    if zero.size:
        raise GraphError(f"zero local scale at points {zero[:10].tolist()} (duplicate points)")
    return LocalScales(scales, int(ell))


def build_affinity_local(points, kernel, scales, cutoff=DEFAULT_CUTOFF, backend=None, threads=None):
    """W_ij = phi(||x_i - x_j|| / sqrt(eps_i eps_j)) with per-point scales."""
    X = _check_points(points)
    eps = np.asarray(scales.scales if isinstance(scales, LocalScales) else scales, dtype=float)
    if eps.shape != (len(X),):
        raise GraphError("scales do not match the point cloud")
    if np.any(eps <= 0):
        raise GraphError("local scales must be positive")
    radius = kernel.support_radius(cutoff) * float(eps.max())
    I, J, d = NeighborIndex(X, radius, backend).pairs(threads)
    g = np.sqrt(eps[I] * eps[J])
    if kernel.kind == "indicator":
        keep = d <= kernel.omega * g
        w = np.ones(int(keep.sum()))
        used_cutoff = 0.0
    else:
        w = kernel(d / g)
        used_cutoff = 0.0 if kernel.compact else cutoff
        keep = (w > 0) & (w >= used_cutoff)
        w = w[keep]
    ell = scales.ell if isinstance(scales, LocalScales) else None
    return AffinityMatrix.from_edges(len(X), I[keep], J[keep], w, used_cutoff,
                                     kernel=kernel.describe(), ell=ell)


def knn_graph(points, ell, mode="mutual", backend=None, threads=None):
    """Unit-weight ell-NN graph; ``mode`` is ``"mutual"`` (both directions) or ``"union"``."""
    if mode not in ("mutual", "union"):
        raise GraphError("mode must be 'mutual' or 'union'")
    X = _check_points(points)
    nb = knn(X, ell, backend, threads)
    N = len(X)
    rows = np.repeat(np.arange(N), nb.indices.shape[1])
    A = sparse.csr_matrix((np.ones(rows.size), (rows, nb.indices.ravel())), shape=(N, N))
    S = A.multiply(A.T) if mode == "mutual" else ((A + A.T) > 0).astype(float)
    C = sparse.triu(S, k=1).tocoo()
    return AffinityMatrix.from_edges(N, C.row, C.col, np.ones(C.nnz), 0.0, ell=int(ell), graph=mode)


def degrees(W):
    """D_i = sum_j W_ij."""
    return np.asarray(W.matrix.sum(axis=1)).ravel()
