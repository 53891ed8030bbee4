"""Single-linkage agglomeration via the Euclidean minimum spanning tree.

Merging the two closest clusters until the closest pair is farther than eps
is the same as cutting every MST edge longer than eps, which is what we do.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .cluster_cc import Partition, components_from_edges
from .errors import GraphError


@dataclass(frozen=True)
class Dendrogram:
    """Merge history. Singletons are clusters 0..n-1; merge ``s`` creates cluster ``n + s``."""

    n: int
    merges: tuple  # (cluster_a, cluster_b, distance, point_i, point_j)

    def distances(self):
        return np.array([m[2] for m in self.merges])

    def cut(self, eps):
        """Partition obtained by applying every merge at distance <= eps."""
        I = [m[3] for m in self.merges if m[2] <= eps]
        J = [m[4] for m in self.merges if m[2] <= eps]
        return components_from_edges(self.n, np.array(I, np.int64), np.array(J, np.int64))

    def to_csv(self):
        rows = ["step,cluster_a,cluster_b,distance"]
        rows += [f"{s},{a},{b},{d:.17g}" for s, (a, b, d, _, _) in enumerate(self.merges)]
        return "\n".join(rows) + "\n"

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_csv())


def mst_edges(points, backend=None):
    """MST edges ``(i, j, dist)`` with ``i < j``, sorted by (dist, i, j)."""
    X = np.ascontiguousarray(points, dtype=float)
    if X.ndim != 2 or len(X) < 1:
        raise GraphError("points must be a nonempty N x D array")
    I, J, d = _kernels.get_backend(backend).prim_mst(X)
    lo, hi = np.minimum(I, J), np.maximum(I, J)
    o = np.lexsort((hi, lo, d))
    return lo[o], hi[o], d[o]


def _dendrogram(n, I, J, d):
    parent = list(range(n))
    cluster_id = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    merges = []
    for s, (i, j, w) in enumerate(zip(I.tolist(), J.tolist(), d.tolist())):
        a, b = find(i), find(j)
        ca, cb = sorted((cluster_id[a], cluster_id[b]))
        parent[b] = a
        cluster_id[a] = n + s
        merges.append((ca, cb, w, i, j))
    return Dendrogram(n, tuple(merges))


def full_dendrogram(points, backend=None):
    """All n - 1 merges."""
    I, J, d = mst_edges(points, backend)
    return _dendrogram(len(points), I, J, d)


def single_linkage(points, eps, outliers=False, backend=None):
    """Single linkage stopped once the closest pair of clusters is farther than ``eps``.

    Returns ``(partition, dendrogram)`` where the dendrogram holds the merges
    performed (distance <= eps). With ``outliers=True`` singletons get label 0.
    """
    if not eps > 0:
        raise GraphError("eps must be positive")
    I, J, d = mst_edges(points, backend)
    keep = d <= eps
    part = components_from_edges(len(points), I[keep], J[keep], backend)
    if outliers:
        part = singletons_as_outliers(part)
    return part, _dendrogram(len(points), I[keep], J[keep], d[keep])


def singletons_as_outliers(part):
    sizes = np.bincount(part.labels)
    lab = part.labels.copy()
    lab[sizes[lab] == 1] = 0
    return Partition(lab)
