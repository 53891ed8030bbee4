"""Clustering by connected components of the neighbourhood graph."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import GraphError
from .nngraph import build_affinity, build_affinity_local


def canonical_labels(labels):
    """Relabel nonzero labels 1..K in order of each cluster's smallest member; 0 stays 0."""
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros_like(labels)
    nz = labels != 0
    if nz.any():
        vals, first = np.unique(labels[nz], return_index=True)
        rank = np.empty(len(vals), dtype=np.int64)
        rank[np.argsort(first, kind="stable")] = np.arange(1, len(vals) + 1)
        out[nz] = rank[np.searchsorted(vals, labels[nz])]
    return out


@dataclass(frozen=True, eq=False)
class Partition:
    """Cluster labels; 0 is reserved for outliers, others are 1..n_clusters."""

    labels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "labels", canonical_labels(self.labels))

    @property
    def n_clusters(self):
        return int(self.labels.max(initial=0))

    @property
    def n_outliers(self):
        return int((self.labels == 0).sum())

    def __len__(self):
        return len(self.labels)

    def __eq__(self, other):
        # canonical labels make set-partition equality an array comparison
        return isinstance(other, Partition) and np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash(self.labels.tobytes())

    def groups(self):
        """Member indices of each cluster 1..n_clusters."""
        order = np.argsort(self.labels, kind="stable")
        bounds = np.searchsorted(self.labels[order], np.arange(1, self.n_clusters + 2))
        return [order[a:b] for a, b in zip(bounds[:-1], bounds[1:])]

    def refines(self, other):
        """True if every cluster of ``self`` lies inside one cluster of ``other``."""
        a, b = self.labels, other.labels
        pairs = np.unique(np.column_stack([a, b]), axis=0)
        return len(np.unique(pairs[:, 0])) == len(pairs)

    def to_csv(self):
        return "label\n" + "".join(f"{x}\n" for x in self.labels.tolist())

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_csv())


def components_from_edges(n, I, J, backend=None):
    """Canonical component labels of the graph on ``n`` nodes with edges (I, J)."""
    k = _kernels.get_backend(backend)
    roots = k.union_find_roots(int(n), np.ascontiguousarray(I, dtype=np.int64),
                               np.ascontiguousarray(J, dtype=np.int64))
    return Partition(np.asarray(roots) + 1)


def extract_components(W, backend=None):
    """Connected components over stored (positive) entries of ``W``."""
    I, J, _ = W.edges()
    return components_from_edges(W.n, I, J, backend)


def cluster_cc(points, kernel, eps=None, scales=None, backend=None, threads=None):
    """Build the affinity (fixed ``eps`` or local ``scales``) and return its components.

    Requires a compactly supported kernel.
    """
    if not kernel.compact:
        raise GraphError("connected-component clustering needs a compactly supported kernel")
    if (eps is None) == (scales is None):
        raise GraphError("give exactly one of eps or scales")
    if eps is not None:
        W = build_affinity(points, kernel, eps, backend=backend, threads=threads)
    else:
        W = build_affinity_local(points, kernel, scales, backend=backend, threads=threads)
    return extract_components(W, backend)
