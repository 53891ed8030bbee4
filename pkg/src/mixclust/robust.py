"""Outlier handling: degree-threshold filtering ahead of the clusterers."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cluster_cc import Partition, extract_components
from .cluster_spectral import spectral_cluster_affinity
from .errors import GraphError, SpectralError
from .evaluation import epsilon_threshold
from .geometry import gamma_volume
from .nngraph import build_affinity, build_affinity_local, degrees

DEFAULT_MARGIN = 4.0


def default_omega(n):
    """sqrt(log N): grows without bound but slower than log N."""
    return math.sqrt(math.log(n))


@dataclass(frozen=True)
class RobustParams:
    """Degree threshold omega_N * N * eps^D + log N (natural log)."""

    omega_n: float
    eps: float
    n: int
    ambient_dim: int
    threshold_override: float | None = None

    def __post_init__(self):
        if not self.omega_n > 0:
            raise GraphError("omega_n must be positive")

    @classmethod
    def for_data(cls, n, eps, ambient_dim, omega_n=None):
        return cls(default_omega(n) if omega_n is None else omega_n, eps, n, ambient_dim)

    @classmethod
    def disabled(cls, n, eps, ambient_dim):
        """Threshold 0: nothing is discarded."""
        return cls(1.0, eps, n, ambient_dim, threshold_override=0.0)

    @property
    def threshold(self):
        if self.threshold_override is not None:
            return self.threshold_override
        return self.omega_n * self.n * self.eps ** self.ambient_dim + math.log(self.n)


@dataclass
class FilterResult:
    kept: np.ndarray
    discarded: np.ndarray
    degrees: np.ndarray
    threshold: float

    def to_text(self):
        lines = [f"threshold: {self.threshold:.12g}",
                 f"kept: {len(self.kept)}",
                 f"discarded: {len(self.discarded)}",
                 "index,degree,status"]
        status = np.full(len(self.degrees), "kept", dtype=object)
        status[self.discarded] = "discarded"
        lines += [f"{i},{d:.12g},{s}" for i, (d, s) in enumerate(zip(self.degrees.tolist(), status))]
        return "\n".join(lines) + "\n"


def degree_filter(W, params):
    """Discard exactly the points with degree <= threshold; a zero threshold disables it."""
    deg = degrees(W)
    thr = params.threshold
    drop = deg <= thr if thr > 0 else np.zeros(len(deg), dtype=bool)
    return FilterResult(np.flatnonzero(~drop), np.flatnonzero(drop), deg, thr)


def _affinity(points, kernel, eps, scales):
    if (eps is None) == (scales is None):
        raise GraphError("give exactly one of eps or scales")
    if eps is not None:
        return build_affinity(points, kernel, eps)
    return build_affinity_local(points, kernel, scales)


def _lift(n, kept, part):
    lab = np.zeros(n, dtype=np.int64)
    lab[kept] = part.labels
    return Partition(lab)


def cluster_cc_robust(points, kernel, params, eps=None, scales=None, return_filter=False):
    """Affinity, degree filter, components of the kept subgraph; discarded points get label 0."""
    if not kernel.compact:
        raise GraphError("connected-component clustering needs a compactly supported kernel")
    W = _affinity(points, kernel, eps, scales)
    filt = degree_filter(W, params)
    part = _lift(W.n, filt.kept, extract_components(W.subgraph(filt.kept)))
    return (part, filt) if return_filter else part


def spectral_cluster_robust(points, kernel, K, params, eps=None, scales=None, n_iter=1,
                            return_filter=False):
    """Filter first, run spectral clustering on the survivors, discarded points get label 0."""
    W = _affinity(points, kernel, eps, scales)
    filt = degree_filter(W, params)
    if len(filt.kept) == 0:
        raise SpectralError("every point was discarded by the degree filter")
    part, _ = spectral_cluster_affinity(W.subgraph(filt.kept), K, n_iter)
    part = _lift(W.n, filt.kept, part)
    return (part, filt) if return_filter else part


@dataclass
class DegreeConditionReport:
    left: np.ndarray
    right: float
    margin: float

    @property
    def satisfied(self):
        return self.left >= self.margin * self.right

    def to_text(self):
        lines = [f"right: {self.right:.12g}", f"margin: {self.margin:.12g}"]
        lines += [f"cluster {k}: left={l:.12g} satisfied={bool(s)}"
                  for k, (l, s) in enumerate(zip(self.left, self.satisfied), 1)]
        return "\n".join(lines) + "\n"


def degree_condition(scene, eps, omega_n=None, margin=DEFAULT_MARGIN):
    """Compare N_k gamma(S_k, tau, eps) / gamma(S_k, tau) with omega_N N eps^D + log N."""
    N, D = scene.n_total, scene.ambient_dim
    omega = default_omega(N) if omega_n is None else omega_n
    right = omega * N * eps ** D + math.log(N)
    left = []
    for c in scene.clusters:
        d, diam = c.surface.intrinsic_dim, c.surface.diam
        g_eps = gamma_volume(d, D, c.tau, eps, diam)
        g_all = gamma_volume(d, D, c.tau, math.inf, diam)
        left.append(c.n_points * g_eps / g_all if g_all > 0 else math.inf)
    return DegreeConditionReport(np.array(left), right, margin)


def robust_scale(scene, kernel_omega=1.0, omega_n=None, n_grid=200):
    """Scale maximising the worst degree-condition ratio left / right over clusters.

    The search runs on a log grid from the connectivity threshold of the scene
    up to the largest scale that keeps distinct tubes apart,
    (delta - 2 max tau) / kernel_omega. Returns ``(eps, ratio)``.
    """
    lo = epsilon_threshold(scene).scene_max
    if scene.K >= 2:
        hi = (scene.delta - 2 * max(c.tau for c in scene.clusters)) / kernel_omega
    else:
        hi = 1.0
    if not hi > lo:
        raise GraphError(f"no admissible scale: separation bound {hi:.12g} <= threshold {lo:.12g}")
    grid = np.geomspace(lo, hi, n_grid)
    reports = [degree_condition(scene, e, omega_n) for e in grid]
    ratios = np.array([(r.left / r.right).min() for r in reports])
    k = int(np.argmax(ratios))
    return float(grid[k]), float(ratios[k])
