"""Generative model: parametric surfaces, tube sampling, outliers and volume formulas.

Surfaces live in the unit hypercube ``[0, 1]^D``. A cluster draws its points
uniformly from the tube ``B(S, tau)`` clipped to the hypercube; outliers are
uniform on the part of the hypercube farther than ``delta`` from every
surface.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np
from scipy import optimize
from scipy.special import gammaln

from ._parallel import ordered_map
from .errors import GeometryError, SamplingError

ACCEPTANCE_FLOOR = 1e-4
WARMUP_DRAWS = 100_000
SEPARATION_GRID = 1e-3  # grid step for min_separation, as a fraction of diam
_MAX_GRID_POINTS = 2_000_000
_CONTAIN_TOL = 1e-12


def _vec(x, name):
    a = np.asarray(x, dtype=float)
    if a.ndim != 1:
        raise GeometryError(f"{name} must be a 1-d coordinate vector")
    return a


class Surface:
    """Base class. Subclasses implement distance, sampling and extent."""

    kind: ClassVar[str] = ""

    ambient_dim: int
    intrinsic_dim: int

    def distance(self, X):
        """Euclidean distance from each row of ``X`` to the surface (exact)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.ambient_dim:
            raise GeometryError(
                f"point dimension {X.shape[1]} does not match surface dimension {self.ambient_dim}")
        return self._distance(X)

    def sample(self, n, rng):
        """``n`` points uniform w.r.t. the surface's d-volume (arc length, area, ...)."""
        return np.clip(self._sample(int(n), rng), 0.0, 1.0)

    def bounds(self):
        """Exact axis-aligned bounding box ``(lo, hi)``."""
        raise NotImplementedError

    @property
    def diam(self):
        raise NotImplementedError

    def volume(self):
        """Intrinsic d-volume; counting measure (1) for a point."""
        raise NotImplementedError

    # parametrisation used by min_separation; None means "use the other surface"
    def param_box(self):
        return None

    def param_map(self, T):
        raise NotImplementedError

    def params(self):
        raise NotImplementedError

    def to_dict(self):
        return {"kind": self.kind, **self.params()}

    def _check_contained(self):
        lo, hi = self.bounds()
        if np.any(lo < -_CONTAIN_TOL) or np.any(hi > 1 + _CONTAIN_TOL):
            raise GeometryError(f"{self.kind} surface leaves the unit hypercube")


@dataclass(frozen=True, eq=False)
class Point(Surface):
    point: np.ndarray
    kind: ClassVar[str] = "Point"

    def __post_init__(self):
        object.__setattr__(self, "point", _vec(self.point, "point"))
        self._check_contained()

    ambient_dim = property(lambda self: self.point.size)
    intrinsic_dim = property(lambda self: 0)

    def _distance(self, X):
        return np.sqrt(((X - self.point) ** 2).sum(axis=1))

    def _sample(self, n, rng):
        return np.tile(self.point, (n, 1))

    def bounds(self):
        return self.point.copy(), self.point.copy()

    @property
    def diam(self):
        return 0.0

    def volume(self):
        return 1.0

    def param_box(self):
        return np.zeros((0, 2))

    def param_map(self, T):
        return np.tile(self.point, (len(T), 1))

    def params(self):
        return {"point": self.point.tolist()}


def _segment_distance(X, a, b):
    ab = b - a
    L2 = float(ab @ ab)
    t = np.clip(((X - a) @ ab) / L2, 0.0, 1.0) if L2 > 0 else np.zeros(len(X))
    foot = a + t[:, None] * ab
    return np.sqrt(((X - foot) ** 2).sum(axis=1))


@dataclass(frozen=True, eq=False)
class Segment(Surface):
    start: np.ndarray
    end: np.ndarray
    kind: ClassVar[str] = "Segment"

    def __post_init__(self):
        a, b = _vec(self.start, "start"), _vec(self.end, "end")
        if a.shape != b.shape:
            raise GeometryError("segment endpoints differ in dimension")
        if np.linalg.norm(b - a) <= 0:
            raise GeometryError("degenerate segment (zero length)")
        object.__setattr__(self, "start", a)
        object.__setattr__(self, "end", b)
        self._check_contained()

    ambient_dim = property(lambda self: self.start.size)
    intrinsic_dim = property(lambda self: 1)

    def _distance(self, X):
        return _segment_distance(X, self.start, self.end)

    def _sample(self, n, rng):
        t = rng.random(n)
        return self.start + t[:, None] * (self.end - self.start)

    def bounds(self):
        return np.minimum(self.start, self.end), np.maximum(self.start, self.end)

    @property
    def diam(self):
        return float(np.linalg.norm(self.end - self.start))

    def volume(self):
        return self.diam

    def param_box(self):
        return np.array([[0.0, 1.0]])

    def param_map(self, T):
        T = np.asarray(T, dtype=float).reshape(-1, 1)
        return self.start + T * (self.end - self.start)

    def params(self):
        return {"start": self.start.tolist(), "end": self.end.tolist()}


@dataclass(frozen=True, eq=False)
class Polyline(Surface):
    vertices: np.ndarray
    kind: ClassVar[str] = "Polyline"

    def __post_init__(self):
        V = np.asarray(self.vertices, dtype=float)
        if V.ndim != 2 or V.shape[0] < 2:
            raise GeometryError("polyline needs at least two vertices")
        if np.any(np.linalg.norm(np.diff(V, axis=0), axis=1) <= 0):
            raise GeometryError("polyline has a zero-length segment")
        object.__setattr__(self, "vertices", V)
        self._check_contained()

    ambient_dim = property(lambda self: self.vertices.shape[1])
    intrinsic_dim = property(lambda self: 1)

    @property
    def _lengths(self):
        return np.linalg.norm(np.diff(self.vertices, axis=0), axis=1)

    def segments(self):
        return [Segment(a, b) for a, b in zip(self.vertices[:-1], self.vertices[1:])]

    def _distance(self, X):
        V = self.vertices
        return np.min([_segment_distance(X, V[i], V[i + 1]) for i in range(len(V) - 1)], axis=0)

    def _sample(self, n, rng):
        cum = np.concatenate([[0.0], np.cumsum(self._lengths)])
        s = rng.random(n) * cum[-1]
        k = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(cum) - 2)
        t = (s - cum[k]) / self._lengths[k]
        V = self.vertices
        return V[k] + t[:, None] * (V[k + 1] - V[k])

    def bounds(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def diam(self):
        V = self.vertices
        return float(np.sqrt(((V[:, None, :] - V[None, :, :]) ** 2).sum(-1)).max())

    def volume(self):
        return float(self._lengths.sum())

    def params(self):
        return {"vertices": self.vertices.tolist()}


def _default_plane(D):
    if D < 2:
        raise GeometryError("circular arcs need ambient dimension >= 2")
    return np.eye(D)[:2]


@dataclass(frozen=True, eq=False)
class CircleArc(Surface):
    """``center + radius * (cos t * e1 + sin t * e2)`` for ``t`` in ``[angle_start, angle_end]``."""

    center: np.ndarray
    radius: float
    angle_start: float = 0.0
    angle_end: float = 2 * math.pi
    basis: np.ndarray | None = None
    kind: ClassVar[str] = "CircleArc"

    def __post_init__(self):
        c = _vec(self.center, "center")
        E = _default_plane(c.size) if self.basis is None else np.asarray(self.basis, dtype=float)
        if E.shape != (2, c.size) or not np.allclose(E @ E.T, np.eye(2), atol=1e-10):
            raise GeometryError("arc basis must be two orthonormal vectors")
        span = self.angle_end - self.angle_start
        if not (0 < span <= 2 * math.pi + 1e-12):
            raise GeometryError("arc angle span must lie in (0, 2*pi]")
        if not self.radius > 0:
            raise GeometryError("arc radius must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "basis", E)
        object.__setattr__(self, "radius", float(self.radius))
        self._check_contained()

    ambient_dim = property(lambda self: self.center.size)
    intrinsic_dim = property(lambda self: 1)

    @property
    def span(self):
        return min(self.angle_end - self.angle_start, 2 * math.pi)

    def _at(self, t):
        t = np.asarray(t, dtype=float)
        e1, e2 = self.basis
        return self.center + self.radius * (np.cos(t)[:, None] * e1 + np.sin(t)[:, None] * e2)

    def _in_arc(self, phi):
        if self.span >= 2 * math.pi:
            return np.ones_like(phi, dtype=bool)
        return np.mod(phi - self.angle_start, 2 * math.pi) <= self.span

    def _distance(self, X):
        Y = X - self.center
        p1, p2 = Y @ self.basis[0], Y @ self.basis[1]
        # off-plane part taken directly; |Y|^2 - p1^2 - p2^2 cancels badly
        h2 = ((Y - p1[:, None] * self.basis[0] - p2[:, None] * self.basis[1]) ** 2).sum(axis=1)
        rho = np.hypot(p1, p2)
        on_arc = np.sqrt(h2 + (rho - self.radius) ** 2)
        ends = self._at([self.angle_start, self.angle_start + self.span])
        to_ends = np.minimum(np.linalg.norm(X - ends[0], axis=1), np.linalg.norm(X - ends[1], axis=1))
        return np.where(self._in_arc(np.arctan2(p2, p1)), on_arc, to_ends)

    def _sample(self, n, rng):
        return self._at(self.angle_start + rng.random(n) * self.span)

    def bounds(self):
        t = [self.angle_start, self.angle_start + self.span]
        for e1k, e2k in zip(*self.basis):
            phi = math.atan2(e2k, e1k)
            t += [phi, phi + math.pi]
        t = np.array(t)
        t = t[self._in_arc(t) | np.isin(np.arange(len(t)), [0, 1])]
        P = self._at(t)
        return P.min(axis=0), P.max(axis=0)

    @property
    def diam(self):
        if self.span >= math.pi:
            return 2 * self.radius
        return 2 * self.radius * math.sin(self.span / 2)

    def volume(self):
        return self.radius * self.span

    def param_box(self):
        return np.array([[self.angle_start, self.angle_start + self.span]])

    def param_map(self, T):
        return self._at(np.asarray(T, dtype=float).reshape(-1))

    def params(self):
        return {"center": self.center.tolist(), "radius": self.radius,
                "angle_start": self.angle_start, "angle_end": self.angle_end,
                "basis": self.basis.tolist()}


@dataclass(frozen=True, eq=False)
class AffinePatch(Surface):
    """Rectangle ``origin + sum_i t_i b_i`` with ``0 <= t_i <= extents[i]``, orthonormal ``b_i``."""

    origin: np.ndarray
    basis: np.ndarray
    extents: np.ndarray
    kind: ClassVar[str] = "AffinePatch"

    def __post_init__(self):
        o = _vec(self.origin, "origin")
        B = np.atleast_2d(np.asarray(self.basis, dtype=float))
        e = np.atleast_1d(np.asarray(self.extents, dtype=float))
        if B.shape[1] != o.size or B.shape[0] != e.size or B.shape[0] > o.size:
            raise GeometryError("patch basis/extents do not match the ambient dimension")
        if not np.allclose(B @ B.T, np.eye(B.shape[0]), atol=1e-10):
            raise GeometryError("patch basis must be orthonormal")
        if np.any(e <= 0):
            raise GeometryError("patch extents must be positive")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "basis", B)
        object.__setattr__(self, "extents", e)
        self._check_contained()

    ambient_dim = property(lambda self: self.origin.size)
    intrinsic_dim = property(lambda self: self.basis.shape[0])

    def _distance(self, X):
        t = np.clip((X - self.origin) @ self.basis.T, 0.0, self.extents)
        foot = self.origin + t @ self.basis
        return np.sqrt(((X - foot) ** 2).sum(axis=1))

    def _sample(self, n, rng):
        return self.param_map(rng.random((n, self.intrinsic_dim)) * self.extents)

    def bounds(self):
        d = self.intrinsic_dim
        corners = np.array(np.meshgrid(*[[0.0, x] for x in self.extents], indexing="ij")).reshape(d, -1).T
        P = self.param_map(corners)
        return P.min(axis=0), P.max(axis=0)

    @property
    def diam(self):
        return float(np.linalg.norm(self.extents))

    def volume(self):
        return float(np.prod(self.extents))

    def param_box(self):
        return np.column_stack([np.zeros_like(self.extents), self.extents])

    def param_map(self, T):
        T = np.asarray(T, dtype=float).reshape(-1, self.intrinsic_dim)
        return self.origin + T @ self.basis

    def params(self):
        return {"origin": self.origin.tolist(), "basis": self.basis.tolist(),
                "extents": self.extents.tolist()}


@dataclass(frozen=True, eq=False)
class Sphere(Surface):
    """Round (D-1)-sphere."""

    center: np.ndarray
    radius: float
    kind: ClassVar[str] = "Sphere"

    def __post_init__(self):
        c = _vec(self.center, "center")
        if c.size < 2:
            raise GeometryError("spheres need ambient dimension >= 2")
        if not self.radius > 0:
            raise GeometryError("sphere radius must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))
        self._check_contained()

    ambient_dim = property(lambda self: self.center.size)
    intrinsic_dim = property(lambda self: self.center.size - 1)

    def _distance(self, X):
        return np.abs(np.sqrt(((X - self.center) ** 2).sum(axis=1)) - self.radius)

    def _sample(self, n, rng):
        g = rng.standard_normal((n, self.ambient_dim))
        return self.center + self.radius * g / np.linalg.norm(g, axis=1, keepdims=True)

    def bounds(self):
        return self.center - self.radius, self.center + self.radius

    @property
    def diam(self):
        return 2 * self.radius

    def volume(self):
        D = self.ambient_dim
        return float(np.exp(math.log(2) + (D / 2) * math.log(math.pi) - gammaln(D / 2))) * self.radius ** (D - 1)

    def params(self):
        return {"center": self.center.tolist(), "radius": self.radius}


SURFACE_KINDS = {cls.kind: cls for cls in (Point, Segment, Polyline, CircleArc, AffinePatch, Sphere)}


def surface_from_dict(d):
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in SURFACE_KINDS:
        raise GeometryError(f"unknown surface kind {kind!r}")
    d.pop("intrinsic_dim", None)
    d.pop("ambient_dim", None)
    try:
        return SURFACE_KINDS[kind](**d)
    except TypeError as exc:
        raise GeometryError(f"bad parameters for {kind}: {exc}") from None


@dataclass(frozen=True)
class ClusterSpec:
    surface: Surface
    n_points: int
    tau: float = 0.0
    density_ratio: float = 1.0

    def __post_init__(self):
        if int(self.n_points) < 1:
            raise GeometryError("n_points must be >= 1")
        if self.tau < 0:
            raise GeometryError("tau must be nonnegative")
        if self.density_ratio < 1:
            raise GeometryError("density_ratio (kappa) must be >= 1")
        object.__setattr__(self, "n_points", int(self.n_points))
        object.__setattr__(self, "tau", float(self.tau))


@dataclass(frozen=True)
class SceneSpec:
    ambient_dim: int
    clusters: tuple
    n_outliers: int = 0
    delta: float = 0.0
    seed: int = 0
    outlier_delta: float | None = None  # outlier exclusion radius; defaults to delta

    def __post_init__(self):
        object.__setattr__(self, "clusters", tuple(self.clusters))
        if self.ambient_dim < 1:
            raise GeometryError("ambient_dim must be >= 1")
        if not self.clusters:
            raise GeometryError("a scene needs at least one cluster")
        for k, c in enumerate(self.clusters, 1):
            if c.surface.ambient_dim != self.ambient_dim:
                raise GeometryError(f"cluster {k}: surface dimension {c.surface.ambient_dim} "
                                    f"!= ambient_dim {self.ambient_dim}")
        if self.n_outliers < 0:
            raise GeometryError("n_outliers must be >= 0")
        if len(self.clusters) >= 2 and not self.delta > 2 * max(c.tau for c in self.clusters):
            raise GeometryError("delta must exceed 2*max(tau) when there are several clusters")

    @property
    def outlier_separation(self):
        return self.delta if self.outlier_delta is None else self.outlier_delta

    @property
    def K(self):
        return len(self.clusters)

    @property
    def n_total(self):
        return sum(c.n_points for c in self.clusters) + self.n_outliers

    def validate_separation(self):
        """Check the declared delta against the measured surface separation.

        Returns the measured value; raises ``GeometryError`` if it is smaller
        than ``delta`` by more than the grid tolerance.
        """
        if self.K < 2:
            return math.inf
        measured = min_separation(self)
        tol = 0.5 * SEPARATION_GRID * max(c.surface.diam for c in self.clusters)
        if measured < self.delta - tol:
            raise GeometryError(
                f"declared delta={self.delta:.12g} exceeds measured min_separation={measured:.12g}")
        return measured


@dataclass
class PointCloud:
    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.points.ndim != 2 or len(self.points) != len(self.labels):
            raise GeometryError("points must be N x D with N labels")

    def __len__(self):
        return len(self.labels)


def distance_to_surface(surface, x):
    """Distance from a point (or each row of an array) to ``surface``."""
    x = np.asarray(x, dtype=float)
    d = surface.distance(x)
    return float(d[0]) if x.ndim == 1 else d


def substream(seed, index):
    """Independent generator for stream ``index`` (0 = outliers, k = cluster k)."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))


def _rejection(n, lo, hi, accept, rng, what):
    out = []
    have = drawn = 0
    batch = 4096
    while have < n:
        Y = lo + rng.random((batch, lo.size)) * (hi - lo)
        Y = Y[accept(Y)]
        drawn += batch
        out.append(Y[: n - have])
        have += min(len(Y), n - have)
        rate = sum(len(o) for o in out) / drawn if have < n else 1.0
        if drawn >= WARMUP_DRAWS and rate < ACCEPTANCE_FLOOR:
            raise SamplingError(f"{what}: acceptance rate {rate:.3g} below floor {ACCEPTANCE_FLOOR:g} "
                                f"after {drawn} draws (degenerate scene)")
        # deterministic batch growth keeps streams reproducible
        if have < n and rate > 0:
            batch = int(min(1 << 20, max(4096, 1.25 * (n - have) / rate)))
        elif have < n:
            batch = min(1 << 20, batch * 4)
    return np.concatenate(out)[:n] if out else np.empty((0, lo.size))


def sample_cluster(spec, rng):
    """``spec.n_points`` points uniform on ``B(S, tau)`` clipped to the hypercube."""
    S, n, tau = spec.surface, spec.n_points, spec.tau
    if tau == 0:
        return S.sample(n, rng)
    lo, hi = S.bounds()
    lo = np.maximum(lo - tau, 0.0)
    hi = np.minimum(hi + tau, 1.0)
    return _rejection(n, lo, hi, lambda Y: S.distance(Y) <= tau, rng, f"{S.kind} tube")


def sample_outliers(scene, rng):
    """``scene.n_outliers`` points uniform on the hypercube minus every ``B(S_k, delta)``."""
    D, n = scene.ambient_dim, scene.n_outliers
    if n == 0:
        return np.empty((0, D))
    surfaces = [c.surface for c in scene.clusters]

    def accept(Y):
        return np.min([S.distance(Y) for S in surfaces], axis=0) > scene.outlier_separation

    return _rejection(n, np.zeros(D), np.ones(D), accept, rng, "outliers")


def sample_scene(scene, seed=None):
    """Draw the full cloud: clusters in order (labels 1..K), then outliers (label 0)."""
    seed = scene.seed if seed is None else seed
    blocks = ordered_map(lambda k: sample_cluster(scene.clusters[k - 1], substream(seed, k)),
                         range(1, scene.K + 1))
    blocks.append(sample_outliers(scene, substream(seed, 0)))
    labels = [np.full(c.n_points, k, dtype=np.int64) for k, c in enumerate(scene.clusters, 1)]
    labels.append(np.zeros(scene.n_outliers, dtype=np.int64))
    return PointCloud(np.vstack(blocks), np.concatenate(labels))


def _minimize_over(A, B):
    """min over a in A of dist(a, B): parameter grid on A then bounded local refinement."""
    box = A.param_box()
    if box is None:
        raise GeometryError(f"{A.kind} has no parametrisation")
    d = box.shape[0]
    if d == 0:
        return float(B.distance(A.param_map(np.zeros((1, 0))))[0])
    step = SEPARATION_GRID * max(A.diam, 1e-12)
    if isinstance(A, CircleArc):
        counts = [int(math.ceil(A.radius * A.span / step)) + 1]
    else:
        scale = A.extents if isinstance(A, AffinePatch) else np.array([A.diam])
        counts = [int(math.ceil(s / step)) + 1 for s in scale]
    while np.prod(counts, dtype=float) > _MAX_GRID_POINTS:
        counts = [max(2, (c + 1) // 2) for c in counts]
    axes = [np.linspace(lo, hi, c) for (lo, hi), c in zip(box, counts)]
    T = np.array(np.meshgrid(*axes, indexing="ij")).reshape(d, -1).T
    f = np.empty(len(T))
    for a in range(0, len(T), 200_000):
        f[a:a + 200_000] = B.distance(A.param_map(T[a:a + 200_000]))
    best = float(f.min())
    for t0 in T[np.argsort(f, kind="stable")[:5]]:
        res = optimize.minimize(lambda t: float(B.distance(A.param_map(t))[0]), t0,
                                method="L-BFGS-B", bounds=box)
        best = min(best, float(res.fun))
    return best


def surface_distance(A, B):
    """Distance between two surfaces: closed form where available, grid + refinement otherwise."""
    if isinstance(A, Sphere) and isinstance(B, Sphere):
        c = float(np.linalg.norm(A.center - B.center))
        if c >= A.radius + B.radius:
            return c - A.radius - B.radius
        if c <= abs(A.radius - B.radius):
            return abs(A.radius - B.radius) - c
        return 0.0
    if isinstance(B, Point) or isinstance(A, Sphere):
        A, B = B, A
    if isinstance(A, Polyline):
        return min(_minimize_over(s, B) for s in A.segments())
    return _minimize_over(A, B)


def min_separation(scene):
    """Minimum distance over pairs of distinct surfaces; ``inf`` when K < 2."""
    S = [c.surface for c in scene.clusters]
    if len(S) < 2:
        return math.inf
    return min(surface_distance(S[k], S[l]) for k in range(len(S)) for l in range(k + 1, len(S)))


def gamma_volume(d, D, tau, eps=math.inf, diam=0.0):
    """Order of magnitude of vol_D(B(S, tau) cap B(x, eps)) for a d-dimensional S.

    ``(tau ^ eps)^(D-d) * ((tau ^ eps) v (diam ^ eps))^d``; with ``eps=inf``
    this is the tube volume order ``tau^(D-d) * (tau v diam)^d``.
    """
    if not 0 <= d <= D:
        raise GeometryError(f"need 0 <= d <= D, got d={d}, D={D}")
    if min(tau, eps, diam) < 0:
        raise GeometryError("tau, eps and diam must be nonnegative")
    m = min(tau, eps)
    return m ** (D - d) * max(m, min(diam, eps)) ** d


@dataclass
class VolumeReport:
    passed: bool
    worst_ratio: float
    ratios: np.ndarray = field(repr=False)
    eps_grid: np.ndarray = field(repr=False)


def verify_volume_condition(surface, kappa, n_mc=10_000, rng=None, n_centers=8, n_eps=8):
    """Monte-Carlo check of kappa^-1 eps^d <= vol_d(B(x, eps) cap S) <= kappa eps^d.

    Centers x are drawn on S, eps runs over a log grid in [1e-2 diam, diam].
    Each estimate may deviate by three of its own relative standard errors.
    """
    if kappa < 1:
        raise GeometryError("kappa must be >= 1")
    if n_mc < 1000:
        raise GeometryError("n_mc must be >= 1000")
    if surface.intrinsic_dim == 0:
        return VolumeReport(True, 1.0, np.ones((1, 1)), np.zeros(1))
    rng = np.random.default_rng(0) if rng is None else rng
    d, vol, diam = surface.intrinsic_dim, surface.volume(), surface.diam
    eps_grid = np.geomspace(1e-2 * diam, diam, n_eps)
    centers = surface.sample(n_centers, rng)
    ratios = np.empty((n_centers, n_eps))
    ok = True
    for c, x in enumerate(centers):
        r = np.linalg.norm(surface.sample(n_mc, rng) - x, axis=1)
        for e, eps in enumerate(eps_grid):
            p = float(np.mean(r <= eps))
            ratios[c, e] = p * vol / eps ** d
            if p == 0:
                ok = False
                continue
            kp = kappa * (1 + 3 * math.sqrt((1 - p) / (n_mc * p)))
            ok &= 1 / kp <= ratios[c, e] <= kp
    with np.errstate(divide="ignore"):
        worst = float(np.max(np.maximum(ratios, 1 / ratios)))
    return VolumeReport(bool(ok), worst, ratios, eps_grid)


def ball_volume(D, r):
    return math.exp((D / 2) * math.log(math.pi) - gammaln(D / 2 + 1)) * r ** D


def tube_ball_volume(surface, tau, x, eps, n=100_000, rng=None):
    """Monte-Carlo vol_D(B(S, tau) cap B(x, eps)), the tube clipped to the hypercube.

    Returns ``(estimate, standard_error)``.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    x = np.asarray(x, dtype=float)
    D = x.size
    g = rng.standard_normal((n, D))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    Y = x + eps * rng.random(n)[:, None] ** (1.0 / D) * g
    hit = (surface.distance(Y) <= tau) & np.all((Y >= 0) & (Y <= 1), axis=1)
    p = float(hit.mean())
    V = ball_volume(D, eps)
    return p * V, V * math.sqrt(p * (1 - p) / n)


def parallel_segments_scene(delta, n_points=(2000, 2000), tau=0.01, length=1.0,
                            n_outliers=0, outlier_delta=None, seed=0, center=0.5):
    """Horizontal segments in D=2 stacked ``delta`` apart around ``y = center``."""
    K = len(n_points)
    ys = center + (np.arange(K) - (K - 1) / 2) * delta
    x0 = (1 - length) / 2
    clusters = [ClusterSpec(Segment([x0, y], [x0 + length, y]), n, tau) for y, n in zip(ys, n_points)]
    return SceneSpec(2, clusters, n_outliers=n_outliers, delta=delta, seed=seed,
                     outlier_delta=outlier_delta)
