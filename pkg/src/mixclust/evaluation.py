"""Ground-truth scoring, theoretical thresholds and small brute-force oracles."""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linear_sum_assignment

from . import _kernels
from ._parallel import ordered_map
from .cluster_cc import Partition, extract_components
from .errors import EvaluationError
from .geometry import sample_scene
from .nngraph import AffinityMatrix

EXHAUSTIVE_MAX = 8
CHEEGER_MAX_N = 20


@dataclass
class ScoreReport:
    exact_match: bool
    error_rate: float
    confusion: np.ndarray = field(repr=False)
    matching: dict
    n_true: int
    n_pred: int
    outlier_precision: float | None = None
    outlier_recall: float | None = None

    def to_text(self):
        lines = [f"exact_match: {self.exact_match}",
                 f"error_rate: {self.error_rate:.12g}",
                 f"clusters_true: {self.n_true}",
                 f"clusters_pred: {self.n_pred}"]
        if self.outlier_precision is not None:
            lines += [f"outlier_precision: {self.outlier_precision:.12g}",
                      f"outlier_recall: {self.outlier_recall:.12g}"]
        return "\n".join(lines) + "\n"


def _best_matching(C):
    """Injective matching rows -> columns maximising the matched total."""
    r, c = C.shape
    if r == 0 or c == 0:
        return []
    if min(r, c) <= EXHAUSTIVE_MAX and max(r, c) <= EXHAUSTIVE_MAX:
        best, best_val = None, -1
        if r <= c:
            for perm in itertools.permutations(range(c), r):
                v = sum(C[i, perm[i]] for i in range(r))
                if v > best_val:
                    best, best_val = list(enumerate(perm)), v
        else:
            for perm in itertools.permutations(range(r), c):
                v = sum(C[perm[j], j] for j in range(c))
                if v > best_val:
                    best, best_val = [(perm[j], j) for j in range(c)], v
        return sorted(best)
    rows, cols = linear_sum_assignment(C, maximize=True)
    return list(zip(rows.tolist(), cols.tolist()))


def match_accuracy(pred, truth):
    """Score ``pred`` against ``truth`` under the best one-to-one label matching.

    Label 0 (outlier) is only ever matched to 0; nonzero labels are matched
    among themselves.
    """
    p = pred.labels if isinstance(pred, Partition) else np.asarray(pred, dtype=np.int64)
    t = truth.labels if isinstance(truth, Partition) else np.asarray(truth, dtype=np.int64)
    if p.shape != t.shape or p.ndim != 1:
        raise EvaluationError(f"length mismatch: {p.shape} vs {t.shape}")
    N = len(t)
    tv, ti = np.unique(t, return_inverse=True)
    pv, pi = np.unique(p, return_inverse=True)
    C = np.zeros((len(tv), len(pv)), dtype=np.int64)
    np.add.at(C, (ti, pi), 1)
    tz, pz = tv != 0, pv != 0
    agree = 0
    if (~tz).any() and (~pz).any():
        agree += int(C[np.flatnonzero(~tz)[0], np.flatnonzero(~pz)[0]])
    rows, cols = np.flatnonzero(tz), np.flatnonzero(pz)
    matching = {}
    for a, b in _best_matching(C[np.ix_(rows, cols)]):
        agree += int(C[rows[a], cols[b]])
        matching[int(tv[rows[a]])] = int(pv[cols[b]])
    err = 1.0 - agree / N if N else 0.0
    n_true, n_pred = int(tz.sum()), int(pz.sum())
    prec = rec = None
    if (t == 0).any() or (p == 0).any():
        tp = int(((t == 0) & (p == 0)).sum())
        prec = tp / int((p == 0).sum()) if (p == 0).any() else 1.0
        rec = tp / int((t == 0).sum()) if (t == 0).any() else 1.0
    exact = agree == N and n_true == n_pred
    return ScoreReport(exact, float(err), C, matching, n_true, n_pred, prec, rec)


@dataclass
class ThresholdReport:
    """Per-cluster scale thresholds: both branches, their max, and the scene max."""

    branch_intrinsic: np.ndarray
    branch_ambient: np.ndarray
    per_cluster: np.ndarray
    scene_max: float

    def to_text(self):
        lines = [f"cluster {k}: intrinsic={a:.12g} ambient={b:.12g} max={m:.12g}"
                 for k, (a, b, m) in enumerate(zip(self.branch_intrinsic, self.branch_ambient,
                                                   self.per_cluster), 1)]
        lines.append(f"scene_max: {self.scene_max:.12g}")
        return "\n".join(lines) + "\n"


def epsilon_threshold(scene):
    """Scale above which within-cluster points are connected, per cluster.

    For d >= 1:
      max((tau v diam)(log N_k / N_k)^(1/d),
          (tau v diam)^(d/D) tau^(1 - d/D) (log N_k / N_k)^(1/D)).
    Centroid clusters (d = 0) use tau (log N_k / N_k)^(1/D).
    """
    D = scene.ambient_dim
    a, b = [], []
    for c in scene.clusters:
        d, n, tau = c.surface.intrinsic_dim, c.n_points, c.tau
        r = math.log(n) / n if n > 1 else 0.0
        if d == 0:
            a.append(0.0)
            b.append(tau * r ** (1 / D))
            continue
        s = max(tau, c.surface.diam)
        a.append(s * r ** (1 / d))
        b.append(s ** (d / D) * tau ** (1 - d / D) * r ** (1 / D))
    a, b = np.array(a), np.array(b)
    m = np.maximum(a, b)
    return ThresholdReport(a, b, m, float(m.max()))


@dataclass
class SamplingReport:
    left: np.ndarray
    right: np.ndarray

    @property
    def satisfied(self):
        return self.left >= self.right

    def to_text(self):
        return "".join(f"cluster {k}: N_k={l:.12g} need={r:.12g} satisfied={bool(s)}\n"
                       for k, (l, r, s) in enumerate(zip(self.left, self.right, self.satisfied), 1))


def sampling_condition(scene):
    """N_k >= (N^(d/D) v N tau^(D-d)) log N for each cluster (natural log)."""
    N, D = scene.n_total, scene.ambient_dim
    left, right = [], []
    for c in scene.clusters:
        d = c.surface.intrinsic_dim
        left.append(float(c.n_points))
        right.append(max(N ** (d / D), N * c.tau ** (D - d)) * math.log(N))
    return SamplingReport(np.array(left), np.array(right))


@dataclass
class CheegerResult:
    h: float
    subset: np.ndarray
    connected: bool


def _dense(W):
    if isinstance(W, AffinityMatrix):
        return W.matrix.toarray()
    if sparse.issparse(W):
        return W.toarray()
    return np.asarray(W, dtype=float)


def cheeger_bruteforce(W, backend=None):
    """min over nonempty I with |I| <= N/2 of cut(I) / vol(I), by full enumeration.

    A disconnected graph gives h = 0 with ``connected=False``.
    """
    A = _dense(W)
    N = A.shape[0]
    if A.ndim != 2 or A.shape != (N, N) or N < 2:
        raise EvaluationError("need a square matrix with N >= 2")
    if N > CHEEGER_MAX_N:
        raise EvaluationError(f"N={N} exceeds the enumeration limit {CHEEGER_MAX_N}")
    if not np.allclose(A, A.T):
        raise EvaluationError("W must be symmetric")
    A = np.ascontiguousarray(A)
    comps = extract_components(AffinityMatrix.from_dense(A))
    if comps.n_clusters > 1:
        return CheegerResult(0.0, comps.groups()[-1], False)
    _, mask = _kernels.get_backend(backend).cheeger_enumerate(A)
    I = np.flatnonzero([(int(mask) >> i) & 1 for i in range(N)])
    # recompute exactly from the winning subset rather than trust accumulated sums
    out = np.setdiff1d(np.arange(N), I)
    vol = A[I].sum()
    cut = A[np.ix_(I, out)].sum()
    return CheegerResult(float(cut / vol), I, True)


@dataclass
class SweepRow:
    delta: float
    seed: int
    exact: bool
    error_rate: float
    runtime_ms: float


@dataclass
class SweepResult:
    rows: list

    def summary(self):
        """``{delta: (recovery rate, mean error rate)}`` in grid order."""
        out = {}
        for r in self.rows:
            out.setdefault(r.delta, []).append(r)
        return {d: (float(np.mean([r.exact for r in rs])), float(np.mean([r.error_rate for r in rs])))
                for d, rs in out.items()}

    def to_csv(self):
        lines = ["delta,seed,exact,error_rate,runtime_ms"]
        lines += [f"{r.delta:.12g},{r.seed},{int(r.exact)},{r.error_rate:.12g},{r.runtime_ms:.12g}"
                  for r in self.rows]
        return "\n".join(lines) + "\n"

    def summary_text(self):
        return "".join(f"delta={d:.12g} recovery={a:.12g} mean_error={e:.12g}\n"
                       for d, (a, e) in self.summary().items())

    def is_monotone(self, slack=0.1):
        rates = [a for a, _ in self.summary().values()]
        return all(later >= earlier - slack for i, earlier in enumerate(rates) for later in rates[i + 1:])


def separation_sweep(template, deltas, algorithm, trials, seed0=0, threads=None):
    """Recovery rate of ``algorithm`` as the separation grows.

    ``template(delta, seed)`` returns a SceneSpec; ``algorithm(points, scene)``
    returns a Partition. Cells run in parallel, rows come back in grid order.
    Runtimes are wall-clock and therefore not reproducible.
    """
    deltas = [float(d) for d in deltas]
    if not deltas or trials < 1:
        raise EvaluationError("need a nonempty delta grid and trials >= 1")
    if any(not math.isfinite(d) or d <= 0 for d in deltas):
        raise EvaluationError("every delta must be positive and finite")
    cells = [(d, seed0 + t) for d in deltas for t in range(trials)]
    for d, s in cells[::trials]:
        scene = template(d, s)
        tau = max(c.tau for c in scene.clusters)
        if not d > 2 * tau:
            raise EvaluationError(f"delta={d:.12g} must exceed 2*tau={2 * tau:.12g}")

    def run(cell):
        d, s = cell
        scene = template(d, s)
        cloud = sample_scene(scene, s)
        t0 = time.perf_counter()
        part = algorithm(cloud.points, scene)
        ms = 1e3 * (time.perf_counter() - t0)
        rep = match_accuracy(part, cloud.labels)
        return SweepRow(d, s, rep.exact_match, rep.error_rate, ms)

    return SweepResult(ordered_map(run, cells, threads))
