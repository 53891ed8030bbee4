"""NJW spectral clustering with near-orthogonal one-pass K-means.

Steps: Z = D^-1/2 W D^-1/2, top-K eigenvectors U, row-normalised V, then
K-means on the rows of V seeded with rows at nearly 90 degree angles.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .cluster_cc import Partition, extract_components
from .errors import GraphError, SpectralError
from .nngraph import AffinityMatrix, build_affinity, build_affinity_local, degrees

DENSE_MAX_N = 512
RESIDUAL_TOL = 1e-8
ZERO_ROW_TOL = 1e-12
_V0_SEED = 20_100_601


def normalized_affinity(W):
    """Z_ij = W_ij / sqrt(D_i D_j), same sparsity as W."""
    D = degrees(W)
    iso = np.flatnonzero(D <= 0)
    if iso.size:
        raise SpectralError(f"isolated vertex {int(iso[0])} (zero degree); "
                            f"{iso.size} such vertices in total")
    M = W.matrix.tocoo()
    Z = sparse.csr_matrix((M.data / np.sqrt(D[M.row] * D[M.col]), (M.row, M.col)), shape=M.shape)
    Z.sort_indices()
    return Z


def _as_csr(Z):
    if isinstance(Z, AffinityMatrix):
        return Z.matrix
    return sparse.csr_matrix(Z)


def _top_connected(M, k):
    """Top-k eigenpairs of a symmetric matrix, descending."""
    n = M.shape[0]
    k = min(k, n)
    if n <= DENSE_MAX_N:
        vals, vecs = np.linalg.eigh(M.toarray() if sparse.issparse(M) else M)
        return vals[::-1][:k], vecs[:, ::-1][:, :k]
    if k >= n - 1:
        vals, vecs = np.linalg.eigh(M.toarray())
        return vals[::-1][:k], vecs[:, ::-1][:, :k]
    v0 = np.random.default_rng(_V0_SEED).standard_normal(n)
    ncv = min(n, max(2 * k + 1, 64))
    try:
        vals, vecs = eigsh(M, k=k, which="LA", v0=v0, ncv=ncv, tol=0, maxiter=max(300, 30 * k * ncv))
    except ArpackNoConvergence as exc:
        raise SpectralError(f"Lanczos solver did not converge for k={k} (n={n})") from exc
    o = np.argsort(-vals, kind="stable")
    return vals[o], vecs[:, o]


def _fix_signs(U):
    U = U.copy()
    for c in range(U.shape[1]):
        col = U[:, c]
        nz = np.flatnonzero(np.abs(col) > 1e-10 * np.abs(col).max())
        if nz.size and col[nz[0]] < 0:
            U[:, c] = -col
    return U


def top_eigenvectors(Z, K):
    """The K algebraically largest eigenvalues of symmetric Z and orthonormal eigenvectors.

    Z is split into its connected blocks first, which makes exact multiplicities
    coming from disconnected pieces harmless. Blocks up to 512 nodes use a dense
    solver, larger ones implicitly restarted Lanczos. Every pair is checked to
    residual 1e-8; ties in eigenvalue keep block order (smallest member first).
    """
    Z = _as_csr(Z)
    N = Z.shape[0]
    if not 1 <= K <= N:
        raise SpectralError(f"K must lie in [1, {N}], got {K}")
    if N < 2:
        raise SpectralError("need at least two nodes")
    blocks = extract_components(AffinityMatrix(abs(Z).tocsr())).groups()
    vals, cols = [], []
    for b in blocks:
        sub = Z[b][:, b]
        lam, vec = _top_connected(sub, K)
        for t in range(len(lam)):
            u = np.zeros(N)
            u[b] = vec[:, t]
            vals.append(lam[t])
            cols.append(u)
    vals = np.array(vals)
    order = np.argsort(-np.round(vals, 13), kind="stable")[:K]
    lam = vals[order]
    U = _fix_signs(np.column_stack([cols[i] for i in order]))
    res = np.linalg.norm(Z @ U - U * lam, axis=0)
    if np.any(res > RESIDUAL_TOL):
        raise SpectralError(f"eigenpair residuals {res.max():.3e} exceed {RESIDUAL_TOL:g}")
    return lam, U


def top_eigenvalues(Z, m):
    return top_eigenvectors(Z, m)[0]


def row_normalize(U):
    """v_i = u_i / ||u_i||; near-zero rows are an error."""
    U = np.asarray(U, dtype=float)
    norms = np.linalg.norm(U, axis=1)
    bad = np.flatnonzero(norms < ZERO_ROW_TOL)
    if bad.size:
        raise SpectralError(f"near-zero embedding rows {bad[:20].tolist()} "
                            f"({bad.size} total): K too large or disconnected residue")
    return U / norms[:, None]


def orthogonal_init(V, K):
    """Indices of K rows: row 0, then repeatedly the row whose largest |cosine|
    with the rows already chosen is smallest (ties to the smaller index)."""
    V = np.asarray(V, dtype=float)
    if K > len(np.unique(V, axis=0)):
        raise SpectralError(f"K={K} exceeds the number of distinct rows")
    chosen = [0]
    worst = np.abs(V @ V[0])
    for _ in range(1, K):
        worst_masked = worst.copy()
        worst_masked[chosen] = np.inf
        nxt = int(np.argmin(worst_masked))
        chosen.append(nxt)
        worst = np.maximum(worst, np.abs(V @ V[nxt]))
    return chosen


def _assign(V, C):
    return np.argmax(np.abs(V @ C.T), axis=1)


def orthogonal_init_kmeans(V, K, n_iter=1):
    """Angular K-means on unit rows, seeded by ``orthogonal_init``.

    The default ``n_iter=1`` is a single assignment pass. Returns
    ``(partition, centroids)``.
    """
    V = np.asarray(V, dtype=float)
    if K < 1:
        raise SpectralError("K must be >= 1")
    C = V[orthogonal_init(V, K)]
    lab = _assign(V, C)
    for _ in range(n_iter - 1):
        newC = C.copy()
        for k in range(K):
            m = V[lab == k]
            if len(m):
                # align signs with the current centroid before averaging
                s = np.sign(m @ C[k])
                s[s == 0] = 1
                mean = (m * s[:, None]).sum(axis=0)
                newC[k] = mean / np.linalg.norm(mean)
        new_lab = _assign(V, newC)
        C = newC
        if np.array_equal(new_lab, lab):
            break
        lab = new_lab
    return Partition(lab + 1), C


@dataclass
class SpectralState:
    Z: sparse.csr_matrix = field(repr=False)
    eigenvalues: np.ndarray
    U: np.ndarray = field(repr=False)
    V: np.ndarray = field(repr=False)
    representatives: np.ndarray = field(repr=False)


def spectral_embedding(W, K):
    Z = normalized_affinity(W)
    lam, U = top_eigenvectors(Z, K)
    return Z, lam, U, row_normalize(U)


def spectral_cluster_affinity(W, K, n_iter=1):
    """Steps 2-6 on a prebuilt affinity. Returns ``(partition, state)``."""
    Z, lam, U, V = spectral_embedding(W, K)
    part, C = orthogonal_init_kmeans(V, K, n_iter)
    return part, SpectralState(Z, lam, U, V, C)


def spectral_cluster(points, kernel, K, eps=None, scales=None, n_iter=1, return_state=False,
                     backend=None, threads=None):
    """NJW spectral clustering with a fixed ``eps`` or local ``scales``."""
    if (eps is None) == (scales is None):
        raise GraphError("give exactly one of eps or scales")
    if eps is not None:
        W = build_affinity(points, kernel, eps, backend=backend, threads=threads)
    else:
        W = build_affinity_local(points, kernel, scales, backend=backend, threads=threads)
    part, state = spectral_cluster_affinity(W, K, n_iter)
    return (part, state) if return_state else part


@dataclass
class EigengapEstimate:
    k: int
    gaps: np.ndarray
    eigenvalues: np.ndarray


def estimate_k(Z, k_max):
    """K maximising lambda_k - lambda_{k+1} over 1 <= k <= k_max (ties to smaller k)."""
    Z = _as_csr(Z)
    N = Z.shape[0]
    if not 1 <= k_max <= N - 1:
        raise SpectralError(f"k_max must lie in [1, {N - 1}]")
    lam = top_eigenvalues(Z, k_max + 1)
    gaps = lam[:-1] - lam[1:]
    return EigengapEstimate(int(np.argmax(gaps)) + 1, gaps, lam)


@dataclass
class NjwDiagnostics:
    zeta: float
    nu1: float
    nu2: float
    theta: float
    bound: float
    lhs: float
    K: int
    N: int
    eigenvalues: np.ndarray = field(repr=False)

    def holds(self):
        return self.lhs <= self.bound

    def to_text(self):
        lines = [f"{name}: {getattr(self, name):.12g}"
                 for name in ("zeta", "nu1", "nu2", "theta", "bound", "lhs")]
        lines.insert(0, f"K: {self.K}\nN: {self.N}")
        lines.append("eigenvalues: " + " ".join(f"{x:.12g}" for x in self.eigenvalues))
        return "\n".join(lines) + "\n"


def njw_diagnostics(W, labels):
    """Perturbation quantities behind the NJW bound, measured against true labels.

    zeta  = min_k (1 - lambda_2 of the within-cluster normalised block),
    nu1   = max_{k != l} sum_{i in k, j in l} W_ij^2 / (Dk_i Dk_j),
    nu2   = max_i (sum_{j outside} W_ij / Dk_i) * C_k^(1/2),
    theta = max within-cluster ratio of within-cluster degrees,
    bound = 8 theta zeta^-2 (K^2 nu1 + K nu2^2) N and
    lhs   = sum_k sum_{i in k} ||v_i - r_k||^2 with r_k the normalised mean row.
    Here Dk_i is the degree of i inside its own cluster and
    C_k = sum_{s,t in k} W_st^2 / (Dk_s Dk_t).
    """
    lab = np.asarray(labels, dtype=np.int64)
    if lab.shape != (W.n,):
        raise SpectralError("labels do not match the affinity")
    ks = np.unique(lab)
    if len(ks) < 2:
        raise SpectralError("need at least two groups")
    g = np.searchsorted(ks, lab)
    K, N = len(ks), W.n
    M = W.matrix.tocoo()
    same = g[M.row] == g[M.col]
    Dk = np.bincount(M.row[same], weights=M.data[same], minlength=N)
    if np.any(Dk <= 0):
        raise SpectralError("a point has no neighbour inside its own cluster")
    cross = np.bincount(M.row[~same], weights=M.data[~same], minlength=N)
    q = M.data ** 2 / (Dk[M.row] * Dk[M.col])
    Q = np.zeros((K, K))
    np.add.at(Q, (g[M.row], g[M.col]), q)
    C = np.diag(Q).copy()
    nu1 = float(max(Q[k, l] for k in range(K) for l in range(K) if k != l))
    nu2 = float(np.max(cross / Dk * np.sqrt(C[g])))
    theta, zeta = 1.0, np.inf
    for k in range(K):
        idx = np.flatnonzero(g == k)
        theta = max(theta, float(Dk[idx].max() / Dk[idx].min()))
        Wk = W.subgraph(idx)
        if extract_components(Wk).n_clusters != 1:
            raise SpectralError(f"within-cluster block {int(ks[k])} is disconnected")
        if len(idx) == 1:
            raise SpectralError(f"cluster {int(ks[k])} has a single point")
        lam2 = top_eigenvalues(normalized_affinity(Wk), 2)[1]
        zeta = min(zeta, 1.0 - float(lam2))
    bound = 8 * theta * zeta ** -2 * (K ** 2 * nu1 + K * nu2 ** 2) * N
    _, lam, _, V = spectral_embedding(W, K)
    lhs = 0.0
    for k in range(K):
        Vk = V[g == k]
        m = Vk.sum(axis=0)
        r = m / np.linalg.norm(m)
        lhs += float(((Vk - r) ** 2).sum())
    return NjwDiagnostics(float(zeta), nu1, nu2, theta, float(bound), lhs, K, N, lam)
