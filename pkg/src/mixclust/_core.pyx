# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the hot loops.

Every routine here has a numpy twin in ``_fallback.py`` with the same
signature and bit-identical results. Distances are accumulated coordinate by
coordinate (``acc += t * t``) and compiled without FMA contraction so that the
two backends agree exactly, which the equivalence tests rely on.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY
from libcpp.vector cimport vector

cnp.import_array()


cdef inline double _dist(const double[:, ::1] X, Py_ssize_t i, Py_ssize_t j, Py_ssize_t D) noexcept nogil:
    cdef double acc = 0.0, t
    cdef Py_ssize_t k
    for k in range(D):
        t = X[i, k] - X[j, k]
        acc += t * t
    return sqrt(acc)


cdef inline Py_ssize_t _bsearch(const long long[::1] keys, long long key) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = keys.shape[0] - 1, mid
    while lo <= hi:
        mid = (lo + hi) >> 1
        if keys[mid] == key:
            return mid
        elif keys[mid] < key:
            lo = mid + 1
        else:
            hi = mid - 1
    return -1


def radius_pairs_brute(const double[:, ::1] X, double r, Py_ssize_t row_start, Py_ssize_t row_end):
    """Pairs (i, j), i < j, i in [row_start, row_end), with distance <= r."""
    cdef Py_ssize_t N = X.shape[0], D = X.shape[1], i, j
    cdef double d
    cdef vector[long long] vi, vj
    cdef vector[double] vd
    with nogil:
        for i in range(row_start, row_end):
            for j in range(i + 1, N):
                d = _dist(X, i, j, D)
                if d <= r:
                    vi.push_back(i)
                    vj.push_back(j)
                    vd.push_back(d)
    return _pack(vi, vj, vd)


def radius_pairs_grid(const double[:, ::1] X, double r,
                      const long long[:, ::1] cells, const long long[::1] dims,
                      const long long[::1] strides, const long long[::1] order,
                      const long long[::1] ukeys, const long long[::1] starts,
                      const long long[::1] counts, const long long[:, ::1] offsets,
                      Py_ssize_t row_start, Py_ssize_t row_end):
    """Grid version of ``radius_pairs_brute``; candidates come from the 3^D adjacent cells."""
    cdef Py_ssize_t D = X.shape[1], n_off = offsets.shape[0]
    cdef Py_ssize_t i, o, k, m, pos, j
    cdef long long key, c
    cdef bint inside
    cdef double d
    cdef vector[long long] vi, vj
    cdef vector[double] vd
    with nogil:
        for i in range(row_start, row_end):
            for o in range(n_off):
                key = 0
                inside = True
                for k in range(D):
                    c = cells[i, k] + offsets[o, k]
                    if c < 0 or c >= dims[k]:
                        inside = False
                        break
                    key += c * strides[k]
                if not inside:
                    continue
                pos = _bsearch(ukeys, key)
                if pos < 0:
                    continue
                for m in range(starts[pos], starts[pos] + counts[pos]):
                    j = order[m]
                    if j <= i:
                        continue
                    d = _dist(X, i, j, D)
                    if d <= r:
                        vi.push_back(i)
                        vj.push_back(j)
                        vd.push_back(d)
    return _pack(vi, vj, vd)


cdef _pack(vector[long long]& vi, vector[long long]& vj, vector[double]& vd):
    cdef Py_ssize_t n = vi.size(), t
    I = np.empty(n, dtype=np.int64)
    J = np.empty(n, dtype=np.int64)
    W = np.empty(n, dtype=np.float64)
    cdef long long[::1] I_ = I
    cdef long long[::1] J_ = J
    cdef double[::1] W_ = W
    for t in range(n):
        I_[t] = vi[t]
        J_[t] = vj[t]
        W_[t] = vd[t]
    return I, J, W


def knn_brute(const double[:, ::1] X, Py_ssize_t ell, Py_ssize_t row_start, Py_ssize_t row_end):
    """ell nearest other points per row, sorted by (distance, index)."""
    cdef Py_ssize_t N = X.shape[0], D = X.shape[1], i, j, p, q, rows = row_end - row_start
    cdef double d
    idx = np.empty((rows, ell), dtype=np.int64)
    dst = np.empty((rows, ell), dtype=np.float64)
    cdef long long[:, ::1] idx_ = idx
    cdef double[:, ::1] dst_ = dst
    cdef Py_ssize_t filled
    with nogil:
        for p in range(rows):
            i = row_start + p
            filled = 0
            for j in range(N):
                if j == i:
                    continue
                d = _dist(X, i, j, D)
                if filled == ell and d >= dst_[p, ell - 1]:
                    continue
                # j increases, so equal distances keep the earlier index first
                q = filled if filled < ell else ell - 1
                while q > 0 and dst_[p, q - 1] > d:
                    dst_[p, q] = dst_[p, q - 1]
                    idx_[p, q] = idx_[p, q - 1]
                    q -= 1
                dst_[p, q] = d
                idx_[p, q] = j
                if filled < ell:
                    filled += 1
    return idx, dst


cdef inline long long _find(long long[::1] parent, long long x) noexcept nogil:
    cdef long long root = x, nxt
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


def union_find_roots(Py_ssize_t n, const long long[::1] I, const long long[::1] J):
    """Root of every node after uniting all (I[t], J[t]); union by rank, path compression."""
    parent = np.arange(n, dtype=np.int64)
    rank = np.zeros(n, dtype=np.int64)
    cdef long long[::1] p = parent
    cdef long long[::1] rk = rank
    cdef Py_ssize_t t, m = I.shape[0], x
    cdef long long a, b
    with nogil:
        for t in range(m):
            a = _find(p, I[t])
            b = _find(p, J[t])
            if a == b:
                continue
            if rk[a] < rk[b]:
                a, b = b, a
            p[b] = a
            if rk[a] == rk[b]:
                rk[a] += 1
        for x in range(n):
            _find(p, x)
    return parent


def prim_mst(const double[:, ::1] X):
    """Minimum spanning tree of the complete Euclidean graph, O(N^2) time, O(N) memory.

    Returns (I, J, dist) for the N-1 tree edges in insertion order; ties go to
    the smaller vertex index.
    """
    cdef Py_ssize_t N = X.shape[0], D = X.shape[1], step, v, best_v, cur
    cdef double d, best_d
    I = np.empty(max(N - 1, 0), dtype=np.int64)
    J = np.empty(max(N - 1, 0), dtype=np.int64)
    W = np.empty(max(N - 1, 0), dtype=np.float64)
    if N <= 1:
        return I, J, W
    cdef long long[::1] I_ = I
    cdef long long[::1] J_ = J
    cdef double[::1] W_ = W
    best = np.full(N, INFINITY)
    src = np.zeros(N, dtype=np.int64)
    used = np.zeros(N, dtype=np.uint8)
    cdef double[::1] best_ = best
    cdef long long[::1] src_ = src
    cdef unsigned char[::1] used_ = used
    with nogil:
        cur = 0
        used_[0] = 1
        for step in range(N - 1):
            best_v = -1
            best_d = INFINITY
            for v in range(N):
                if used_[v]:
                    continue
                d = _dist(X, cur, v, D)
                if d < best_[v]:
                    best_[v] = d
                    src_[v] = cur
                if best_[v] < best_d:
                    best_d = best_[v]
                    best_v = v
            used_[best_v] = 1
            I_[step] = src_[best_v]
            J_[step] = best_v
            W_[step] = best_d
            cur = best_v
    return I, J, W


def cheeger_enumerate(const double[:, ::1] W):
    """Exact min over nonempty I with |I| <= N/2 of cut(I) / vol(I), by Gray-code enumeration.

    Returns (h, mask) with mask the bit pattern of a minimizer.
    """
    cdef Py_ssize_t N = W.shape[0], v, j
    cdef unsigned long long code, gray, prev = 0, diff, total = 1ULL << N, best_mask = 0
    cdef double cut = 0.0, vol = 0.0, best = INFINITY, ratio
    cdef Py_ssize_t size = 0
    deg = np.asarray(W).sum(axis=1)
    s = np.zeros(N)
    cdef double[::1] deg_ = deg
    cdef double[::1] s_ = s
    with nogil:
        for code in range(1, total):
            gray = code ^ (code >> 1)
            diff = gray ^ prev
            v = 0
            while (diff >> v) != 1:
                v += 1
            if gray & diff:
                # v enters I
                cut += deg_[v] - 2.0 * s_[v]
                vol += deg_[v]
                size += 1
                for j in range(N):
                    s_[j] += W[v, j]
            else:
                for j in range(N):
                    s_[j] -= W[v, j]
                cut -= deg_[v] - 2.0 * s_[v]
                vol -= deg_[v]
                size -= 1
            prev = gray
            if 2 * size <= N and size > 0:
                if vol > 0.0:
                    ratio = cut / vol
                else:
                    ratio = 0.0
                if ratio < best:
                    best = ratio
                    best_mask = gray
    return best, best_mask
