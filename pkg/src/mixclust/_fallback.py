"""Pure numpy versions of the compiled kernels in ``_core.pyx``.

Signatures and results match the compiled module exactly (the Cheeger
enumeration matches up to its final recomputation, done by the caller).
"""
import numpy as np


def _sqdist_block(A, B):
    # coordinate-ordered accumulation, identical to the compiled loop
    acc = np.zeros((A.shape[0], B.shape[0]))
    for k in range(A.shape[1]):
        t = A[:, k, None] - B[None, :, k]
        acc += t * t
    return acc


def _dist_block(A, B):
    return np.sqrt(_sqdist_block(A, B))


def _sorted_pairs(parts_i, parts_j, parts_d):
    if not parts_i:
        return (np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0))
    I = np.concatenate(parts_i).astype(np.int64)
    J = np.concatenate(parts_j).astype(np.int64)
    d = np.concatenate(parts_d)
    o = np.lexsort((J, I))
    return I[o], J[o], d[o]


def radius_pairs_brute(X, r, row_start, row_end, block=512):
    N = X.shape[0]
    pi, pj, pd = [], [], []
    for a in range(row_start, row_end, block):
        b = min(a + block, row_end)
        dist = _dist_block(X[a:b], X)
        rows = np.arange(a, b)[:, None]
        mask = (dist <= r) & (np.arange(N)[None, :] > rows)
        ii, jj = np.nonzero(mask)
        pi.append(ii + a)
        pj.append(jj)
        pd.append(dist[ii, jj])
    return _sorted_pairs(pi, pj, pd)


def radius_pairs_grid(X, r, cells, dims, strides, order, ukeys, starts, counts,
                      offsets, row_start, row_end):
    rows = np.arange(row_start, row_end)
    if rows.size == 0:
        return _sorted_pairs([], [], [])
    keys = cells @ strides
    lookup = {int(k): (int(s), int(c)) for k, s, c in zip(ukeys, starts, counts)}
    pi, pj, pd = [], [], []
    # group the requested rows by their own cell, then scan neighbour cells blockwise
    row_keys = keys[rows]
    uniq_rows, inv = np.unique(row_keys, return_inverse=True)
    for g, key in enumerate(uniq_rows):
        members_i = rows[inv == g]
        base = cells[members_i[0]]
        for off in offsets:
            c = base + off
            if np.any(c < 0) or np.any(c >= dims):
                continue
            hit = lookup.get(int(c @ strides))
            if hit is None:
                continue
            s, n = hit
            members_j = order[s:s + n]
            dist = _dist_block(X[members_i], X[members_j])
            mask = (dist <= r) & (members_j[None, :] > members_i[:, None])
            ii, jj = np.nonzero(mask)
            pi.append(members_i[ii])
            pj.append(members_j[jj])
            pd.append(dist[ii, jj])
    return _sorted_pairs(pi, pj, pd)


def knn_brute(X, ell, row_start, row_end, block=256):
    N = X.shape[0]
    rows = row_end - row_start
    idx = np.empty((rows, ell), dtype=np.int64)
    dst = np.empty((rows, ell))
    cols = np.arange(N)
    for a in range(row_start, row_end, block):
        b = min(a + block, row_end)
        dist = _dist_block(X[a:b], X)
        dist[np.arange(b - a), np.arange(a, b)] = np.inf
        # every candidate at or below the ell-th value, then an exact (distance, index) sort
        kth = np.partition(dist, ell - 1, axis=1)[:, ell - 1]
        for p in range(b - a):
            cand = cols[dist[p] <= kth[p]]
            o = np.lexsort((cand, dist[p, cand]))[:ell]
            idx[a - row_start + p] = cand[o]
            dst[a - row_start + p] = dist[p, cand[o]]
    return idx, dst


def union_find_roots(n, I, J):
    parent = np.arange(n, dtype=np.int64)
    rank = np.zeros(n, dtype=np.int64)

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for a, b in zip(I.tolist(), J.tolist()):
        a, b = find(a), find(b)
        if a == b:
            continue
        if rank[a] < rank[b]:
            a, b = b, a
        parent[b] = a
        if rank[a] == rank[b]:
            rank[a] += 1
    for x in range(n):
        find(x)
    return parent


def prim_mst(X):
    N = X.shape[0]
    I = np.empty(max(N - 1, 0), dtype=np.int64)
    J = np.empty(max(N - 1, 0), dtype=np.int64)
    W = np.empty(max(N - 1, 0))
    if N <= 1:
        return I, J, W
    best = np.full(N, np.inf)
    src = np.zeros(N, dtype=np.int64)
    used = np.zeros(N, dtype=bool)
    used[0] = True
    cur = 0
    for step in range(N - 1):
        d = _dist_block(X[cur:cur + 1], X)[0]
        upd = (~used) & (d < best)
        best[upd] = d[upd]
        src[upd] = cur
        cand = np.where(used, np.inf, best)
        v = int(np.argmin(cand))  # first minimum = smallest index
        used[v] = True
        I[step], J[step], W[step] = src[v], v, best[v]
        cur = v
    return I, J, W


def cheeger_enumerate(W, chunk=1 << 14):
    N = W.shape[0]
    deg = W.sum(axis=1)
    best, best_mask = np.inf, 0
    bits = (1 << np.arange(N, dtype=np.int64))
    for start in range(1, 1 << N, chunk):
        codes = np.arange(start, min(start + chunk, 1 << N), dtype=np.int64)
        X = ((codes[:, None] & bits[None, :]) != 0).astype(float)
        size = X.sum(axis=1)
        keep = (2 * size <= N)
        if not keep.any():
            continue
        X, codes = X[keep], codes[keep]
        vol = X @ deg
        cut = vol - np.einsum("ij,ij->i", X @ W, X)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(vol > 0, cut / vol, 0.0)
        k = int(np.argmin(ratio))
        if ratio[k] < best:
            best, best_mask = float(ratio[k]), int(codes[k])
    return best, best_mask
