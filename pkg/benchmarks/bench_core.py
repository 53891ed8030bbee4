"""Compare the compiled kernels with their numpy twins.

    python benchmarks/bench_core.py [--repeat 3] [--scale 1.0]

Each row times one operation on both backends (best of ``--repeat``) and
checks that the outputs are identical.
"""
import argparse
import time

import numpy as np

from mixclust import _kernels
from mixclust.cluster_slink import mst_edges
from mixclust.cluster_cc import components_from_edges
from mixclust.evaluation import cheeger_bruteforce
from mixclust.nngraph import NeighborIndex, knn


def best_of(fn, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def same(a, b):
    if isinstance(a, tuple) or isinstance(a, list):
        return all(same(x, y) for x, y in zip(a, b))
    if hasattr(a, "labels"):
        return a == b
    if hasattr(a, "indices"):
        return np.array_equal(a.indices, b.indices) and np.array_equal(a.distances, b.distances)
    if hasattr(a, "h"):
        return a.h == b.h
    return np.array_equal(np.asarray(a), np.asarray(b))


def cases(scale):
    rng = np.random.default_rng(0)
    n = int(20_000 * scale)
    X2 = rng.random((n, 2))
    X8 = rng.random((int(3000 * scale), 8))
    Xm = rng.random((int(3000 * scale), 2))
    I = rng.integers(0, n, 4 * n)
    J = rng.integers(0, n, 4 * n)
    A = np.triu(rng.random((16, 16)), 1)
    A = A + A.T
    return [
        (f"grid range search  N={n} D=2", lambda b: NeighborIndex(X2, 0.01, b, force="grid").pairs()),
        (f"brute range search N={len(X8)} D=8", lambda b: NeighborIndex(X8, 0.5, b, force="brute").pairs()),
        (f"knn ell=10         N={len(Xm)}", lambda b: knn(Xm, 10, backend=b)),
        (f"union-find         N={n} E={4 * n}", lambda b: components_from_edges(n, I, J, b)),
        (f"prim MST           N={len(Xm)}", lambda b: mst_edges(Xm, b)),
        ("cheeger enumerate  N=16", lambda b: cheeger_bruteforce(A, b)),
    ]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--scale", type=float, default=1.0, help="multiply problem sizes")
    args = p.parse_args()
    try:
        _kernels.get_backend("cython")
    except ImportError:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    print(f"{'operation':<38}{'cython s':>11}{'numpy s':>11}{'speedup':>9}  identical")
    for name, fn in cases(args.scale):
        tc, oc = best_of(lambda: fn("cython"), args.repeat)
        tn, on = best_of(lambda: fn("numpy"), args.repeat)
        print(f"{name:<38}{tc:>11.4f}{tn:>11.4f}{tn / tc:>9.1f}  {same(oc, on)}")


if __name__ == "__main__":
    main()
