import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "MIXCLUST_NUM_THREADS"


def num_threads():
    """Worker count from ``MIXCLUST_NUM_THREADS`` (default 1). Never affects results."""
    try:
        n = int(os.environ.get(THREADS_ENV, "1"))
    except ValueError:
        n = 1
    return max(1, n)


def chunk_bounds(n, n_chunks):
    n_chunks = max(1, min(n_chunks, n)) if n else 1
    edges = [round(i * n / n_chunks) for i in range(n_chunks + 1)]
    return [(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a] or [(0, 0)]


def ordered_map(fn, items, threads=None):
    """``map`` over a thread pool, results in input order."""
    items = list(items)
    threads = num_threads() if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
