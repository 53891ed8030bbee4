"""Command line front end: ``mixclust generate | cluster | sweep``.

Exit codes: 0 success, 1 other library error, 2 usage, 3 schema, 4 geometry,
5 sampling, 6 graph, 7 spectral, 8 evaluation.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import SCHEMA_VERSION, __version__
from . import io as mio
from ._kernels import BACKEND_NAME
from .cluster_cc import Partition, cluster_cc, extract_components
from .cluster_slink import single_linkage
from .cluster_spectral import estimate_k, normalized_affinity, spectral_cluster_affinity
from .errors import GraphError, MixclustError, SchemaError
from .evaluation import epsilon_threshold, match_accuracy, separation_sweep
from .geometry import parallel_segments_scene, sample_scene
from .nngraph import Kernel, build_affinity, build_affinity_local, local_scales
from .robust import RobustParams, degree_filter

DEFAULT_K_MAX = 10


class _Timer:
    def __init__(self):
        self.stages = {}

    def __call__(self, name):
        timer = self

        class _Ctx:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                timer.stages[name] = timer.stages.get(name, 0.0) + time.perf_counter() - self.t0

        return _Ctx()


def _write(path, text):
    with open(path, "w") as fh:
        fh.write(text)


def _scale_args(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--eps", type=float, help="fixed scale")
    g.add_argument("--ell", type=int, help="local scaling with the ell-th nearest neighbour")
    g.add_argument("--auto-eps", action="store_true",
                   help="eps = 2 x epsilon_threshold of the scene (needs --scene)")


def build_parser():
    p = argparse.ArgumentParser(prog="mixclust", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version",
                   version=f"mixclust {__version__} (schema {SCHEMA_VERSION}, backend {BACKEND_NAME})")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a point cloud from a scene file")
    g.add_argument("--scene", required=True)
    g.add_argument("--seed", type=int, help="override the scene seed")
    g.add_argument("--out", required=True, help="output CSV path")

    c = sub.add_parser("cluster", help="cluster a point cloud")
    c.add_argument("--scene", help="scene file; used for --auto-eps and to sample when --cloud is absent")
    c.add_argument("--cloud", help="point cloud CSV")
    c.add_argument("--algo", choices=("cc", "spectral", "slink"), default="cc")
    _scale_args(c)
    c.add_argument("--kernel", default="indicator", help="indicator[:omega], gaussian or table:s,v;...")
    c.add_argument("--k", default=None, help="number of clusters for spectral, integer or 'auto'")
    c.add_argument("--k-max", type=int, default=DEFAULT_K_MAX, help="search limit for --k auto")
    c.add_argument("--robust-omega", type=float, default=None,
                   help="enable the degree filter with this omega_N (0 means sqrt(log N))")
    c.add_argument("--seed", type=int, help="override the scene seed")
    c.add_argument("--out", required=True, help="output directory")

    s = sub.add_parser("sweep", help="recovery rate over a grid of separations")
    s.add_argument("--deltas", required=True, help="comma separated separations")
    s.add_argument("--trials", type=int, default=10)
    s.add_argument("--n-points", default="2000,2000", help="comma separated cluster sizes")
    s.add_argument("--tau", type=float, default=0.01)
    s.add_argument("--algo", choices=("cc", "spectral", "slink"), default="cc")
    _scale_args(s)
    s.add_argument("--kernel", default="indicator")
    s.add_argument("--seed", type=int, default=0, help="first seed")
    s.add_argument("--out", required=True, help="output directory")
    return p


def cmd_generate(args):
    scene = mio.read_scene(args.scene)
    measured = scene.validate_separation()
    seed = scene.seed if args.seed is None else args.seed
    cloud = sample_scene(scene, seed)
    mio.write_cloud(cloud, args.out)
    prov = mio.provenance(scene, seed, __version__)
    prov["n_points"] = len(cloud)
    prov["min_separation"] = None if math.isinf(measured) else float(measured)
    mio.write_json(prov, str(args.out) + ".provenance.json")
    return 0


def _resolve_scale(args, scene, points):
    if args.auto_eps:
        if scene is None:
            raise SchemaError("--auto-eps needs --scene")
        return "eps", 2.0 * epsilon_threshold(scene).scene_max
    if args.eps is not None:
        if not args.eps > 0:
            raise GraphError("--eps must be positive")
        return "eps", args.eps
    if args.ell is not None:
        return "ell", local_scales(points, args.ell)
    raise SchemaError("one of --eps, --ell or --auto-eps is required")


def _affinity(points, kernel, mode, value):
    if mode == "eps":
        return build_affinity(points, kernel, value)
    return build_affinity_local(points, kernel, value)


def _lift(n, kept, part):
    lab = np.zeros(n, dtype=np.int64)
    lab[kept] = part.labels
    return Partition(lab)


def cmd_cluster(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    timer = _Timer()
    scene = mio.read_scene(args.scene) if args.scene else None
    seed = None
    with timer("load"):
        if args.cloud:
            cloud = mio.read_cloud(args.cloud)
        elif scene is not None:
            seed = scene.seed if args.seed is None else args.seed
            cloud = sample_scene(scene, seed)
        else:
            raise SchemaError("need --cloud or --scene")
    X, truth = cloud.points, cloud.labels
    N = len(X)
    kernel = Kernel.parse(args.kernel)
    with timer("scale"):
        mode, value = _resolve_scale(args, scene, X)
    report = {"algorithm": args.algo, "kernel": kernel.describe(), "n_points": N}
    if mode == "eps":
        report["eps"] = value
    else:
        report["ell"] = args.ell

    extra = {}
    if args.algo == "slink":
        if mode != "eps" or kernel.kind != "indicator":
            raise GraphError("slink needs a fixed eps and the indicator kernel")
        if args.robust_omega is not None:
            raise GraphError("the degree filter is not defined for slink")
        with timer("cluster"):
            part, dend = single_linkage(X, value * kernel.omega)
        extra["dendrogram.csv"] = dend.to_csv()
    else:
        with timer("affinity"):
            W = _affinity(X, kernel, mode, value)
        kept = np.arange(N)
        if args.robust_omega is not None:
            eps_for_filter = value if mode == "eps" else float(np.median(value.scales))
            omega = None if args.robust_omega == 0 else args.robust_omega
            params = RobustParams.for_data(N, eps_for_filter, X.shape[1], omega)
            with timer("filter"):
                filt = degree_filter(W, params)
            kept = filt.kept
            W = W.subgraph(kept)
            extra["filter.txt"] = filt.to_text()
            report["filter_threshold"] = filt.threshold
            report["n_discarded"] = len(filt.discarded)
        if args.algo == "cc":
            if not kernel.compact:
                raise GraphError("cc needs a compactly supported kernel")
            with timer("cluster"):
                part = _lift(N, kept, extract_components(W))
        else:
            if args.k is None:
                raise SchemaError("spectral clustering needs --k (integer or 'auto')")
            if args.k == "auto":
                with timer("estimate_k"):
                    est = estimate_k(normalized_affinity(W), min(args.k_max, W.n - 1))
                K = est.k
                extra["eigengaps.txt"] = (
                    f"chosen_k: {K}\n"
                    + "eigenvalues: " + " ".join(mio.fmt(v) for v in est.eigenvalues) + "\n"
                    + "gaps: " + " ".join(mio.fmt(v) for v in est.gaps) + "\n")
            else:
                try:
                    K = int(args.k)
                except ValueError:
                    raise SchemaError(f"--k must be an integer or 'auto', got {args.k!r}") from None
            with timer("cluster"):
                sp, state = spectral_cluster_affinity(W, K)
            part = _lift(N, kept, sp)
            extra["eigenvalues.txt"] = "\n".join(mio.fmt(v) for v in state.eigenvalues) + "\n"
            report["K"] = K

    part.write_csv(out / "labels.csv")
    report["n_clusters"] = part.n_clusters
    report["n_outliers"] = part.n_outliers
    if np.any(truth != 0):
        score = match_accuracy(part, truth)
        report.update(exact_match=score.exact_match, error_rate=score.error_rate)
        if score.outlier_precision is not None:
            report.update(outlier_precision=score.outlier_precision,
                          outlier_recall=score.outlier_recall)
    _write(out / "report.txt", "".join(f"{k}: {v if isinstance(v, str) else mio.fmt(v)}\n"
                                       for k, v in report.items()))
    for name, text in extra.items():
        _write(out / name, text)
    manifest = {"version": __version__, "schema": SCHEMA_VERSION,
                "command": "cluster", "algorithm": args.algo, "kernel": kernel.describe(),
                "scene": args.scene, "cloud": args.cloud, "seed": seed,
                "scene_hash": mio.scene_hash(scene) if scene is not None else None,
                "outputs": sorted(["labels.csv", "report.txt", *extra])}
    mio.write_json(manifest, out / "manifest.json")
    # timings are wall-clock and kept apart from the reproducible outputs
    mio.write_json({"backend": BACKEND_NAME, "threads": os.environ.get("MIXCLUST_NUM_THREADS", "1"),
                    "seconds": timer.stages}, out / "timings.json")
    return 0


def _sweep_algorithm(args):
    kernel = Kernel.parse(args.kernel)

    def run(points, scene):
        if args.auto_eps:
            eps = 2.0 * epsilon_threshold(scene).scene_max
        elif args.eps is not None:
            eps = args.eps
        else:
            eps = None
        if args.algo == "slink":
            if eps is None:
                raise GraphError("slink needs a fixed eps")
            return single_linkage(points, eps * kernel.omega)[0]
        scales = local_scales(points, args.ell) if eps is None else None
        if args.algo == "cc":
            return cluster_cc(points, kernel, eps=eps, scales=scales)
        W = build_affinity(points, kernel, eps) if eps is not None else build_affinity_local(points, kernel, scales)
        return spectral_cluster_affinity(W, scene.K)[0]

    return run


def cmd_sweep(args):
    if not (args.auto_eps or args.eps is not None or args.ell is not None):
        raise SchemaError("one of --eps, --ell or --auto-eps is required")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        deltas = [float(x) for x in args.deltas.split(",")]
        sizes = tuple(int(x) for x in args.n_points.split(","))
    except ValueError:
        raise SchemaError("--deltas and --n-points must be comma separated numbers") from None

    def template(delta, seed):
        return parallel_segments_scene(delta, sizes, args.tau, seed=seed)

    res = separation_sweep(template, deltas, _sweep_algorithm(args), args.trials, seed0=args.seed)
    _write(out / "sweep.csv", res.to_csv())
    _write(out / "summary.txt", res.summary_text())
    mio.write_json({"version": __version__, "schema": SCHEMA_VERSION, "command": "sweep",
                    "deltas": deltas, "trials": args.trials, "n_points": list(sizes),
                    "tau": args.tau, "algorithm": args.algo, "first_seed": args.seed,
                    "outputs": ["summary.txt", "sweep.csv"]}, out / "manifest.json")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = {"generate": cmd_generate, "cluster": cmd_cluster, "sweep": cmd_sweep}[args.command]
    try:
        return handler(args)
    except MixclustError as exc:
        print(f"mixclust: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
