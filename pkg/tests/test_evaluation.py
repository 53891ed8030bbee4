import math

import numpy as np
import pytest

from mixclust.cluster_cc import Partition, cluster_cc
from mixclust.errors import EvaluationError
from mixclust.evaluation import (cheeger_bruteforce, epsilon_threshold, match_accuracy,
                                 sampling_condition, separation_sweep)
from mixclust.geometry import (AffinePatch, ClusterSpec, Point, SceneSpec, Segment,
                               parallel_segments_scene)
from mixclust.nngraph import Kernel


def test_match_identity_and_swap():
    t = np.array([1, 1, 2, 2, 0])
    assert match_accuracy(t, t).exact_match
    r = match_accuracy(np.array([2, 2, 1, 1, 0]), t)
    assert r.exact_match and r.error_rate == 0


def test_one_flip():
    t = np.ones(10, dtype=int)
    p = t.copy()
    p[3] = 2
    assert match_accuracy(p, t).error_rate == pytest.approx(0.1)


def test_outlier_only_matches_outlier():
    # predicting cluster 1 as outliers costs the whole cluster
    r = match_accuracy(np.array([0, 0, 1, 1]), np.array([1, 1, 2, 2]))
    assert r.error_rate == pytest.approx(0.5)
    assert r.outlier_precision == 0 and r.outlier_recall == 1.0


def test_length_mismatch():
    with pytest.raises(EvaluationError):
        match_accuracy(np.ones(3), np.ones(4))


def test_large_label_sets_use_assignment(rng):
    t = rng.integers(1, 15, 300)
    perm = rng.permutation(np.arange(1, 15))
    p = perm[t - 1]
    assert match_accuracy(p, t).exact_match
    p[:5] = 99
    assert not match_accuracy(p, t).exact_match


def test_exhaustive_equals_assignment(rng):
    for _ in range(20):
        t = rng.integers(0, 6, 60)
        p = rng.integers(0, 7, 60)
        from mixclust import evaluation
        old = evaluation.EXHAUSTIVE_MAX
        a = match_accuracy(p, t).error_rate
        evaluation.EXHAUSTIVE_MAX = 0
        try:
            b = match_accuracy(p, t).error_rate
        finally:
            evaluation.EXHAUSTIVE_MAX = old
        assert a == pytest.approx(b, abs=1e-15)


def test_exact_requires_same_count():
    r = match_accuracy(np.array([1, 1, 1]), np.array([1, 1, 1]))
    assert r.exact_match and r.n_pred == 1


def test_threshold_examples():
    seg = SceneSpec(2, [ClusterSpec(Segment([0, 0.5], [1, 0.5]), 1000, 0.0)])
    assert epsilon_threshold(seg).scene_max == pytest.approx(math.log(1000) / 1000)
    pt = SceneSpec(2, [ClusterSpec(Point([0.5, 0.5]), 1000, 0.1)])
    assert epsilon_threshold(pt).scene_max == pytest.approx(0.1 * math.sqrt(math.log(1000) / 1000))
    patch = AffinePatch([0, 0, 0.5], [[1, 0, 0], [0, 1, 0]], [math.sqrt(0.5)] * 2)
    rep = epsilon_threshold(SceneSpec(3, [ClusterSpec(patch, 10_000, 0.01)]))
    assert rep.branch_intrinsic[0] == pytest.approx(0.03035, abs=1e-5)
    # 0.01^(1/3) (ln 1e4 / 1e4)^(1/3) = 0.020962, quoted as 0.0210
    assert rep.branch_ambient[0] == pytest.approx(0.0210, rel=5e-3)
    assert rep.branch_ambient[0] == pytest.approx(0.01 ** (1 / 3) * (math.log(1e4) / 1e4) ** (1 / 3))
    assert rep.scene_max == pytest.approx(0.03035, abs=1e-5)


def test_threshold_decreasing_in_n():
    vals = [epsilon_threshold(parallel_segments_scene(0.1, (n, n))).scene_max for n in (100, 1000, 10_000)]
    assert vals[0] > vals[1] > vals[2]


def test_sampling_condition_examples():
    seg = Segment([0, 0.5], [1, 0.5])
    s = SceneSpec(2, [ClusterSpec(seg, 2000, 0.0), ClusterSpec(Point([0.5, 0.1]), 8000, 0.0)],
                  delta=0.3)
    rep = sampling_condition(s)
    assert rep.right[0] == pytest.approx(100 * math.log(1e4)) and rep.satisfied[0]
    s = SceneSpec(2, [ClusterSpec(seg, 2000, 0.1), ClusterSpec(Point([0.5, 0.1]), 8000, 0.0)],
                  delta=0.3)
    assert sampling_condition(s).right[0] == pytest.approx(1e4 * 0.1 * math.log(1e4))
    assert not sampling_condition(s).satisfied[0]
    full = SceneSpec(2, [ClusterSpec(AffinePatch([0, 0], [[1, 0], [0, 1]], [1, 1]), 500)])
    assert not sampling_condition(full).satisfied[0]


def test_sampling_condition_monotone_in_nk():
    sat = [sampling_condition(parallel_segments_scene(0.1, (n, 5000), tau=0.0)).satisfied[0]
           for n in (10, 100, 1000, 5000)]
    assert sat == sorted(sat)


def test_cheeger_examples(backend):
    P = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0.]])
    assert cheeger_bruteforce(P, backend).h == pytest.approx(1.0)
    C = np.roll(np.eye(4), 1, axis=1)
    C = C + C.T
    assert cheeger_bruteforce(C, backend).h == pytest.approx(0.5)
    E = np.zeros((4, 4))
    E[0, 1] = E[1, 0] = E[2, 3] = E[3, 2] = 1
    r = cheeger_bruteforce(E, backend)
    assert r.h == 0 and not r.connected


def test_cheeger_too_large():
    with pytest.raises(EvaluationError):
        cheeger_bruteforce(np.ones((21, 21)) - np.eye(21))


def test_cheeger_backends_agree(rng):
    for _ in range(10):
        A = np.triu(rng.random((10, 10)), 1)
        A = A + A.T
        assert cheeger_bruteforce(A, "numpy").h == cheeger_bruteforce(A, "cython").h


def _cc_auto(points, scene):
    return cluster_cc(points, Kernel.indicator(), eps=2 * epsilon_threshold(scene).scene_max)


def _template(delta, seed):
    return parallel_segments_scene(delta, (400, 400), 0.01, seed=seed)


def test_sweep_large_delta_recovers():
    res = separation_sweep(_template, [0.3], _cc_auto, 3)
    assert res.summary()[0.3][0] == 1.0


def test_sweep_rejects_small_delta():
    with pytest.raises(EvaluationError):
        separation_sweep(_template, [0.0], _cc_auto, 2)
    with pytest.raises(Exception):
        separation_sweep(_template, [0.015], _cc_auto, 2)


def test_sweep_monotone_trend():
    res = separation_sweep(_template, [0.03, 0.05, 0.1, 0.2], _cc_auto, 4)
    assert res.is_monotone(slack=0.1)
    assert res.to_csv().splitlines()[0] == "delta,seed,exact,error_rate,runtime_ms"
