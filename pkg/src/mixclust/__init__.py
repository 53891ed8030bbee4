"""Clustering of points sampled near low-dimensional surfaces."""
from ._kernels import BACKEND_NAME
from .cluster_cc import Partition, cluster_cc, extract_components
from .cluster_slink import Dendrogram, single_linkage
from .cluster_spectral import estimate_k, njw_diagnostics, spectral_cluster
from .errors import (EvaluationError, GeometryError, GraphError, MixclustError, SamplingError,
                     SchemaError, SpectralError)
from .evaluation import (cheeger_bruteforce, epsilon_threshold, match_accuracy, sampling_condition,
                         separation_sweep)
from .geometry import (AffinePatch, CircleArc, ClusterSpec, Point, PointCloud, Polyline, SceneSpec,
                       Segment, Sphere, min_separation, sample_scene)
from .nngraph import Kernel, build_affinity, build_affinity_local, local_scales
from .robust import RobustParams, cluster_cc_robust, robust_scale, spectral_cluster_robust

__version__ = "0.1.0"
SCHEMA_VERSION = 1

__all__ = [
    "BACKEND_NAME", "SCHEMA_VERSION", "__version__",
    "AffinePatch", "CircleArc", "ClusterSpec", "Dendrogram", "Kernel", "Partition", "Point",
    "PointCloud", "Polyline", "RobustParams", "SceneSpec", "Segment", "Sphere",
    "EvaluationError", "GeometryError", "GraphError", "MixclustError", "SamplingError",
    "SchemaError", "SpectralError",
    "build_affinity", "build_affinity_local", "cheeger_bruteforce", "cluster_cc",
    "cluster_cc_robust", "epsilon_threshold", "robust_scale", "estimate_k", "extract_components", "local_scales",
    "match_accuracy", "min_separation", "njw_diagnostics", "sample_scene", "sampling_condition",
    "separation_sweep", "single_linkage", "spectral_cluster", "spectral_cluster_robust",
]
