"""Scene files (YAML), point-cloud CSV and provenance sidecars."""
from __future__ import annotations

import hashlib
import json
import math

import numpy as np
import yaml

from .errors import SchemaError
from .geometry import ClusterSpec, PointCloud, SceneSpec, surface_from_dict

SCHEMA = 1
_SCENE_REQUIRED = ("schema", "ambient_dim", "clusters")
_CLUSTER_REQUIRED = ("surface", "n_points")


def _require(d, keys, where):
    if not isinstance(d, dict):
        raise SchemaError(f"{where}: expected a mapping")
    for k in keys:
        if k not in d:
            raise SchemaError(f"{where}: missing required field '{k}'")


def scene_to_dict(scene):
    d = {"schema": SCHEMA, "ambient_dim": scene.ambient_dim,
         "clusters": [{"surface": c.surface.to_dict(), "n_points": c.n_points, "tau": c.tau,
                       "density_ratio": c.density_ratio} for c in scene.clusters],
         "n_outliers": scene.n_outliers, "delta": scene.delta, "seed": scene.seed}
    if scene.outlier_delta is not None:
        d["outlier_delta"] = scene.outlier_delta
    return d


def scene_from_dict(d):
    _require(d, _SCENE_REQUIRED, "scene")
    if d["schema"] != SCHEMA:
        raise SchemaError(f"unsupported schema version {d['schema']!r} (expected {SCHEMA})")
    known = {"schema", "ambient_dim", "clusters", "n_outliers", "delta", "seed", "outlier_delta"}
    extra = set(d) - known
    if extra:
        raise SchemaError(f"scene: unknown fields {sorted(extra)}")
    if not isinstance(d["clusters"], list) or not d["clusters"]:
        raise SchemaError("scene: 'clusters' must be a nonempty list")
    clusters = []
    for k, c in enumerate(d["clusters"], 1):
        _require(c, _CLUSTER_REQUIRED, f"cluster {k}")
        _require(c["surface"], ("kind",), f"cluster {k} surface")
        clusters.append(ClusterSpec(surface_from_dict(c["surface"]), c["n_points"],
                                    float(c.get("tau", 0.0)), float(c.get("density_ratio", 1.0))))
    return SceneSpec(int(d["ambient_dim"]), clusters, int(d.get("n_outliers", 0)),
                     float(d.get("delta", 0.0)), int(d.get("seed", 0)), d.get("outlier_delta"))


def read_scene(path):
    try:
        with open(path) as fh:
            d = yaml.safe_load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read scene file {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise SchemaError(f"malformed scene file {path}: {exc}") from None
    return scene_from_dict(d)


def write_scene(scene, path):
    with open(path, "w") as fh:
        yaml.safe_dump(scene_to_dict(scene), fh, sort_keys=False)


def scene_hash(scene):
    """SHA-256 of the canonical JSON form of the scene."""
    blob = json.dumps(scene_to_dict(scene), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def cloud_to_csv(cloud):
    D = cloud.points.shape[1]
    lines = [",".join([f"x{i}" for i in range(D)] + ["label"])]
    for x, lab in zip(cloud.points.tolist(), cloud.labels.tolist()):
        lines.append(",".join(f"{v:.17g}" for v in x) + f",{lab}")
    return "\n".join(lines) + "\n"


def write_cloud(cloud, path):
    with open(path, "w") as fh:
        fh.write(cloud_to_csv(cloud))


def read_cloud(path):
    """Read a cloud CSV. A missing ``label`` column gives all-zero labels."""
    try:
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
    except OSError as exc:
        raise SchemaError(f"cannot read cloud file {path}: {exc}") from None
    except ValueError as exc:
        raise SchemaError(f"malformed cloud file {path}: {exc}") from None
    has_label = header[-1] == "label"
    D = len(header) - has_label
    if header[:D] != [f"x{i}" for i in range(D)]:
        raise SchemaError(f"cloud header must be x0,...,x{{D-1}}[,label], got {header}")
    if data.size == 0:
        data = np.empty((0, len(header)))
    if data.shape[1] != len(header):
        raise SchemaError("cloud rows do not match the header")
    labels = data[:, D].astype(np.int64) if has_label else np.zeros(len(data), np.int64)
    return PointCloud(data[:, :D], labels)


def provenance(scene, seed, version):
    return {"scene_hash": scene_hash(scene), "seed": int(seed), "version": version,
            "schema": SCHEMA}


def write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o).__name__}")


def read_labels(path):
    with open(path) as fh:
        if fh.readline().strip() != "label":
            raise SchemaError(f"{path}: expected header 'label'")
        return np.array([int(x) for x in fh.read().split()], dtype=np.int64)


def fmt(x):
    """12 significant digits, the report convention."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return "inf" if math.isinf(x) else f"{x:.12g}"


__all__ = ["SchemaError", "read_scene", "write_scene", "scene_from_dict",
           "scene_to_dict", "scene_hash", "read_cloud", "write_cloud", "cloud_to_csv",
           "provenance", "write_json", "read_labels", "fmt"]
