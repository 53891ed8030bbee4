"""Backend selection for the hot kernels.

The compiled ``_core`` extension is used when it imports; otherwise, or when
``MIXCLUST_PURE=1`` is set, the numpy implementations in ``_fallback`` are
used. Both produce identical results.
"""
import os

from . import _fallback

backend = _fallback
BACKEND_NAME = "numpy"

if os.environ.get("MIXCLUST_PURE") != "1":
    try:
        from . import _core as backend  # noqa: F811
        BACKEND_NAME = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        pass


def get_backend(name=None):
    """Return the kernel module named ``"cython"`` or ``"numpy"`` (default: active one)."""
    if name is None:
        return backend
    if name == "numpy":
        return _fallback
    if name == "cython":
        from . import _core
        return _core
    raise ValueError(f"unknown backend {name!r}")
