"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; the NumPy
backend is always available.  Set SPLINEFIELD_BACKEND=numpy|compiled to
force one (useful for the backend benchmark).
"""

from __future__ import annotations

import os

import numpy as np

from . import numpy_backend

try:
    from . import _cyquery
except ImportError:  # extension not built on this platform
    _cyquery = None


def _compiled_batch_query_arrays(ctrl, pts, eps_on, tie_tol):
    ctrl = np.ascontiguousarray(ctrl, dtype=float)
    pts = np.ascontiguousarray(pts, dtype=float)
    k, dim = pts.shape
    dist = np.empty(k)
    grad = np.empty((k, dim))
    proj = np.empty((k, dim))
    seg = np.empty(k, dtype=np.int64)
    t_local = np.empty(k)
    _cyquery.batch_query(ctrl, pts, eps_on, tie_tol, dist, grad, proj, seg, t_local)
    return dist, grad, proj, seg, t_local


class _Backend:
    def __init__(self, name, fn):
        self.name = name
        self.batch_query_arrays = fn


_BACKENDS = {"numpy": _Backend("numpy", numpy_backend.batch_query_arrays)}
if _cyquery is not None:
    _BACKENDS["compiled"] = _Backend("compiled", _compiled_batch_query_arrays)


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def get_backend(name: str | None = None) -> _Backend:
    """Resolve a backend by name, the environment override, or availability."""
    if name is None:
        name = os.environ.get("SPLINEFIELD_BACKEND", "").strip() or None
    if name is None or name == "auto":
        name = "compiled" if "compiled" in _BACKENDS else "numpy"
    if name not in _BACKENDS:
        raise ValueError(
            f"unknown or unavailable backend {name!r}; available: {available_backends()}"
        )
    return _BACKENDS[name]


def active_backend_name() -> str:
    return get_backend().name
