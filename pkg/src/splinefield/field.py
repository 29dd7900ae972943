"""Distance, gradient, projection, and phase queries against quadratic splines.

All queries are exact: per segment the closest point comes from the real
roots of a cubic orthogonality condition (plus the segment endpoints), and
the reported minimum is the true minimum over segments.  Ties between
equidistant segments resolve to the lowest index so results are
reproducible.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .cubic import cubic_coefficients, solve_cubic_in_unit_interval
from .errors import DomainError
from .spline import QuadraticSpline

# Distances below ON_CURVE_REL * scale report a zero gradient (the gradient
# is undefined on the curve itself).
ON_CURVE_REL = 1e-9
# Segments or union members within this absolute distance of the minimum are
# treated as tied; the lowest index wins.
TIE_TOL = 1e-12


@dataclass(frozen=True)
class FieldQuery:
    """Result of one distance query.

    Attributes:
        distance: Euclidean distance to the closest point on the chain.
        gradient: unit vector from the chain toward the query point, or the
            zero vector for on-curve queries.
        projection: closest point on the chain.
        segment_index: 0-based segment holding the closest point.
        t_local: local parameter of the closest point in [0, 1].
        phase: normalized progress (segment_index + t_local) / N in [0, 1].
    """

    distance: float
    gradient: np.ndarray
    projection: np.ndarray
    segment_index: int
    t_local: float
    phase: float


class UnionField:
    """Several splines queried as the pointwise minimum of their fields."""

    def __init__(self, members):
        members = list(members)
        if not members:
            raise DomainError("union field needs at least one member")
        dims = {m.dim for m in members}
        if len(dims) != 1:
            raise DomainError(f"members disagree on dimension: {sorted(dims)}")
        self.members = members
        self.dim = members[0].dim
        self.scale = max(m.scale for m in members)
        self.metadata: dict = {}

    def bounding_box(self, margin: float = 0.0):
        los, his = zip(*(m.bounding_box() for m in self.members))
        lo = np.min(los, axis=0)
        hi = np.max(his, axis=0)
        pad = margin * (hi - lo)
        return lo - pad, hi + pad


def _worker_count() -> int:
    raw = os.environ.get("SPLINEFIELD_THREADS", "").strip()
    if not raw:
        return 1
    n = int(raw)
    if n == 0:
        return os.cpu_count() or 1
    return max(1, n)


def query_arrays(spline: QuadraticSpline, points, backend: str | None = None):
    """Vectorized query: returns (distance, gradient, projection, segment, t_local, phase).

    Honors SPLINEFIELD_THREADS by splitting the points across a thread pool;
    chunking never changes results because the kernel is element-wise.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != spline.dim:
        raise DomainError(f"points must have shape (K, {spline.dim}), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise DomainError("query points must be finite")
    kernel = _kernels.get_backend(backend)
    eps_on = ON_CURVE_REL * spline.scale
    workers = _worker_count()
    if workers > 1 and pts.shape[0] >= 4 * workers:
        chunks = np.array_split(np.arange(pts.shape[0]), workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(
                    lambda idx: kernel.batch_query_arrays(
                        spline.control_points, pts[idx], eps_on, TIE_TOL
                    ),
                    chunks,
                )
            )
        dist, grad, proj, seg, t_local = (
            np.concatenate([p[j] for p in parts]) for j in range(5)
        )
    else:
        dist, grad, proj, seg, t_local = kernel.batch_query_arrays(
            spline.control_points, pts, eps_on, TIE_TOL
        )
    phase = (seg + t_local) / spline.n_segments
    return dist, grad, proj, seg, t_local, phase


def query(spline: QuadraticSpline, x, backend: str | None = None) -> FieldQuery:
    """Distance-field query for a single point."""
    x = np.asarray(x, dtype=float)
    dist, grad, proj, seg, t_local, phase = query_arrays(spline, x[None, :], backend)
    return FieldQuery(
        distance=float(dist[0]),
        gradient=grad[0],
        projection=proj[0],
        segment_index=int(seg[0]),
        t_local=float(t_local[0]),
        phase=float(phase[0]),
    )


def batch_query(spline: QuadraticSpline, points, backend: str | None = None) -> list[FieldQuery]:
    """Element-wise queries for a (K, D) batch, in input order."""
    dist, grad, proj, seg, t_local, phase = query_arrays(spline, points, backend)
    return [
        FieldQuery(
            distance=float(dist[k]),
            gradient=grad[k],
            projection=proj[k],
            segment_index=int(seg[k]),
            t_local=float(t_local[k]),
            phase=float(phase[k]),
        )
        for k in range(len(dist))
    ]


def segment_distance(segment, x) -> tuple[float, float]:
    """Minimum distance from x to one quadratic segment and its parameter.

    Evaluates every interior root of the orthogonality cubic plus both
    endpoints; scalar reference used by tests and by the union of the
    public API with single segments.
    """
    if hasattr(segment, "w1"):
        ctrl = np.stack([segment.w1, segment.w2, segment.w3])
    else:
        ctrl = np.asarray(segment, dtype=float)
    x = np.asarray(x, dtype=float)
    coeffs = cubic_coefficients(ctrl, x)
    candidates = solve_cubic_in_unit_interval(coeffs) + [0.0, 1.0]
    best_d = np.inf
    best_t = 0.0
    for t in candidates:
        u = 1.0 - t
        pos = u * u * ctrl[0] + 2.0 * u * t * ctrl[1] + t * t * ctrl[2]
        d = float(np.linalg.norm(pos - x))
        if d < best_d:
            best_d = d
            best_t = t
    return best_d, best_t


def union_query(field: UnionField, x, backend: str | None = None) -> tuple[FieldQuery, int]:
    """Query every member; return the closest member's result and its index.

    The union distance is exactly the minimum of the member distances;
    members tied within TIE_TOL resolve to the lowest index.
    """
    results = [query(m, x, backend) for m in field.members]
    dmin = min(r.distance for r in results)
    for idx, r in enumerate(results):
        if r.distance <= dmin + TIE_TOL:
            return r, idx
    return results[0], 0  # unreachable


def union_query_arrays(field: UnionField, points, backend: str | None = None):
    """Vectorized union query: member-min per point, lowest index on ties.

    Returns (distance, gradient, projection, segment, t_local, phase,
    member_index).
    """
    per_member = [query_arrays(m, points, backend) for m in field.members]
    dists = np.stack([r[0] for r in per_member])          # (M, K)
    d_min = dists.min(axis=0)
    member = np.argmax(dists <= (d_min[None, :] + TIE_TOL), axis=0)
    rows = np.arange(dists.shape[1])
    picked = [np.stack([r[j] for r in per_member])[member, rows] for j in range(6)]
    return (*picked, member.astype(np.int64))


def numerical_baseline_query(
    spline: QuadraticSpline, x, n_samples: int
) -> tuple[float, np.ndarray]:
    """Nearest-neighbour distance over uniform samples of the chain.

    The discretized alternative to the analytic query: its gradient snaps to
    the sampled points and is generally not perpendicular to the curve.
    """
    if n_samples < 2:
        raise DomainError(f"need at least 2 samples, got {n_samples}")
    x = np.asarray(x, dtype=float)
    s = np.linspace(0.0, float(spline.n_segments), n_samples)
    samples = _evaluate_batch(spline, s)
    deltas = x[None, :] - samples
    d2 = np.einsum("kd,kd->k", deltas, deltas)
    idx = int(np.argmin(d2))
    distance = float(np.sqrt(d2[idx]))
    if distance > 0.0:
        gradient = deltas[idx] / distance
    else:
        gradient = np.zeros_like(x)
    return distance, gradient


def _evaluate_batch(spline: QuadraticSpline, s: np.ndarray) -> np.ndarray:
    idx = np.clip(np.floor(s).astype(int), 0, spline.n_segments - 1)
    t = (s - idx)[:, None]
    u = 1.0 - t
    ctrl = spline.control_points
    return u * u * ctrl[idx, 0] + 2.0 * u * t * ctrl[idx, 1] + t * t * ctrl[idx, 2]
