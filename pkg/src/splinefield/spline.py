"""C1-continuous chains of quadratic Bezier segments and their least-squares fit.

A chain of N quadratic segments has 3N control points, but position and
tangent continuity at the N-1 interior joints leave only N+2 free
D-dimensional weights (N+1 when the end of the chain is pinned to zero
velocity).  The free weights are, in order::

    [w1 of segment 0, w2 of segment 0, w3 of segment 0, w3 of segment 1, ...]

i.e. the first segment's three control points followed by each remaining
segment's endpoint.  Everything else is determined by the joint rules

    w1[i+1] = w3[i]
    w2[i+1] = 2*w3[i] - w2[i]
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateInputError,
    DomainError,
    RankDeficiencyError,
    UnderdeterminedError,
)

# T(t) = [1, t, t^2] times this matrix gives the quadratic Bernstein row.
BERNSTEIN_FROM_POWER = np.array(
    [
        [1.0, 0.0, 0.0],
        [-2.0, 2.0, 0.0],
        [1.0, -2.0, 1.0],
    ]
)


def bernstein_row(t: float) -> np.ndarray:
    """Quadratic Bernstein basis [(1-t)^2, 2(1-t)t, t^2] at local t in [0, 1]."""
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"local parameter {t} outside [0, 1]")
    u = 1.0 - t
    return np.array([u * u, 2.0 * u * t, t * t])


def bernstein_derivative_row(t: float) -> np.ndarray:
    """Derivative of the quadratic Bernstein basis at local t in [0, 1]."""
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"local parameter {t} outside [0, 1]")
    return np.array([-2.0 * (1.0 - t), 2.0 - 4.0 * t, 2.0 * t])


class Trajectory:
    """A demonstrated trajectory: M sampled positions, optionally timestamped.

    Args:
        points: (M, D) array of positions, M >= 3, all finite.
        timestamps: optional length-M non-decreasing array.  May contain
            repeated values but not be entirely constant.
    """

    def __init__(self, points, timestamps=None):
        points = np.asarray(points, dtype=float)
        if points.ndim != 2:
            raise DomainError(f"points must be 2-D (M, D), got shape {points.shape}")
        if points.shape[0] < 3:
            raise DomainError(f"need at least 3 samples, got {points.shape[0]}")
        if points.shape[1] < 1:
            raise DomainError("spatial dimension must be >= 1")
        if not np.all(np.isfinite(points)):
            bad = int(np.flatnonzero(~np.isfinite(points).all(axis=1))[0])
            raise DomainError(f"non-finite position in row {bad}")
        self.points = points
        if timestamps is not None:
            timestamps = np.asarray(timestamps, dtype=float)
            if timestamps.shape != (points.shape[0],):
                raise DomainError(
                    f"timestamps shape {timestamps.shape} does not match M={points.shape[0]}"
                )
            if not np.all(np.isfinite(timestamps)):
                raise DomainError("non-finite timestamp")
            if np.any(np.diff(timestamps) < 0):
                raise DomainError("timestamps must be non-decreasing")
            if timestamps[0] == timestamps[-1]:
                raise DegenerateInputError("all timestamps are equal")
        self.timestamps = timestamps

    @property
    def n_samples(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class SegmentControl:
    """The three control points of one quadratic segment."""

    w1: np.ndarray
    w2: np.ndarray
    w3: np.ndarray


@dataclass(frozen=True)
class FitConfig:
    """Settings for fitting a quadratic spline to a trajectory."""

    n_segments: int
    ridge: float = 0.0
    terminal_zero_velocity: bool = False

    def __post_init__(self):
        if self.n_segments < 1:
            raise DomainError(f"n_segments must be >= 1, got {self.n_segments}")
        if not np.isfinite(self.ridge) or self.ridge < 0:
            raise DomainError(f"ridge must be finite and >= 0, got {self.ridge}")


class BasisSystem:
    """Constraint map from free weights to stacked control points.

    Attributes:
        constraint_map: (3N, n_free) matrix; any free-weight vector pushed
            through it satisfies the joint continuity rules.
        polynomial_coeffs: 3x3 matrix converting the power basis [1, t, t^2]
            to the quadratic Bernstein basis.
    """

    def __init__(self, n_segments: int, terminal_zero_velocity: bool, constraint_map: np.ndarray):
        self.n_segments = n_segments
        self.terminal_zero_velocity = terminal_zero_velocity
        self.constraint_map = constraint_map
        self.polynomial_coeffs = BERNSTEIN_FROM_POWER.copy()

    @property
    def n_free(self) -> int:
        return self.constraint_map.shape[1]


def n_free_weights(n_segments: int, terminal_zero_velocity: bool = False) -> int:
    """Free D-dimensional weights of an N-segment C1 chain."""
    return n_segments + 1 if terminal_zero_velocity else n_segments + 2


def build_constraint_map(n_segments: int, terminal_zero_velocity: bool = False) -> BasisSystem:
    """Assemble the (3N, n_free) map enforcing the joint continuity rules."""
    n = int(n_segments)
    if n < 1:
        raise DomainError(f"n_segments must be >= 1, got {n}")
    n_free = n_free_weights(n, terminal_zero_velocity)
    c = np.zeros((3 * n, n_free))
    c[0, 0] = 1.0  # w1 of segment 0
    c[1, 1] = 1.0  # w2 of segment 0
    if terminal_zero_velocity and n == 1:
        c[2] = c[1]  # w3 = w2
    else:
        c[2, 2] = 1.0
    for i in range(1, n):
        c[3 * i + 0] = c[3 * (i - 1) + 2]  # w1[i] = w3[i-1]
        c[3 * i + 1] = 2.0 * c[3 * (i - 1) + 2] - c[3 * (i - 1) + 1]
        if terminal_zero_velocity and i == n - 1:
            c[3 * i + 2] = c[3 * i + 1]  # w3[N-1] = w2[N-1]
        else:
            c[3 * i + 2, 2 + i] = 1.0
    return BasisSystem(n, terminal_zero_velocity, c)


def segments_from_free_weights(
    free_weights: np.ndarray, n_segments: int, terminal_zero_velocity: bool = False
) -> np.ndarray:
    """Expand free weights into the (N, 3, D) control-point array.

    Uses the joint recursion directly so shared control points are
    bit-identical across neighbouring segments.
    """
    free = np.asarray(free_weights, dtype=float)
    if free.ndim == 1:
        free = free[:, None]
    n_free = n_free_weights(n_segments, terminal_zero_velocity)
    if free.shape[0] != n_free:
        raise DomainError(
            f"expected {n_free} free weights for N={n_segments}"
            f" (terminal_zero_velocity={terminal_zero_velocity}), got {free.shape[0]}"
        )
    d = free.shape[1]
    ctrl = np.empty((n_segments, 3, d))
    ctrl[0, 0] = free[0]
    ctrl[0, 1] = free[1]
    ctrl[0, 2] = free[1] if (terminal_zero_velocity and n_segments == 1) else free[2]
    for i in range(1, n_segments):
        ctrl[i, 0] = ctrl[i - 1, 2]
        ctrl[i, 1] = 2.0 * ctrl[i - 1, 2] - ctrl[i - 1, 1]
        if terminal_zero_velocity and i == n_segments - 1:
            ctrl[i, 2] = ctrl[i, 1]
        else:
            ctrl[i, 2] = free[2 + i]
    return ctrl


class QuadraticSpline:
    """An immutable fitted chain of quadratic Bezier segments.

    Attributes:
        free_weights: (n_free, D) free parameters.
        control_points: (N, 3, D) derived per-segment control points.
        terminal_zero_velocity: whether the end of the chain is pinned
            to zero velocity.
    """

    def __init__(self, free_weights, n_segments: int, terminal_zero_velocity: bool = False):
        free = np.asarray(free_weights, dtype=float)
        if free.ndim == 1:
            free = free[:, None]
        if not np.all(np.isfinite(free)):
            raise DomainError("free weights must be finite")
        self.free_weights = free
        self.free_weights.setflags(write=False)
        self.n_segments = int(n_segments)
        self.terminal_zero_velocity = bool(terminal_zero_velocity)
        self.control_points = np.ascontiguousarray(
            segments_from_free_weights(free, self.n_segments, self.terminal_zero_velocity)
        )
        self.control_points.setflags(write=False)
        self.metadata: dict = {}
        lo = self.control_points.reshape(-1, self.dim).min(axis=0)
        hi = self.control_points.reshape(-1, self.dim).max(axis=0)
        # Bounding-box diagonal; the unit for all relative tolerances.
        self.scale = float(np.linalg.norm(hi - lo))

    @property
    def dim(self) -> int:
        return self.free_weights.shape[1]

    @property
    def segments(self) -> list[SegmentControl]:
        return [
            SegmentControl(self.control_points[i, 0], self.control_points[i, 1], self.control_points[i, 2])
            for i in range(self.n_segments)
        ]

    @classmethod
    def from_control_points(
        cls, control_points, terminal_zero_velocity: bool = False, continuity_tol: float = 1e-9
    ) -> "QuadraticSpline":
        """Build a spline from explicit (N, 3, D) control points.

        Joint-continuity violations beyond `continuity_tol` (relative to the
        bounding-box diagonal) trigger a warning, not an error; the free
        weights are read off directly and the remaining control points are
        re-derived from them.
        """
        ctrl = np.asarray(control_points, dtype=float)
        if ctrl.ndim == 2:
            ctrl = ctrl[None]
        if ctrl.ndim != 3 or ctrl.shape[1] != 3:
            raise DomainError(f"control points must have shape (N, 3, D), got {ctrl.shape}")
        if not np.all(np.isfinite(ctrl)):
            raise DomainError("control points must be finite")
        n = ctrl.shape[0]
        violation = _max_continuity_violation(ctrl, terminal_zero_velocity)
        lo = ctrl.reshape(-1, ctrl.shape[2]).min(axis=0)
        hi = ctrl.reshape(-1, ctrl.shape[2]).max(axis=0)
        scale = float(np.linalg.norm(hi - lo))
        if violation > continuity_tol * max(scale, 1.0):
            warnings.warn(
                f"control points violate joint continuity by up to {violation:.3g}; "
                "re-deriving from free weights",
                RuntimeWarning,
                stacklevel=2,
            )
        n_free = n_free_weights(n, terminal_zero_velocity)
        free = np.empty((n_free, ctrl.shape[2]))
        free[0] = ctrl[0, 0]
        free[1] = ctrl[0, 1]
        last = n - 1 if terminal_zero_velocity else n
        for i in range(last):
            free[2 + i] = ctrl[i, 2]
        return cls(free, n, terminal_zero_velocity)

    def _locate(self, s: float) -> tuple[int, float]:
        s = float(s)
        if not 0.0 <= s <= self.n_segments:
            raise DomainError(f"global parameter {s} outside [0, {self.n_segments}]")
        i = min(int(np.floor(s)), self.n_segments - 1)
        return i, s - i

    def evaluate(self, s) -> np.ndarray:
        """Position on the chain at global parameter s in [0, N]."""
        s_arr = np.asarray(s, dtype=float)
        if s_arr.ndim == 0:
            i, t = self._locate(float(s_arr))
            return bernstein_row(t) @ self.control_points[i]
        return np.stack([self.evaluate(v) for v in s_arr])

    def derivative(self, s) -> np.ndarray:
        """Velocity (d position / d parameter) at global parameter s."""
        s_arr = np.asarray(s, dtype=float)
        if s_arr.ndim == 0:
            i, t = self._locate(float(s_arr))
            return bernstein_derivative_row(t) @ self.control_points[i]
        return np.stack([self.derivative(v) for v in s_arr])

    def bounding_box(self, margin: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        pts = self.control_points.reshape(-1, self.dim)
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        pad = margin * (hi - lo)
        return lo - pad, hi + pad


def _max_continuity_violation(ctrl: np.ndarray, terminal_zero_velocity: bool) -> float:
    worst = 0.0
    for i in range(ctrl.shape[0] - 1):
        worst = max(worst, float(np.abs(ctrl[i, 2] - ctrl[i + 1, 0]).max()))
        tangent_gap = (ctrl[i, 1] - ctrl[i, 2]) - (ctrl[i + 1, 0] - ctrl[i + 1, 1])
        worst = max(worst, float(np.abs(tangent_gap).max()))
    if terminal_zero_velocity:
        worst = max(worst, float(np.abs(ctrl[-1, 1] - ctrl[-1, 2]).max()))
    return worst


def global_parameterize(timestamps, n_samples: int, n_segments: int) -> np.ndarray:
    """Map sample times affinely onto [0, N]; uniform when untimed.

    Repeated timestamps collapse to the uniform parameterization with a
    warning; a fully constant time vector is rejected.
    """
    if n_samples < 3:
        raise DomainError(f"need at least 3 samples, got {n_samples}")
    if timestamps is None:
        return np.linspace(0.0, float(n_segments), n_samples)
    ts = np.asarray(timestamps, dtype=float)
    if ts.shape != (n_samples,):
        raise DomainError(f"timestamps shape {ts.shape} does not match M={n_samples}")
    if np.any(np.diff(ts) < 0):
        raise DomainError("timestamps must be non-decreasing")
    if ts[0] == ts[-1]:
        raise DegenerateInputError("all timestamps are equal")
    if np.any(np.diff(ts) == 0):
        warnings.warn(
            "repeated timestamps; falling back to uniform parameterization",
            RuntimeWarning,
            stacklevel=2,
        )
        return np.linspace(0.0, float(n_segments), n_samples)
    return (ts - ts[0]) * (float(n_segments) / (ts[-1] - ts[0]))


def segment_locations(s: np.ndarray, n_segments: int) -> tuple[np.ndarray, np.ndarray]:
    """Split global parameters into (segment index, local t); s=N maps to (N-1, 1)."""
    idx = np.clip(np.floor(s).astype(int), 0, n_segments - 1)
    return idx, s - idx


def design_matrix(s: np.ndarray, basis: BasisSystem) -> np.ndarray:
    """Rows of Bernstein weights routed through the constraint map: (M, n_free)."""
    s = np.asarray(s, dtype=float)
    n = basis.n_segments
    idx, t = segment_locations(s, n)
    u = 1.0 - t
    rows = np.zeros((s.shape[0], 3 * n))
    cols = 3 * idx
    m = np.arange(s.shape[0])
    rows[m, cols] = u * u
    rows[m, cols + 1] = 2.0 * u * t
    rows[m, cols + 2] = t * t
    return rows @ basis.constraint_map


def fit(trajectory: Trajectory, config: FitConfig) -> QuadraticSpline:
    """Least-squares fit of a C1 quadratic chain to a trajectory.

    Solved with an SVD-backed solver rather than the normal equations; an
    optional ridge term regularizes rank-deficient designs.
    """
    n = config.n_segments
    n_free = n_free_weights(n, config.terminal_zero_velocity)
    m = trajectory.n_samples
    if m < n_free:
        raise UnderdeterminedError(
            f"{m} samples cannot determine {n_free} free weights (need M >= N+2)"
        )
    basis = build_constraint_map(n, config.terminal_zero_velocity)
    s = global_parameterize(trajectory.timestamps, m, n)
    phi = design_matrix(s, basis)
    target = trajectory.points
    if config.ridge > 0.0:
        phi = np.vstack([phi, np.sqrt(config.ridge) * np.eye(n_free)])
        target = np.vstack([target, np.zeros((n_free, trajectory.dim))])
    free, _, rank, _ = np.linalg.lstsq(phi, target, rcond=None)
    if config.ridge == 0.0 and rank < n_free:
        raise RankDeficiencyError(
            f"design matrix rank {rank} < {n_free} free weights; "
            "some segments have no supporting samples (increase M, lower N, or set ridge > 0)"
        )
    spline = QuadraticSpline(free, n, config.terminal_zero_velocity)
    residual = float(np.linalg.norm(design_matrix(s, basis) @ free - trajectory.points))
    spline.metadata = {"fit_residual": residual, "n_samples": m}
    return spline
