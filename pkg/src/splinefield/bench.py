"""Encoding baselines, timing, and gradient-stability studies.

Compares the constrained quadratic chain against standard trajectory bases
(piecewise constant, one high-order Bernstein polynomial, Gaussian RBFs,
real Fourier, and a C1 cubic chain) at matched parameter counts, measures
batch-query wall time per kernel backend, and quantifies how jumpy sampled
gradients are next to the analytic ones.

Conventions the comparison needs but the error metric does not fix:
RBFs are Gaussians with K centers equally spaced on [0, 1] and bandwidth
equal to the center spacing; the Fourier family is the real basis
{1, cos 2*pi*k t, sin 2*pi*k t, ...} truncated to exactly K columns.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from contextlib import contextmanager
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from . import _kernels
from .errors import DomainError
from .field import numerical_baseline_query, query_arrays
from .spline import QuadraticSpline, Trajectory, build_constraint_map
from .spline import design_matrix as _quadratic_design

FAMILY_KINDS = (
    "piecewise_constant",
    "bernstein_poly",
    "rbf",
    "fourier",
    "quadratic_spline",
    "cubic_spline",
)


@dataclass(frozen=True)
class BasisFamily:
    """One comparison method at a fixed per-dimension parameter count."""

    kind: str
    n_params: int

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise DomainError(f"unknown basis family {self.kind!r}")
        if self.n_params < 1:
            raise DomainError(f"n_params must be >= 1, got {self.n_params}")


@dataclass
class BenchReport:
    """Long-format result rows, ready for CSV/JSON export."""

    encoding: list[dict] = dataclass_field(default_factory=list)
    timing: list[dict] = dataclass_field(default_factory=list)

    def rows(self) -> list[dict]:
        return self.encoding + self.timing

    def write_csv(self, path) -> None:
        rows = self.rows()
        keys: list[str] = []
        for row in rows:
            for key in row:
                if key not in keys:
                    keys.append(key)
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=keys)
            writer.writeheader()
            writer.writerows(rows)

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump({"encoding": self.encoding, "timing": self.timing}, fh, indent=2)
            fh.write("\n")


def reconstruction_error(design: np.ndarray, weights: np.ndarray, points: np.ndarray) -> float:
    """Stacked L2 error per sample: ||design @ weights - points||_F / n_points."""
    design = np.asarray(design, dtype=float)
    weights = np.asarray(weights, dtype=float)
    points = np.asarray(points, dtype=float)
    if design.ndim != 2 or points.ndim != 2:
        raise DomainError("design and points must be 2-D")
    if design.shape[0] != points.shape[0]:
        raise DomainError(
            f"design has {design.shape[0]} rows but points has {points.shape[0]}"
        )
    if design.shape[1] != weights.shape[0]:
        raise DomainError(
            f"design has {design.shape[1]} columns but weights has {weights.shape[0]} rows"
        )
    return float(np.linalg.norm(design @ weights - points)) / points.shape[0]


def _bernstein_design(times: np.ndarray, degree: int) -> np.ndarray:
    cols = [
        math.comb(degree, k) * (1.0 - times) ** (degree - k) * times**k
        for k in range(degree + 1)
    ]
    return np.column_stack(cols)


def _cubic_constraint_map(n_segments: int) -> np.ndarray:
    # Free parameters: first segment's four control points, then the last
    # two control points of each further segment (2N+2 columns).
    n = n_segments
    c = np.zeros((4 * n, 2 * n + 2))
    for j in range(4):
        c[j, j] = 1.0
    for i in range(1, n):
        base = 4 * i
        c[base + 0] = c[base - 1]                  # shares the previous endpoint
        c[base + 1] = 2.0 * c[base - 1] - c[base - 2]  # mirrored tangent handle
        c[base + 2, 2 + 2 * i] = 1.0
        c[base + 3, 3 + 2 * i] = 1.0
    return c


def _piecewise_design(times: np.ndarray, k: int) -> np.ndarray:
    bins = np.minimum((times * k).astype(int), k - 1)
    design = np.zeros((times.shape[0], k))
    design[np.arange(times.shape[0]), bins] = 1.0
    return design


def _rbf_design(times: np.ndarray, k: int) -> np.ndarray:
    centers = np.linspace(0.0, 1.0, k) if k > 1 else np.array([0.5])
    sigma = 1.0 / (k - 1) if k > 1 else 1.0
    return np.exp(-((times[:, None] - centers[None, :]) ** 2) / (2.0 * sigma**2))


def _fourier_design(times: np.ndarray, k: int) -> np.ndarray:
    cols = [np.ones_like(times)]
    harmonic = 1
    while len(cols) < k:
        cols.append(np.cos(2.0 * np.pi * harmonic * times))
        if len(cols) < k:
            cols.append(np.sin(2.0 * np.pi * harmonic * times))
        harmonic += 1
    return np.column_stack(cols[:k])


def _chain_design(times: np.ndarray, n_segments: int, degree: int) -> np.ndarray:
    s = times * n_segments
    idx = np.clip(np.floor(s).astype(int), 0, n_segments - 1)
    t = s - idx
    local = _bernstein_design(t, degree)
    width = degree + 1
    rows = np.zeros((times.shape[0], width * n_segments))
    for j in range(width):
        rows[np.arange(times.shape[0]), width * idx + j] = local[:, j]
    if degree == 2:
        return rows @ build_constraint_map(n_segments).constraint_map
    return rows @ _cubic_constraint_map(n_segments)


def build_basis(family: BasisFamily, times) -> np.ndarray:
    """Design matrix of the family evaluated at times in [0, 1]."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1:
        raise DomainError("times must be 1-D")
    if times.size and (times.min() < 0.0 or times.max() > 1.0):
        raise DomainError("times must lie inside [0, 1]")
    k = family.n_params
    if family.kind == "piecewise_constant":
        return _piecewise_design(times, k)
    if family.kind == "bernstein_poly":
        return _bernstein_design(times, k - 1)
    if family.kind == "rbf":
        return _rbf_design(times, k)
    if family.kind == "fourier":
        return _fourier_design(times, k)
    if family.kind == "quadratic_spline":
        if k < 3:
            raise DomainError(
                f"quadratic_spline needs K >= 3 (K = N + 2 with N >= 1), got K={k}"
            )
        return _chain_design(times, k - 2, degree=2)
    if family.kind == "cubic_spline":
        if k < 4 or k % 2:
            raise DomainError(
                f"cubic_spline needs even K >= 4 (K = 2N + 2 with N >= 1), got K={k}"
            )
        return _chain_design(times, (k - 2) // 2, degree=3)
    raise DomainError(f"unknown basis family {family.kind!r}")


def normalized_times(trajectory: Trajectory) -> np.ndarray:
    ts = trajectory.timestamps
    if ts is None or ts[0] == ts[-1]:
        return np.linspace(0.0, 1.0, trajectory.n_samples)
    return (ts - ts[0]) / (ts[-1] - ts[0])


def fit_family(family: BasisFamily, trajectory: Trajectory) -> float:
    """Least-squares fit of one family to one trajectory; returns the error."""
    times = normalized_times(trajectory)
    design = build_basis(family, times)
    weights, *_ = np.linalg.lstsq(design, trajectory.points, rcond=None)
    return reconstruction_error(design, weights, trajectory.points)


def run_encoding_benchmark(
    dataset: list[Trajectory],
    param_counts=(3, 7, 12, 17, 22),
    methods=FAMILY_KINDS,
) -> BenchReport:
    """Mean +/- std reconstruction error per (method, K) over the dataset.

    Failing cells (for example an odd K for the cubic chain) are recorded
    with the failure message rather than aborting the run.
    """
    if not dataset:
        raise DomainError("dataset must contain at least one trajectory")
    report = BenchReport()
    for kind in methods:
        for k in param_counts:
            row = {"method": kind, "n_params": int(k)}
            try:
                errors = [fit_family(BasisFamily(kind, int(k)), traj) for traj in dataset]
                row["mean"] = float(np.mean(errors))
                row["std"] = float(np.std(errors))
                row["n_shapes"] = len(errors)
            except DomainError as exc:
                row["mean"] = float("nan")
                row["std"] = float("nan")
                row["error"] = str(exc)
            report.encoding.append(row)
    return report


@contextmanager
def _single_worker():
    old = os.environ.get("SPLINEFIELD_THREADS")
    os.environ["SPLINEFIELD_THREADS"] = "1"
    try:
        yield
    finally:
        if old is None:
            os.environ.pop("SPLINEFIELD_THREADS", None)
        else:
            os.environ["SPLINEFIELD_THREADS"] = old


def run_timing_benchmark(
    segment_counts=(1, 5, 20),
    dims=(2, 10),
    n_points: int = 2500,
    repeats: int = 5,
    backends=None,
    seed: int = 0,
) -> BenchReport:
    """Median wall time of an n_points batch query per (N, D, backend).

    Measurements run single-worker with one warm-up excluded; repeats >= 5.
    """
    if n_points < 1 or repeats < 1:
        raise DomainError("n_points and repeats must be positive")
    repeats = max(repeats, 5)
    if backends is None:
        backends = [_kernels.get_backend().name]
    report = BenchReport()
    rng = np.random.default_rng(seed)
    with _single_worker():
        for dim in dims:
            for n_seg in segment_counts:
                free = rng.uniform(-0.5, 0.5, size=(n_seg + 2, dim))
                spline = QuadraticSpline(free, n_seg)
                pts = rng.uniform(-1.0, 1.0, size=(n_points, dim))
                for backend in backends:
                    query_arrays(spline, pts, backend=backend)  # warm-up
                    samples = []
                    for _ in range(repeats):
                        t0 = time.perf_counter()
                        query_arrays(spline, pts, backend=backend)
                        samples.append((time.perf_counter() - t0) * 1e3)
                    report.timing.append(
                        {
                            "backend": backend,
                            "n_segments": int(n_seg),
                            "dim": int(dim),
                            "n_points": int(n_points),
                            "median_ms": float(np.median(samples)),
                        }
                    )
    return report


def _max_angular_jump_deg(grads: list[np.ndarray]) -> float:
    worst = 0.0
    for a, b in zip(grads, grads[1:]):
        cosang = np.clip(float(a @ b), -1.0, 1.0)
        worst = max(worst, math.degrees(math.acos(cosang)))
    return worst


def gradient_instability_study(
    spline: QuadraticSpline,
    probe_start,
    probe_end,
    k_numerical: int,
    n_probe: int = 200,
) -> dict:
    """Max angular jump of analytic vs sampled gradients along a probe line.

    Probe points that land on the curve are skipped (their gradient is the
    zero vector by convention and carries no direction).
    """
    probe_start = np.asarray(probe_start, dtype=float)
    probe_end = np.asarray(probe_end, dtype=float)
    if probe_start.shape != (spline.dim,) or probe_end.shape != (spline.dim,):
        raise DomainError(f"probe endpoints must be {spline.dim}-vectors")
    if n_probe < 2:
        raise DomainError("need at least 2 probe points")
    line = probe_start[None, :] + np.linspace(0.0, 1.0, n_probe)[:, None] * (
        probe_end - probe_start
    )
    dist, grad, *_ = query_arrays(spline, line)
    eps_on = 1e-9 * spline.scale
    analytic = [g for d, g in zip(dist, grad) if d > eps_on]
    sampled = []
    for x in line:
        d, g = numerical_baseline_query(spline, x, k_numerical)
        if d > eps_on:
            sampled.append(g)
    return {
        "n_probe": int(n_probe),
        "k_numerical": int(k_numerical),
        "analytic_max_jump_deg": _max_angular_jump_deg(analytic),
        "numerical_max_jump_deg": _max_angular_jump_deg(sampled),
    }


def synthetic_dataset(n_shapes: int = 10, n_samples: int = 200, seed: int = 0) -> list[Trajectory]:
    """Smooth random 2-D curves (low-frequency sinusoid mixes) for benchmarks."""
    rng = np.random.default_rng(seed)
    shapes = []
    u = np.linspace(0.0, 1.0, n_samples)
    for _ in range(n_shapes):
        pts = np.empty((n_samples, 2))
        for axis in range(2):
            amp = rng.uniform(0.2, 1.0, size=3)
            freq = rng.integers(1, 4, size=3)
            phase = rng.uniform(0.0, 2.0 * np.pi, size=3)
            pts[:, axis] = sum(
                a * np.sin(2.0 * np.pi * f * u + p) for a, f, p in zip(amp, freq, phase)
            ) + rng.uniform(-0.5, 0.5) * u
        shapes.append(Trajectory(pts))
    return shapes
