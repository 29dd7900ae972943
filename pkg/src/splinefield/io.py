"""File formats: trajectory ingestion, model persistence, field-grid export.

All writers are atomic (temp file + rename) and canonical: floats serialize
as shortest round-trip decimals, keys in a fixed order, so identical inputs
produce byte-identical files and a save/load/save cycle is a fixed point.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile

import numpy as np

from .errors import DomainError, FormatError, VersionError
from .field import UnionField, query_arrays, union_query_arrays
from .spline import QuadraticSpline, Trajectory

FORMAT_VERSION = 1


def _atomic_write(path, text: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _detect_format(path, fmt: str | None) -> str:
    if fmt is not None:
        if fmt not in ("csv", "json"):
            raise DomainError(f"format must be 'csv' or 'json', got {fmt!r}")
        return fmt
    ext = os.path.splitext(os.fspath(path))[1].lower()
    if ext == ".csv":
        return "csv"
    if ext == ".json":
        return "json"
    raise DomainError(f"cannot infer format from {path!r}; pass format='csv'|'json'")


# ------------------------------------------------------------- trajectories


def load_trajectory(path, fmt: str | None = None) -> Trajectory:
    """Read a trajectory file.

    CSV needs a header row of `x1..xD`, optionally preceded by `t`.  JSON is
    an object {"dim": D, "points": [[...], ...], "timestamps": [...]?}.
    Malformed values are reported with their 1-based file line number.
    """
    fmt = _detect_format(path, fmt)
    with open(path, "r", newline="") as fh:
        content = fh.read()
    if fmt == "csv":
        return _trajectory_from_csv(content, path)
    return _trajectory_from_json(content, path)


def _trajectory_from_csv(content: str, path) -> Trajectory:
    reader = csv.reader(_io.StringIO(content))
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError(f"{path}: empty file") from None
    header = [h.strip() for h in header]
    has_time = bool(header) and header[0] == "t"
    coords = header[1:] if has_time else header
    dim = len(coords)
    if dim < 1 or coords != [f"x{i + 1}" for i in range(dim)]:
        raise FormatError(
            f"{path}: missing or malformed header; expected 't,x1,..,xD' or 'x1,..,xD', got {header}"
        )
    points, times = [], []
    for line_no, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(header):
            raise FormatError(
                f"{path}: line {line_no}: expected {len(header)} columns, got {len(row)}"
            )
        try:
            values = [float(v) for v in row]
        except ValueError as exc:
            raise FormatError(f"{path}: line {line_no}: {exc}") from None
        if not all(np.isfinite(values)):
            raise FormatError(f"{path}: line {line_no}: non-finite value")
        if has_time:
            times.append(values[0])
            points.append(values[1:])
        else:
            points.append(values)
    if len(points) < 3:
        raise DomainError(f"{path}: need at least 3 data rows, got {len(points)}")
    return Trajectory(np.array(points), np.array(times) if has_time else None)


def _trajectory_from_json(content: str, path) -> Trajectory:
    try:
        obj = json.loads(content)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(obj, dict) or "points" not in obj:
        raise FormatError(f"{path}: expected an object with a 'points' array")
    points = np.asarray(obj["points"], dtype=float)
    if points.ndim != 2:
        raise FormatError(f"{path}: 'points' must be a list of equal-length rows")
    dim = obj.get("dim", points.shape[1])
    if dim != points.shape[1]:
        raise FormatError(
            f"{path}: declared dim {dim} does not match row width {points.shape[1]}"
        )
    timestamps = obj.get("timestamps")
    return Trajectory(points, None if timestamps is None else np.asarray(timestamps, float))


# ------------------------------------------------------------------- models


def model_to_dict(spline: QuadraticSpline, metadata: dict | None = None) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "dim": spline.dim,
        "n_segments": spline.n_segments,
        "terminal_zero_velocity": spline.terminal_zero_velocity,
        "segments": spline.control_points.tolist(),
        "metadata": dict(spline.metadata if metadata is None else metadata),
    }


def spline_from_dict(obj: dict, source="model") -> QuadraticSpline:
    version = obj.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionError(
            f"{source}: format_version {version!r} is not supported "
            f"(this build reads version {FORMAT_VERSION}); upgrade required"
        )
    for key in ("dim", "n_segments", "segments"):
        if key not in obj:
            raise FormatError(f"{source}: missing field {key!r}")
    segments = np.asarray(obj["segments"], dtype=float)
    expected = (int(obj["n_segments"]), 3, int(obj["dim"]))
    if segments.shape != expected:
        raise FormatError(
            f"{source}: segments shape {segments.shape} does not match {expected}"
        )
    spline = QuadraticSpline.from_control_points(
        segments, terminal_zero_velocity=bool(obj.get("terminal_zero_velocity", False))
    )
    spline.metadata = dict(obj.get("metadata", {}))
    return spline


def field_to_dict(field, metadata: dict | None = None) -> dict:
    if isinstance(field, UnionField):
        return {
            "format_version": FORMAT_VERSION,
            "members": [model_to_dict(m) for m in field.members],
            "metadata": dict(field.metadata if metadata is None else metadata),
        }
    return model_to_dict(field, metadata)


def field_from_dict(obj: dict, source="model"):
    if not isinstance(obj, dict):
        raise FormatError(f"{source}: expected a JSON object")
    if "members" in obj:
        version = obj.get("format_version")
        if version != FORMAT_VERSION:
            raise VersionError(
                f"{source}: format_version {version!r} is not supported; upgrade required"
            )
        members = [
            spline_from_dict(m, source=f"{source}[members][{i}]")
            for i, m in enumerate(obj["members"])
        ]
        field = UnionField(members)
        field.metadata = dict(obj.get("metadata", {}))
        return field
    return spline_from_dict(obj, source)


def save_model(field, path, metadata: dict | None = None) -> None:
    """Persist a spline or union field as canonical JSON (atomic write)."""
    _atomic_write(path, json.dumps(field_to_dict(field, metadata), indent=1) + "\n")


def load_model(path):
    """Load a spline or union field; continuity violations warn, bad versions fail."""
    with open(path, "r") as fh:
        content = fh.read()
    try:
        obj = json.loads(content)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from None
    return field_from_dict(obj, source=os.fspath(path))


# ------------------------------------------------------------------- grids


def _grid_points(field, bounds, resolution, axes, fixed):
    dim = field.dim
    if axes is None:
        axes = (0, 1) if dim >= 2 else None
    if dim == 1:
        raise DomainError("grid export needs dim >= 2")
    ax, ay = axes
    if not (0 <= ax < dim and 0 <= ay < dim and ax != ay):
        raise DomainError(f"invalid slice axes {axes} for dim {dim}")
    if dim > 2:
        if fixed is None or len(fixed) != dim:
            raise DomainError(
                "grids over dim > 2 need a full `fixed` base point (slice values "
                "for every coordinate; the two varied axes ignore theirs)"
            )
    nx, ny = (resolution, resolution) if np.isscalar(resolution) else resolution
    if nx < 2 or ny < 2:
        raise DomainError(f"resolution must be >= 2 per axis, got {(nx, ny)}")
    xmin, xmax, ymin, ymax = (float(b) for b in bounds)
    xs = np.linspace(xmin, xmax, int(nx))
    ys = np.linspace(ymin, ymax, int(ny))
    base = np.zeros(dim) if fixed is None else np.asarray(fixed, dtype=float)
    pts = np.tile(base, (int(nx) * int(ny), 1))
    gx, gy = np.meshgrid(xs, ys)  # row-major: y varies slowest
    pts[:, ax] = gx.ravel()
    pts[:, ay] = gy.ravel()
    return pts, (ax, ay)


def field_grid(field, bounds, resolution, axes=None, fixed=None):
    """Sample distance/gradient/phase on a 2-D grid (or slice of higher D).

    Returns a list of row dicts ordered row-major (y slowest), with grid
    coordinates, distance, the two in-plane gradient components, and phase.
    """
    pts, (ax, ay) = _grid_points(field, bounds, resolution, axes, fixed)
    if isinstance(field, UnionField):
        dist, grad, _, _, _, phase, _ = union_query_arrays(field, pts)
    else:
        dist, grad, _, _, _, phase = query_arrays(field, pts)
    return [
        {
            "x": float(pts[i, ax]),
            "y": float(pts[i, ay]),
            "distance": float(dist[i]),
            "grad_x": float(grad[i, ax]),
            "grad_y": float(grad[i, ay]),
            "phase": float(phase[i]),
        }
        for i in range(pts.shape[0])
    ]


GRID_COLUMNS = ("x", "y", "distance", "grad_x", "grad_y", "phase")


def export_field_grid(field, bounds, resolution, path, axes=None, fixed=None, fmt=None):
    """Write a field grid as CSV or JSON rows (deterministic, atomic)."""
    fmt = _detect_format(path, fmt)
    rows = field_grid(field, bounds, resolution, axes, fixed)
    if fmt == "json":
        _atomic_write(path, json.dumps(rows, indent=0) + "\n")
        return
    out = _io.StringIO()
    out.write(",".join(GRID_COLUMNS) + "\n")
    for row in rows:
        out.write(",".join(repr(row[c]) for c in GRID_COLUMNS) + "\n")
    _atomic_write(path, out.getvalue())
