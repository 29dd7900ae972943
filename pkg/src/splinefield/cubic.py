"""Closed-form cubic root solving for the closest-point condition.

The closest point on a quadratic segment to a query x satisfies a cubic
orthogonality equation in the local parameter t.  This module builds those
coefficients and finds all real roots inside [0, 1] with a trigonometric /
Cardano solver, one Newton polish per root, and back-substitution checks.
This is the scalar reference; the batch kernels re-implement the same
algorithm (see splinefield._kernels).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# |a3| (or |a2|, |a1|) below this fraction of the largest coefficient is
# treated as zero and the solver drops one degree.
DEGENERACY_REL = 1e-12
# Roots closer than this are reported once.
ROOT_MERGE_TOL = 1e-10
# Back-substitution residual bound, relative to max |coefficient|.
RESIDUAL_REL = 1e-7
# Slack for accepting roots marginally outside [0, 1] before clamping.
BOUNDARY_SLACK = 1e-12


@dataclass(frozen=True)
class CubicCoefficients:
    """Coefficients of a3*t^3 + a2*t^2 + a1*t + a0 = 0."""

    a3: float
    a2: float
    a1: float
    a0: float


def cubic_coefficients(segment, x) -> CubicCoefficients:
    """Orthogonality-condition coefficients for one segment and query point.

    With first difference A = w2 - w1, second difference B = w1 - 2*w2 + w3
    and offset p = w1 - x, the dot product of (curve - x) with the tangent
    expands to

        2(B.B) t^3 + 6(A.B) t^2 + (4 A.A + 2 p.B) t + 2 p.A
    """
    if hasattr(segment, "w1"):
        w1, w2, w3 = segment.w1, segment.w2, segment.w3
    else:
        ctrl = np.asarray(segment, dtype=float)
        w1, w2, w3 = ctrl[0], ctrl[1], ctrl[2]
    x = np.asarray(x, dtype=float)
    a = w2 - w1
    b = w1 - 2.0 * w2 + w3
    p = w1 - x
    return CubicCoefficients(
        a3=2.0 * float(b @ b),
        a2=6.0 * float(a @ b),
        a1=4.0 * float(a @ a) + 2.0 * float(p @ b),
        a0=2.0 * float(p @ a),
    )


def _cbrt(v: float) -> float:
    return math.copysign(abs(v) ** (1.0 / 3.0), v)


def _poly(c: CubicCoefficients, t: float) -> float:
    return ((c.a3 * t + c.a2) * t + c.a1) * t + c.a0


def _dpoly(c: CubicCoefficients, t: float) -> float:
    return (3.0 * c.a3 * t + 2.0 * c.a2) * t + c.a1


def _polish(c: CubicCoefficients, t: float, iterations: int = 2) -> float:
    for _ in range(iterations):
        d = _dpoly(c, t)
        if d == 0.0:
            break
        step = _poly(c, t) / d
        if not math.isfinite(step):
            break
        t -= step
    return t


def _raw_real_roots(c: CubicCoefficients, amax: float) -> list[float]:
    if abs(c.a3) < DEGENERACY_REL * amax:
        if abs(c.a2) < DEGENERACY_REL * amax:
            if abs(c.a1) < DEGENERACY_REL * amax:
                return []
            return [-c.a0 / c.a1]
        disc = c.a1 * c.a1 - 4.0 * c.a2 * c.a0
        if disc < 0.0:
            return []
        q = -0.5 * (c.a1 + math.copysign(math.sqrt(disc), c.a1 if c.a1 != 0.0 else 1.0))
        r1 = q / c.a2
        return [r1, c.a0 / q] if q != 0.0 else [r1]
    b = c.a2 / c.a3
    p = c.a1 / c.a3 - b * b / 3.0
    q = 2.0 * b * b * b / 27.0 - b * (c.a1 / c.a3) / 3.0 + c.a0 / c.a3
    shift = b / 3.0
    disc = 0.25 * q * q + p * p * p / 27.0
    if disc > 0.0:
        s = math.sqrt(disc)
        u = _cbrt(-0.5 * q + s) + _cbrt(-0.5 * q - s)
        return [u - shift]
    if p >= 0.0:  # disc <= 0 with p >= 0 only at a (near-)triple root
        return [_cbrt(-q) - shift]
    m = 2.0 * math.sqrt(-p / 3.0)
    denom = p * m
    arg = 3.0 * q / denom if denom != 0.0 else 0.0  # denormal p underflows
    theta = math.acos(min(1.0, max(-1.0, arg))) / 3.0
    return [m * math.cos(theta - 2.0 * math.pi * k / 3.0) - shift for k in (0, 1, 2)]


def solve_cubic_in_unit_interval(c: CubicCoefficients) -> list[float]:
    """All real roots in [0, 1], deduplicated and polish-verified.

    Near-degenerate leading coefficients drop the solver to quadratic and
    then linear form; an all-zero polynomial yields no roots (the caller
    falls back to the segment endpoints).
    """
    amax = max(abs(c.a3), abs(c.a2), abs(c.a1), abs(c.a0))
    if amax == 0.0 or not math.isfinite(amax):
        return []
    roots = []
    for t in _raw_real_roots(c, amax):
        t = _polish(c, t)
        if not -BOUNDARY_SLACK <= t <= 1.0 + BOUNDARY_SLACK:
            continue
        t = min(1.0, max(0.0, t))
        if abs(_poly(c, t)) < RESIDUAL_REL * amax:
            roots.append(t)
    roots.sort()
    merged: list[float] = []
    for t in roots:
        if not merged or t - merged[-1] > ROOT_MERGE_TOL:
            merged.append(t)
    return merged
