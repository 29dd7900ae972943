"""Vectorized distance-query kernel: pure NumPy fallback.

Mirrors the compiled kernel in splinefield._kernels._cyquery: per segment,
build the closest-point cubic, take all real roots in [0, 1] plus the two
endpoints as candidates, keep the per-segment minimum, then the minimum over
segments with lowest-index tie-breaking.

Candidates are evaluated through the Bernstein form u^2 w1 + 2ut w2 + t^2 w3,
which is exact at the endpoints (an endpoint query reports distance 0.0, not
rounding noise) and free of cancellation inside the interval.  Work is
chunked over query points to bound the (K, N, 5, D) intermediate.
"""

from __future__ import annotations

import numpy as np

from ..cubic import BOUNDARY_SLACK, DEGENERACY_REL, RESIDUAL_REL

NAME = "numpy"

# Elements allowed in the candidate-evaluation tensor per chunk (~32 MB).
_CHUNK_BUDGET = 4_000_000


def _roots_in_unit_interval(a3, a2, a1, a0):
    """Real roots in [0, 1] of a batch of cubics; shape (..., 3), NaN-padded."""
    shape = np.broadcast_shapes(a3.shape, a2.shape, a1.shape, a0.shape)
    a3, a2, a1, a0 = (np.broadcast_to(a, shape) for a in (a3, a2, a1, a0))
    amax = np.maximum.reduce([np.abs(a3), np.abs(a2), np.abs(a1), np.abs(a0)])
    thresh = DEGENERACY_REL * amax
    is_cubic = np.abs(a3) >= thresh
    is_quad = ~is_cubic & (np.abs(a2) >= thresh)
    is_lin = ~is_cubic & ~is_quad & (np.abs(a1) >= thresh) & (amax > 0)

    roots = np.full(shape + (3,), np.nan)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        roots[..., 0] = np.where(is_lin, -a0 / np.where(is_lin, a1, 1.0), roots[..., 0])

        disc_q = a1 * a1 - 4.0 * a2 * a0
        sq = np.sqrt(np.maximum(disc_q, 0.0))
        qq = -0.5 * (a1 + np.copysign(sq, np.where(a1 == 0.0, 1.0, a1)))
        r1 = qq / np.where(is_quad, a2, 1.0)
        r2 = np.where(qq != 0.0, a0 / np.where(qq != 0.0, qq, 1.0), r1)
        quad_ok = is_quad & (disc_q >= 0.0)
        roots[..., 0] = np.where(quad_ok, r1, roots[..., 0])
        roots[..., 1] = np.where(quad_ok, r2, roots[..., 1])

        safe_a3 = np.where(is_cubic, a3, 1.0)
        b = a2 / safe_a3
        c1 = a1 / safe_a3
        d0 = a0 / safe_a3
        p = c1 - b * b / 3.0
        q = 2.0 * b * b * b / 27.0 - b * c1 / 3.0 + d0
        shift = b / 3.0
        disc = 0.25 * q * q + p * p * p / 27.0

        s = np.sqrt(np.maximum(disc, 0.0))
        one_root = np.cbrt(-0.5 * q + s) + np.cbrt(-0.5 * q - s) - shift
        one = is_cubic & (disc > 0.0)
        roots[..., 0] = np.where(one, one_root, roots[..., 0])

        triple = is_cubic & (disc <= 0.0) & (p >= 0.0)
        roots[..., 0] = np.where(triple, np.cbrt(-q) - shift, roots[..., 0])

        three = is_cubic & (disc <= 0.0) & (p < 0.0)
        m = 2.0 * np.sqrt(np.maximum(-p / 3.0, 0.0))
        denom = p * m
        arg = np.clip(3.0 * q / np.where(denom == 0.0, 1.0, denom), -1.0, 1.0)
        theta = np.arccos(arg) / 3.0
        for k in range(3):
            rk = m * np.cos(theta - 2.0 * np.pi * k / 3.0) - shift
            roots[..., k] = np.where(three, rk, roots[..., k])

        # Two Newton iterations, then clamp into [0, 1] and verify.
        a3e, a2e, a1e, a0e = (a[..., None] for a in (a3, a2, a1, a0))
        for _ in range(2):
            f = ((a3e * roots + a2e) * roots + a1e) * roots + a0e
            df = (3.0 * a3e * roots + 2.0 * a2e) * roots + a1e
            step = f / df
            ok = np.isfinite(step)
            roots = np.where(ok, roots - np.where(ok, step, 0.0), roots)

        in_range = (roots >= -BOUNDARY_SLACK) & (roots <= 1.0 + BOUNDARY_SLACK)
        roots = np.clip(roots, 0.0, 1.0)
        resid = ((a3e * roots + a2e) * roots + a1e) * roots + a0e
        keep = in_range & (np.abs(resid) < RESIDUAL_REL * amax[..., None])
        roots = np.where(keep, roots, np.nan)
    return roots


def _query_chunk(ctrl, w1, first, second, aa, ab, bb, pts, eps_on, tie_tol):
    k = pts.shape[0]
    p = w1[None, :, :] - pts[:, None, :]  # (K, N, D)
    pa = np.einsum("knd,nd->kn", p, first)
    pb = np.einsum("knd,nd->kn", p, second)

    a3 = np.broadcast_to(2.0 * bb, pa.shape)
    a2 = np.broadcast_to(6.0 * ab, pa.shape)
    a1 = 4.0 * aa[None, :] + 2.0 * pb
    a0 = 2.0 * pa

    roots = _roots_in_unit_interval(a3, a2, a1, a0)  # (K, N, 3)
    cand = np.concatenate(
        [roots, np.zeros(pa.shape + (1,)), np.ones(pa.shape + (1,))], axis=2
    )  # (K, N, 5)

    u = 1.0 - cand
    resid = (
        (u * u)[..., None] * ctrl[None, :, None, 0, :]
        + (2.0 * u * cand)[..., None] * ctrl[None, :, None, 1, :]
        + (cand * cand)[..., None] * ctrl[None, :, None, 2, :]
        - pts[:, None, None, :]
    )  # (K, N, 5, D): curve point minus query point
    d2 = np.einsum("kncd,kncd->knc", resid, resid)
    d2 = np.where(np.isnan(cand), np.inf, d2)
    best = np.argmin(d2, axis=2)
    t_seg = np.take_along_axis(cand, best[..., None], axis=2)[..., 0]
    d_seg = np.sqrt(np.take_along_axis(d2, best[..., None], axis=2)[..., 0])
    r_seg = np.take_along_axis(resid, best[..., None, None], axis=2)[:, :, 0, :]

    d_min = d_seg.min(axis=1)
    seg = np.argmax(d_seg <= (d_min[:, None] + tie_tol), axis=1)

    rows = np.arange(k)
    dist = d_seg[rows, seg]
    t_local = t_seg[rows, seg]
    r_win = r_seg[rows, seg]
    proj = pts + r_win
    grad = np.zeros_like(proj)
    off = (dist >= max(eps_on, 0.0)) & (dist > 0.0)
    grad[off] = -r_win[off] / dist[off, None]
    return dist, grad, proj, seg.astype(np.int64), t_local


def batch_query_arrays(ctrl, pts, eps_on, tie_tol):
    """Query K points against N segments.

    Args:
        ctrl: (N, 3, D) control points.
        pts: (K, D) query points.
        eps_on: distances below this report a zero gradient.
        tie_tol: segments within this distance of the minimum tie-break
            to the lowest index.

    Returns:
        (distance (K,), gradient (K, D), projection (K, D),
         segment_index (K,), t_local (K,))
    """
    ctrl = np.asarray(ctrl, dtype=float)
    pts = np.asarray(pts, dtype=float)
    n_seg, _, dim = ctrl.shape
    k = pts.shape[0]

    w1 = ctrl[:, 0]
    first = ctrl[:, 1] - ctrl[:, 0]
    second = ctrl[:, 0] - 2.0 * ctrl[:, 1] + ctrl[:, 2]
    aa = np.einsum("nd,nd->n", first, first)
    ab = np.einsum("nd,nd->n", first, second)
    bb = np.einsum("nd,nd->n", second, second)

    chunk = max(1, _CHUNK_BUDGET // (n_seg * 5 * dim))
    if k <= chunk:
        return _query_chunk(ctrl, w1, first, second, aa, ab, bb, pts, eps_on, tie_tol)
    parts = [
        _query_chunk(
            ctrl, w1, first, second, aa, ab, bb, pts[i : i + chunk], eps_on, tie_tol
        )
        for i in range(0, k, chunk)
    ]
    return tuple(np.concatenate([p[j] for p in parts]) for j in range(5))
