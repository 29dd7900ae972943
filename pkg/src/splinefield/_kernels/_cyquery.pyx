# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled distance-query kernel.

Same algorithm as the NumPy backend, written as scalar loops: for every
query point, solve the closest-point cubic on each segment, evaluate the
candidate parameters (interior roots plus both endpoints), and keep the
minimum with lowest-index tie-breaking.
"""

from libc.math cimport acos, cbrt, copysign, cos, fabs, isfinite, sqrt

import numpy as np

NAME = "compiled"

cdef double PI = 3.141592653589793
cdef double DEGENERACY_REL = 1e-12
cdef double RESIDUAL_REL = 1e-7
cdef double BOUNDARY_SLACK = 1e-12
cdef double INF = float("inf")


cdef inline double _poly(double a3, double a2, double a1, double a0, double t) noexcept nogil:
    return ((a3 * t + a2) * t + a1) * t + a0


cdef int _roots01(double a3, double a2, double a1, double a0, double* out) noexcept nogil:
    """Real roots of the cubic inside [0, 1]; returns the count (<= 3)."""
    cdef double raw[3]
    cdef double amax = fabs(a3)
    cdef int nraw = 0, n = 0, i, j
    cdef double thresh, disc, sq, q, b, c1, d0, p, shift, m, arg, theta, t, df, step
    if fabs(a2) > amax: amax = fabs(a2)
    if fabs(a1) > amax: amax = fabs(a1)
    if fabs(a0) > amax: amax = fabs(a0)
    if amax == 0.0 or not isfinite(amax):
        return 0
    thresh = DEGENERACY_REL * amax
    if fabs(a3) < thresh:
        if fabs(a2) < thresh:
            if fabs(a1) < thresh:
                return 0
            raw[0] = -a0 / a1
            nraw = 1
        else:
            disc = a1 * a1 - 4.0 * a2 * a0
            if disc < 0.0:
                return 0
            sq = sqrt(disc)
            q = -0.5 * (a1 + copysign(sq, a1 if a1 != 0.0 else 1.0))
            raw[0] = q / a2
            nraw = 1
            if q != 0.0:
                raw[1] = a0 / q
                nraw = 2
    else:
        b = a2 / a3
        c1 = a1 / a3
        d0 = a0 / a3
        p = c1 - b * b / 3.0
        q = 2.0 * b * b * b / 27.0 - b * c1 / 3.0 + d0
        shift = b / 3.0
        disc = 0.25 * q * q + p * p * p / 27.0
        if disc > 0.0:
            sq = sqrt(disc)
            raw[0] = cbrt(-0.5 * q + sq) + cbrt(-0.5 * q - sq) - shift
            nraw = 1
        elif p >= 0.0:  # only at a (near-)triple root
            raw[0] = cbrt(-q) - shift
            nraw = 1
        else:
            m = 2.0 * sqrt(-p / 3.0)
            if p * m != 0.0:
                arg = 3.0 * q / (p * m)
            else:  # denormal p underflows
                arg = 0.0
            if arg > 1.0: arg = 1.0
            if arg < -1.0: arg = -1.0
            theta = acos(arg) / 3.0
            raw[0] = m * cos(theta) - shift
            raw[1] = m * cos(theta - 2.0 * PI / 3.0) - shift
            raw[2] = m * cos(theta - 4.0 * PI / 3.0) - shift
            nraw = 3
    for i in range(nraw):
        t = raw[i]
        for j in range(2):
            df = (3.0 * a3 * t + 2.0 * a2) * t + a1
            if df == 0.0:
                break
            step = _poly(a3, a2, a1, a0, t) / df
            if not isfinite(step):
                break
            t -= step
        if t < -BOUNDARY_SLACK or t > 1.0 + BOUNDARY_SLACK:
            continue
        if t < 0.0: t = 0.0
        if t > 1.0: t = 1.0
        if fabs(_poly(a3, a2, a1, a0, t)) < RESIDUAL_REL * amax:
            out[n] = t
            n += 1
    return n


def batch_query(const double[:, :, ::1] ctrl, const double[:, ::1] pts,
                double eps_on, double tie_tol,
                double[::1] out_dist, double[:, ::1] out_grad,
                double[:, ::1] out_proj, long[::1] out_seg, double[::1] out_t):
    cdef Py_ssize_t n_seg = ctrl.shape[0]
    cdef Py_ssize_t dim = ctrl.shape[2]
    cdef Py_ssize_t n_pts = pts.shape[0]

    first_np = np.empty((n_seg, dim))
    second_np = np.empty((n_seg, dim))
    cdef double[:, ::1] first = first_np
    cdef double[:, ::1] second = second_np
    d_work_np = np.empty(n_seg)
    t_work_np = np.empty(n_seg)
    cdef double[::1] d_work = d_work_np
    cdef double[::1] t_work = t_work_np

    cdef Py_ssize_t k, i, d, c
    cdef double aa, ab, bb, pa, pb, a3, a2, a1, a0
    cdef double best_d2, d2, t, u, r, dmin, dist
    cdef double tcand[5]
    cdef int ncand, best_c
    cdef Py_ssize_t winner

    for i in range(n_seg):
        for d in range(dim):
            first[i, d] = ctrl[i, 1, d] - ctrl[i, 0, d]
            second[i, d] = ctrl[i, 0, d] - 2.0 * ctrl[i, 1, d] + ctrl[i, 2, d]

    with nogil:
        for k in range(n_pts):
            for i in range(n_seg):
                aa = 0.0; ab = 0.0; bb = 0.0; pa = 0.0; pb = 0.0
                for d in range(dim):
                    aa += first[i, d] * first[i, d]
                    ab += first[i, d] * second[i, d]
                    bb += second[i, d] * second[i, d]
                    r = ctrl[i, 0, d] - pts[k, d]
                    pa += r * first[i, d]
                    pb += r * second[i, d]
                a3 = 2.0 * bb
                a2 = 6.0 * ab
                a1 = 4.0 * aa + 2.0 * pb
                a0 = 2.0 * pa
                ncand = _roots01(a3, a2, a1, a0, tcand)
                tcand[ncand] = 0.0
                tcand[ncand + 1] = 1.0
                ncand += 2
                best_d2 = INF
                best_c = 0
                for c in range(ncand):
                    t = tcand[c]
                    u = 1.0 - t
                    # Bernstein form: exact at the endpoints, no cancellation.
                    d2 = 0.0
                    for d in range(dim):
                        r = u * u * ctrl[i, 0, d] + 2.0 * u * t * ctrl[i, 1, d] \
                            + t * t * ctrl[i, 2, d] - pts[k, d]
                        d2 += r * r
                    if d2 < best_d2:
                        best_d2 = d2
                        best_c = c
                d_work[i] = sqrt(best_d2)
                t_work[i] = tcand[best_c]
            dmin = d_work[0]
            for i in range(1, n_seg):
                if d_work[i] < dmin:
                    dmin = d_work[i]
            winner = 0
            for i in range(n_seg):
                if d_work[i] <= dmin + tie_tol:
                    winner = i
                    break
            dist = d_work[winner]
            t = t_work[winner]
            u = 1.0 - t
            out_dist[k] = dist
            out_seg[k] = winner
            out_t[k] = t
            for d in range(dim):
                r = u * u * ctrl[winner, 0, d] + 2.0 * u * t * ctrl[winner, 1, d] \
                    + t * t * ctrl[winner, 2, d] - pts[k, d]
                out_proj[k, d] = pts[k, d] + r
                if dist >= eps_on and dist > 0.0:
                    out_grad[k, d] = -r / dist
                else:
                    out_grad[k, d] = 0.0
