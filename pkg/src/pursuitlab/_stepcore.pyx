# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled stepping kernel.

Mirror of ``_stepcore_py``: every arithmetic expression matches the NumPy
fallback operation for operation (and the build disables FMA contraction),
so both backends produce bit-identical trajectories.  Any formula change
here must be applied to ``_stepcore_py`` as well.
"""

import numpy as np

from libc.math cimport floor

KIND_QUADRATIC = 0
KIND_LINEAR = 1
KIND_TABULATED = 2


cdef inline double _velocity_scalar(int kind, double p0, double p1,
                                    double p2, double p3,
                                    const double[::1] table_x,
                                    const double[::1] table_f,
                                    double g) noexcept nogil:
    cdef double gt, u, w, two_l
    cdef Py_ssize_t n, lo, hi, mid, idx
    if kind == 0:  # quadratic-clamped: p = (k, beta, alpha, gap_ref)
        two_l = 2.0 * p3
        gt = g
        if gt < 0.0:
            gt = 0.0
        if gt > two_l:
            gt = two_l
        u = gt - p3
        return p0 + p1 * u * u + p2 * u
    if kind == 1:  # linear-clamped: p = (slope, lo, hi, intercept)
        gt = g
        if gt < p1:
            gt = p1
        if gt > p2:
            gt = p2
        return p3 + p0 * gt
    # tabulated: binary search replicating searchsorted(side="right") - 1
    n = table_x.shape[0]
    lo = 0
    hi = n
    while lo < hi:
        mid = (lo + hi) // 2
        if table_x[mid] <= g:
            lo = mid + 1
        else:
            hi = mid
    idx = lo - 1
    if idx < 0:
        idx = 0
    if idx > n - 2:
        idx = n - 2
    w = (g - table_x[idx]) / (table_x[idx + 1] - table_x[idx])
    if w < 0.0:
        w = 0.0
    if w > 1.0:
        w = 1.0
    return (1.0 - w) * table_f[idx] + w * table_f[idx + 1]


def velocity_values(kind, p, table_x, table_f, g):
    """Apply the velocity law elementwise to gap array ``g``."""
    cdef int ckind = kind
    cdef double p0 = p[0], p1 = p[1], p2 = p[2], p3 = p[3]
    g_arr = np.ascontiguousarray(g, dtype=np.float64)
    shape = g_arr.shape
    flat = g_arr.reshape(-1)
    out_arr = np.empty_like(flat)
    cdef const double[::1] gv = flat
    cdef double[::1] ov = out_arr
    cdef const double[::1] tx = np.ascontiguousarray(table_x, dtype=np.float64)
    cdef const double[::1] tf = np.ascontiguousarray(table_f, dtype=np.float64)
    cdef Py_ssize_t i
    with nogil:
        for i in range(gv.shape[0]):
            ov[i] = _velocity_scalar(ckind, p0, p1, p2, p3, tx, tf, gv[i])
    return out_arr.reshape(shape)


def compute_speeds(gap, tau_steps, c0, c1, hist_max, kind, p,
                   table_x, table_f, d_count):
    """Integrand samples F(gap_d(t - tau_d)) on grid columns c0..c1.

    Same contract as ``_stepcore_py.compute_speeds``.
    """
    cdef const double[:, ::1] gv = gap
    cdef const double[::1] tsv = tau_steps
    cdef const double[::1] tx = np.ascontiguousarray(table_x, dtype=np.float64)
    cdef const double[::1] tf = np.ascontiguousarray(table_f, dtype=np.float64)
    cdef Py_ssize_t cc0 = c0, cc1 = c1, hmax = hist_max, dd = d_count
    cdef int ckind = kind
    cdef double p0 = p[0], p1 = p[1], p2 = p[2], p3 = p[3]
    cdef Py_ssize_t n_cols = cc1 - cc0 + 1
    out_arr = np.empty((dd, n_cols), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t d, m, base
    cdef double ts, q, w, gd
    with nogil:
        for d in range(dd):
            ts = tsv[d]
            for m in range(n_cols):
                q = <double> (cc0 + m) - ts
                base = <Py_ssize_t> floor(q)
                if base < 0:
                    base = 0
                if base > hmax - 1:
                    base = hmax - 1
                w = q - <double> base
                if w < 0.0:
                    w = 0.0
                if w > 1.0:
                    w = 1.0
                gd = (1.0 - w) * gv[d, base] + w * gv[d, base + 1]
                out[d, m] = _velocity_scalar(ckind, p0, p1, p2, p3, tx, tf, gd)
    return out_arr
