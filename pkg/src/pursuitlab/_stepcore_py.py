"""Pure NumPy stepping kernel (fallback backend).

This module is the reference implementation of the hot inner loop of the
method-of-steps integrator: sampling the delayed gap history and applying
the velocity law.  The compiled kernel in ``_stepcore.pyx`` mirrors every
arithmetic expression here -- same operation order, no fused multiply-adds
-- so that the two backends produce bit-identical trajectories.  Any change
to a formula in one file must be made in the other.
"""

import numpy as np

KIND_QUADRATIC = 0
KIND_LINEAR = 1
KIND_TABULATED = 2


def velocity_values(kind, p, table_x, table_f, g):
    """Apply the velocity law elementwise to gap array ``g``."""
    if kind == KIND_QUADRATIC:
        k, beta, alpha, gap_ref = p
        gt = np.clip(g, 0.0, 2.0 * gap_ref)
        u = gt - gap_ref
        return k + beta * u * u + alpha * u
    if kind == KIND_LINEAR:
        slope, lo, hi, intercept = p
        return intercept + slope * np.clip(g, lo, hi)
    idx = np.searchsorted(table_x, g, side="right") - 1
    idx = np.clip(idx, 0, table_x.size - 2)
    w = (g - table_x[idx]) / (table_x[idx + 1] - table_x[idx])
    w = np.clip(w, 0.0, 1.0)
    return (1.0 - w) * table_f[idx] + w * table_f[idx + 1]


def compute_speeds(gap, tau_steps, c0, c1, hist_max, kind, p,
                   table_x, table_f, d_count):
    """Integrand samples F(gap_d(t - tau_d)) on grid columns c0..c1.

    ``gap`` is the (drivers, columns) gap history, committed through column
    ``hist_max``; ``tau_steps`` holds each driver's delay in (fractional)
    grid steps.  Delayed values are linear interpolations of the committed
    history; gather indices are clamped to [0, hist_max] so float rounding
    of tau/dt can never touch an uncommitted column.  Returns a
    (d_count, c1-c0+1) array of speeds.
    """
    cols = np.arange(c0, c1 + 1, dtype=np.float64)
    q = cols[None, :] - tau_steps[:d_count, None]
    base = np.floor(q).astype(np.intp)
    np.clip(base, 0, hist_max - 1, out=base)
    w = q - base
    np.clip(w, 0.0, 1.0, out=w)
    rows = np.arange(d_count)[:, None]
    g0 = gap[rows, base]
    g1 = gap[rows, base + 1]
    gd = (1.0 - w) * g0 + w * g1
    return velocity_values(kind, p, table_x, table_f, gd)
