"""Macroscopic limit solver: first-order Hamilton-Jacobi marching.

In the hydrodynamic scaling the driver label becomes a continuous
station x and the rescaled positions solve

    du/dt = F(du/dx),

with the same velocity law F the microscopic model uses.  The scheme is
explicit upwind in the direction information actually travels (each
driver reacts to the one ahead, i.e. to larger x):

    u_j^{n+1} = u_j^n + dt * F((u_{j+1}^n - u_j^n) / dx).

With F nondecreasing and Lipschitz (constant C_F) the scheme is monotone
under the step bound dt * C_F <= dx (equality allowed), which yields
discrete comparison, preservation of slope bounds, and invariance under
adding constants -- the properties the audit tests pin down.

The right edge has no neighbour ahead; its ghost node extends the
*initial* edge slope, frozen in time, so plane-wave data propagates
exactly and the interior cone of determinacy (nodes with j + n <= nx-1)
never sees the boundary at all.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .defaults import DIVISIBILITY_RTOL
from .errors import ConfigurationError, DomainError, RangeError

_CFL_SLACK = 1e-12
_POS_TOL = 1e-9


def _steps(span: float, h: float, what: str) -> int:
    q = span / h
    n = int(round(q))
    if n < 1 or abs(q - n) > DIVISIBILITY_RTOL * max(1.0, abs(q)):
        raise ConfigurationError(
            f"{what}={h} must divide the span {span} a whole number of "
            f"times (got {q})")
    return n


@dataclass
class FieldGrid:
    """A macroscopic field on a uniform space-time grid.

    ``values[n, j]`` is the field at time t0 + n*dt, station x0 + j*dx.
    """

    x0: float
    dx: float
    nx: int
    t0: float
    dt: float
    nt: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.nt, self.nx):
            raise DomainError("field values must have shape (nt, nx)")

    def xgrid(self):
        return self.x0 + self.dx * np.arange(self.nx)

    def tgrid(self):
        return self.t0 + self.dt * np.arange(self.nt)

    @property
    def x1(self):
        return self.x0 + self.dx * (self.nx - 1)

    @property
    def t1(self):
        return self.t0 + self.dt * (self.nt - 1)

    def _axis_query(self, q, h, last, what):
        q = (np.asarray(q, dtype=float) - (self.x0 if what == "x"
                                           else self.t0)) / h
        qr = np.round(q)
        snap = np.abs(q - qr) <= _POS_TOL * np.maximum(1.0, np.abs(qr))
        q = np.where(snap, qr, q)
        if (q < -_POS_TOL).any() or (q > last + _POS_TOL).any():
            raise RangeError(f"{what} query outside the grid")
        q = np.clip(q, 0.0, float(last))
        base = np.minimum(np.floor(q).astype(np.intp), last - 1)
        return base, q - base

    def value_at(self, x, t):
        """Bilinear interpolation; broadcasts ``x`` against ``t``."""
        scalar = np.isscalar(x) and np.isscalar(t)
        jb, jw = self._axis_query(x, self.dx, self.nx - 1, "x")
        nb, nw = self._axis_query(t, self.dt, self.nt - 1, "t")
        jb, nb = np.broadcast_arrays(jb, nb)
        jw, nw = np.broadcast_arrays(jw, nw)
        v00 = self.values[nb, jb]
        v01 = self.values[nb, jb + 1]
        v10 = self.values[nb + 1, jb]
        v11 = self.values[nb + 1, jb + 1]
        out = ((1 - nw) * ((1 - jw) * v00 + jw * v01)
               + nw * ((1 - jw) * v10 + jw * v11))
        return float(out) if scalar else out

    def determinacy_mask(self):
        """True where the node never depended on the ghost boundary."""
        n = np.arange(self.nt)[:, None]
        j = np.arange(self.nx)[None, :]
        return j + n <= self.nx - 1

    def to_csv(self, f):
        """Rows ``t,x,u`` in time-major order, 17 significant digits."""
        close = False
        if isinstance(f, (str, bytes)):
            f = open(f, "w")
            close = True
        try:
            f.write("t,x,u\n")
            xg = self.xgrid()
            tg = self.tgrid()
            for n in range(self.nt):
                for j in range(self.nx):
                    f.write(f"{tg[n]:.17g},{xg[j]:.17g},"
                            f"{self.values[n, j]:.17g}\n")
        finally:
            if close:
                f.close()


def solve_hj(velocity, initial, region, dx, dt=None):
    """March the macroscopic law over ``region = (x0, x1, t0, t1)``.

    ``initial`` is a callable x -> u(x, t0) or an array of nodal values.
    ``dt=None`` picks the largest stable step that divides the time span
    (dt * C_F = dx at most); an explicit ``dt`` must both divide the
    span and satisfy the stability bound, or the solve refuses to run
    rather than return a field whose comparison properties are void.
    """
    x0, x1, t0, t1 = (float(v) for v in region)
    if not x1 > x0 or not t1 > t0:
        raise DomainError(f"empty region {region}")
    if not dx > 0:
        raise DomainError(f"dx must be positive, got {dx}")
    c_f, _ = velocity.lipschitz_data()
    nx = _steps(x1 - x0, dx, "dx") + 1
    span = t1 - t0
    if dt is None:
        n_steps = max(1, int(np.ceil(span * c_f / dx - _CFL_SLACK)))
        dt = span / n_steps
    else:
        if not dt > 0:
            raise DomainError(f"dt must be positive, got {dt}")
        n_steps = _steps(span, dt, "dt")
    if dt * c_f > dx * (1.0 + _CFL_SLACK):
        raise ConfigurationError(
            f"unstable step: dt*C_F = {dt * c_f} exceeds dx = {dx}; "
            f"monotonicity requires dt <= {dx / c_f}")

    xg = x0 + dx * np.arange(nx)
    if callable(initial):
        u0 = np.asarray(initial(xg), dtype=float)
    else:
        u0 = np.asarray(initial, dtype=float)
    if u0.shape != (nx,):
        raise DomainError(
            f"initial profile has {u0.size} values, grid has {nx} nodes")
    if not np.isfinite(u0).all():
        raise DomainError("initial profile contains non-finite values")

    nt = n_steps + 1
    values = np.empty((nt, nx))
    values[0] = u0
    edge_slope = (u0[-1] - u0[-2]) / dx
    slopes = np.empty(nx)
    for n in range(n_steps):
        row = values[n]
        slopes[:-1] = (row[1:] - row[:-1]) / dx
        slopes[-1] = edge_slope
        values[n + 1] = row + dt * velocity.evaluate(slopes)
    return FieldGrid(x0, dx, nx, t0, dt, nt, values)


def sup_error(a: FieldGrid, b: FieldGrid, region=None):
    """Max |a - b| over a's nodes inside ``region`` and b's domain.

    ``b`` is read through bilinear interpolation at a's nodes, so the
    result is not symmetric in its arguments; pass the reference field
    second.  Raises if no node qualifies.
    """
    xa, ta = a.xgrid(), a.tgrid()
    xmask = (xa >= b.x0 - _POS_TOL) & (xa <= b.x1 + _POS_TOL)
    tmask = (ta >= b.t0 - _POS_TOL) & (ta <= b.t1 + _POS_TOL)
    if region is not None:
        x0, x1, t0, t1 = (float(v) for v in region)
        xmask &= (xa >= x0 - _POS_TOL) & (xa <= x1 + _POS_TOL)
        tmask &= (ta >= t0 - _POS_TOL) & (ta <= t1 + _POS_TOL)
    if not xmask.any() or not tmask.any():
        raise ConfigurationError(
            "fields share no sample nodes in the requested region")
    xs = xa[xmask]
    tsel = ta[tmask]
    av = a.values[np.ix_(tmask, xmask)]
    bv = b.value_at(xs[None, :], tsel[:, None])
    return float(np.max(np.abs(av - bv)))
