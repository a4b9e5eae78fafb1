"""Method-of-steps integration of the delayed pursuit system.

With reaction delays bounded below by xi > 0, the right-hand side of

    X_i'(t) = F( X_{i+1}(t - tau_i) - X_i(t - tau_i) )

over one commit interval (k*xi, (k+1)*xi] only reads history up to k*xi,
which is already committed.  Each interval is therefore an ordinary
quadrature of a known integrand: positions advance by the composite
trapezoid rule on a uniform grid of step dt (dt must divide xi), with
linear interpolation for delayed lookups that fall between grid samples.
The scheme is second-order accurate and, because intervals are committed
atomically, two integrations of the same scenario are bit-identical --
whichever stepping backend is active.

Two truncations close the infinite chain:

* ``periodic`` -- N stored drivers with the closure X_{i+N} = X_i + P.
  Exact for index-periodic data (the shifted solution solves the same
  system and uniqueness forces X_{i+N} = X_i + P for all time).
* ``cone`` -- drivers lo..hi are advanced exactly by storing the
  dependency cone above them: ceil(T/xi)+1 extra drivers whose initial
  data must exist, each advanceable through one interval fewer than the
  driver below it.

Gap histories are maintained incrementally next to positions so the hot
kernel performs a single gather per delayed lookup.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _backend
from .defaults import LOOKUP_RTOL
from .errors import (ConfigurationError, DomainError, NumericError,
                     RangeError, ValidationError)
from .model import Scenario, validate_scenario

# Slack, in grid-column units, accepted when range-checking time queries
# and when snapping a query onto a sample column (keeps lookups exact at
# sample points despite t/dt rounding).
_COL_SLACK = 1e-5
_COL_SNAP = 1e-9


def _ceil_steps(ratio):
    """ceil with protection against float rounding just above an integer."""
    slack = max(1e-9, 1e-11 * abs(ratio))
    return int(math.ceil(ratio - slack))


@dataclass
class GapSeries:
    """Gap trajectory X_{i+1} - X_i sampled on the committed grid."""

    driver: int
    times: np.ndarray
    values: np.ndarray


class _State:
    """Mutable integration state; owned by exactly one TrajectorySet."""

    __slots__ = ("pos", "gap", "tau_steps", "dt", "n_sub", "n_init",
                 "kind", "p", "tx", "tf", "mode", "period", "lo", "D",
                 "min_rows", "committed_cols", "k_full", "epsilon",
                 "c_f", "f_sup")

    def copy(self):
        new = _State()
        for name in self.__slots__:
            v = getattr(self, name)
            if isinstance(v, np.ndarray) and name in ("pos", "gap"):
                v = v.copy()
            setattr(new, name, v)
        return new


def _setup(s: Scenario, epsilon: float) -> _State:
    st = _State()
    st.epsilon = epsilon
    st.c_f, st.f_sup = s.velocity.lipschitz_data()
    st.kind, st.p, st.tx, st.tf = s.velocity.kernel_spec()
    xi = s.delay.tau_min
    tau = s.delay.tau_max
    st.dt = s.dt
    st.n_sub = int(round(xi / s.dt))
    st.n_init = _ceil_steps(2.0 * tau / s.dt)
    n_steps = _ceil_steps(s.horizon / s.dt)
    n_intervals = -(-n_steps // st.n_sub)

    tr = s.truncation
    if tr.mode == "periodic":
        st.mode = "periodic"
        st.period = tr.period
        st.lo = 0
        st.D = tr.drivers
        st.min_rows = tr.drivers
    else:
        st.mode = "cone"
        st.period = 0.0
        st.lo = tr.lo
        top = tr.hi + n_intervals + 1
        st.D = top - tr.lo + 1
        st.min_rows = tr.hi - tr.lo + 1  # rows that must advance every interval

    drivers = st.lo + np.arange(st.D)
    tau_d = np.asarray(s.delay.value(drivers * epsilon), dtype=float)
    st.tau_steps = np.ascontiguousarray(tau_d / s.dt)

    n_cols = st.n_init + n_steps + 1
    st.pos = np.empty((st.D, n_cols), dtype=np.float64)
    st.gap = np.empty((st.D, n_cols), dtype=np.float64)

    t_init = (np.arange(st.n_init + 1) - st.n_init) * s.dt
    try:
        st.pos[:, :st.n_init + 1] = s.initial.position(drivers, t_init,
                                                       epsilon)
    except (DomainError, RangeError) as exc:
        raise ConfigurationError(
            f"initial data insufficient for this run: {exc}  "
            f"(drivers [{st.lo}, {st.lo + st.D - 1}] must be defined back "
            f"to t={-st.n_init * s.dt})") from exc

    bad = ~np.isfinite(st.pos[:, :st.n_init + 1])
    if bad.any():
        c = int(np.argmax(bad.any(axis=0)))
        r = int(np.argmax(bad[:, c]))
        raise NumericError(
            f"non-finite initial position: driver {st.lo + r} at "
            f"t={(c - st.n_init) * s.dt}")

    init = slice(0, st.n_init + 1)
    if st.mode == "periodic":
        _update_gaps_periodic(st, init)
    else:
        st.gap[:st.D - 1, init] = st.pos[1:, init] - st.pos[:st.D - 1, init]
        st.gap[st.D - 1, init] = np.nan  # top driver has no stored leader
    st.committed_cols = st.n_init + 1
    st.k_full = 0
    return st


def _update_gaps_periodic(st, cols):
    if st.D > 1:
        st.gap[:st.D - 1, cols] = st.pos[1:, cols] - st.pos[:st.D - 1, cols]
    st.gap[st.D - 1, cols] = st.pos[0, cols] + st.period - st.pos[st.D - 1,
                                                                  cols]


def _advance(st: _State, n_steps: int):
    """Commit intervals until column n_init + n_steps is valid.

    A trailing partial interval is recomputed from its start on resume so
    that stop-and-extend reproduces a straight run bit for bit.
    """
    target = st.n_init + n_steps
    if target + 1 > st.pos.shape[1]:
        extra = target + 1 - st.pos.shape[1]
        pad = np.empty((st.D, extra), dtype=np.float64)
        st.pos = np.ascontiguousarray(np.concatenate([st.pos, pad], axis=1))
        st.gap = np.ascontiguousarray(np.concatenate([st.gap, pad.copy()],
                                                     axis=1))
        if st.mode == "cone":
            st.gap[st.D - 1, -extra:] = np.nan
    k = st.k_full
    while st.n_init + k * st.n_sub < target:
        c0 = st.n_init + k * st.n_sub
        c1 = min(c0 + st.n_sub, target)
        if st.mode == "periodic":
            d_count = st.D
        else:
            d_count = st.D - 1 - k
            if d_count < st.min_rows:
                raise ConfigurationError(
                    "cone truncation exhausted: advancing all requested "
                    f"drivers through interval {k} needs initial data for "
                    f"drivers up to {st.lo + st.min_rows + k}, but the cone "
                    f"stops at {st.lo + st.D - 1}")
        speeds = _backend.compute_speeds(st.gap, st.tau_steps, c0, c1, c0,
                                         st.kind, st.p, st.tx, st.tf,
                                         d_count)
        inc = 0.5 * st.dt * (speeds[:, :-1] + speeds[:, 1:])
        np.cumsum(inc, axis=1, out=inc)
        st.pos[:d_count, c0 + 1:c1 + 1] = \
            st.pos[:d_count, c0][:, None] + inc

        block = st.pos[:d_count, c0 + 1:c1 + 1]
        bad = ~np.isfinite(block)
        if bad.any():
            c = int(np.argmax(bad.any(axis=0)))
            r = int(np.argmax(bad[:, c]))
            raise NumericError(
                f"non-finite position: driver {st.lo + r} at "
                f"t={(c0 + 1 + c - st.n_init) * st.dt}")

        cols = slice(c0 + 1, c1 + 1)
        if st.mode == "periodic":
            _update_gaps_periodic(st, cols)
        else:
            ng = d_count - 1
            if ng > 0:
                st.gap[:ng, cols] = st.pos[1:ng + 1, cols] - st.pos[:ng,
                                                                    cols]
        if c1 == c0 + st.n_sub:
            k += 1
            st.k_full = k
        else:
            break
    st.committed_cols = target + 1


class TrajectorySet:
    """Committed driver trajectories on the uniform sample grid.

    Instances are immutable: :meth:`extend` returns a new set.  Lookups
    are exact at sample points and linear in between, matching the
    interpolation the integrator itself uses for delayed reads.
    """

    def __init__(self, state: _State, scenario: Scenario, lo: int, hi: int):
        self._state = state
        self.scenario = scenario
        self.driver_lo = lo      # smallest fully committed driver index
        self.driver_hi = hi      # largest (periodic sets wrap beyond)
        n_visible = hi - lo + 1
        self._frozen_view = state.pos[:n_visible, :state.committed_cols]
        self._frozen_view.flags.writeable = False

    # -- basic properties ---------------------------------------------------

    @property
    def dt(self):
        return self._state.dt

    @property
    def epsilon(self):
        return self._state.epsilon

    @property
    def mode(self):
        return self._state.mode

    @property
    def f_sup(self):
        return self._state.f_sup

    @property
    def step_length(self):
        """Commit-interval length xi in time units."""
        return self._state.n_sub * self._state.dt

    @property
    def committed_until(self):
        st = self._state
        return (st.committed_cols - 1 - st.n_init) * st.dt

    @property
    def positions(self):
        """Read-only (drivers, columns) view of committed samples."""
        return self._frozen_view

    def times(self):
        st = self._state
        return (np.arange(st.committed_cols) - st.n_init) * st.dt

    def drivers(self):
        return np.arange(self.driver_lo, self.driver_hi + 1)

    # -- lookups ------------------------------------------------------------

    def _columns(self, t):
        st = self._state
        t = np.asarray(t, dtype=float)
        q = t / st.dt + st.n_init
        qr = np.round(q)
        snap = np.abs(q - qr) <= _COL_SNAP * np.maximum(1.0, np.abs(qr))
        q = np.where(snap, qr, q)
        last = st.committed_cols - 1
        if (q < -_COL_SLACK).any() or (q > last + _COL_SLACK).any():
            t_bad = float(np.asarray(t).ravel()[
                int(np.argmax((q < -_COL_SLACK) | (q > last + _COL_SLACK)))])
            raise RangeError(
                f"time {t_bad} outside committed range "
                f"[{-st.n_init * st.dt}, {self.committed_until}]")
        q = np.clip(q, 0.0, float(last))
        base = np.floor(q).astype(np.intp)
        np.clip(base, 0, last - 1, out=base)
        w = q - base
        np.clip(w, 0.0, 1.0, out=w)
        return base, w

    def _rows(self, i):
        st = self._state
        i = np.asarray(i)
        if not np.issubdtype(i.dtype, np.integer):
            raise DomainError("driver indices must be integers")
        if st.mode == "periodic":
            rows = np.mod(i, st.D)
            shift = ((i - rows) // st.D) * st.period
            return rows.astype(np.intp), shift
        if (i < self.driver_lo).any() or (i > self.driver_hi).any():
            raise RangeError(
                f"driver index outside committed range "
                f"[{self.driver_lo}, {self.driver_hi}]")
        return (i - st.lo).astype(np.intp), np.zeros(i.shape)

    def position(self, i, t):
        """Position of driver(s) ``i`` at time(s) ``t`` (broadcasting)."""
        scalar = np.isscalar(i) and np.isscalar(t)
        i = np.atleast_1d(np.asarray(i))
        t = np.atleast_1d(np.asarray(t, dtype=float))
        rows, shift = self._rows(i)
        base, w = self._columns(t)
        st = self._state
        p0 = st.pos[rows[:, None], base[None, :]]
        p1 = st.pos[rows[:, None], base[None, :] + 1]
        out = (1.0 - w[None, :]) * p0 + w[None, :] * p1 + shift[:, None]
        return float(out[0, 0]) if scalar else out

    def gap_series(self, i, t_lo=None, t_hi=None):
        """Gap X_{i+1} - X_i at every committed sample in [t_lo, t_hi]."""
        times = self.times()
        mask = np.ones(times.size, dtype=bool)
        if t_lo is not None:
            mask &= times >= t_lo - LOOKUP_RTOL
        if t_hi is not None:
            mask &= times <= t_hi + LOOKUP_RTOL
        times = times[mask]
        upper = self.position(np.array([i + 1]), times)[0]
        lower = self.position(np.array([i]), times)[0]
        return GapSeries(i, times, upper - lower)

    # -- continuation -------------------------------------------------------

    def extend(self, horizon):
        """New TrajectorySet committed through ``horizon``.

        Bit-identical to integrating the scenario straight to ``horizon``:
        resuming recomputes any trailing partial interval from its start,
        and committed history is never revised.
        """
        if horizon < self.committed_until - LOOKUP_RTOL * self.dt:
            raise ConfigurationError(
                f"extend target {horizon} precedes committed time "
                f"{self.committed_until}")
        st = self._state.copy()
        n_steps = _ceil_steps(horizon / st.dt)
        _advance(st, n_steps)
        s2 = replace(self.scenario, horizon=horizon)
        return TrajectorySet(st, s2, self.driver_lo, self.driver_hi)

    # -- export -------------------------------------------------------------

    def to_csv(self, f):
        """Write committed samples as ``t,i,x`` rows, time-major, with 17
        significant digits."""
        close = False
        if isinstance(f, (str, bytes)):
            f = open(f, "w")
            close = True
        try:
            f.write("t,i,x\n")
            times = self.times()
            drivers = self.drivers()
            vals = self.position(drivers, times)
            for c, t in enumerate(times):
                for r, i in enumerate(drivers):
                    f.write(f"{t:.17g},{int(i)},{vals[r, c]:.17g}\n")
        finally:
            if close:
                f.close()


def integrate(s: Scenario, epsilon: float = 1.0) -> TrajectorySet:
    """Integrate scenario ``s`` through its horizon.

    Raises :class:`ValidationError` (carrying the full report) when the
    scenario violates an invariant, :class:`ConfigurationError` when the
    truncation cannot support the horizon, and :class:`NumericError` on
    non-finite data, naming the first offending driver and time.
    """
    report = validate_scenario(s, epsilon)
    if not report.ok:
        raise ValidationError(
            "scenario invalid:\n  " + "\n  ".join(report.violations), report)
    st = _setup(s, epsilon)
    n_steps = _ceil_steps(s.horizon / s.dt)
    _advance(st, n_steps)
    if st.mode == "periodic":
        lo, hi = 0, st.D - 1
    else:
        lo, hi = s.truncation.lo, s.truncation.hi
    return TrajectorySet(st, s, lo, hi)


def lookup(ts: TrajectorySet, i, t):
    """Module-level alias for :meth:`TrajectorySet.position`."""
    return ts.position(i, t)


def gap_series(ts: TrajectorySet, i, t_lo=None, t_hi=None):
    """Module-level alias for :meth:`TrajectorySet.gap_series`."""
    return ts.gap_series(i, t_lo, t_hi)
