"""Strict comparison audits for pairs of discrete solution fields.

The delayed pursuit law propagates strict ordering: if a super-solution
``v`` and sub-solution ``u`` are separated on an initial window and the
separation has not grown too fast into the past -- quantified by an
admissible spacing function rho -- then the separation persists, decaying
at worst exponentially:

    boundary   v >= u on the annulus R <= |x - x0| <= R+1, t in [t0-tau, T)
               (vacuous when the radius is infinite);
    initial    delta <= (v-u)(x, t - tau') <= rho(tau') * (v-u)(x, t)
               for |x - x0| <= R, t in [t0-tau, t0], tau' in [0, tau]
               (so the initial window reaches back to t0 - 2*tau);
    bound      (v-u)(x, t) >= delta * exp(-C_F * rho(tau) * (t - t0))
               for |x - x0| <= R, t in [t0, T).

Fields are sampled on a shared (stations x times) grid -- microscopic
trajectories become fields via X_i(t) viewed at station i -- and audits
interpolate linearly in time, the same rule the integrator itself uses.

Above the admissibility threshold the bound genuinely fails: an explicit
two-family construction (uniformly spaced drivers approaching a chain with
one compressed slot) lets the follower overtake, with a closed-form
overtake margin used as an oracle by :func:`overtake_margin`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .defaults import TAU_GRID_POINTS
from .errors import ConfigurationError, DomainError
from .thresholds import SpacingFunction, certify

_GRID_ATOL = 1e-12
_SEL_TOL = 1e-9


@dataclass(frozen=True)
class ComparisonWindow:
    """Where and with which constants a comparison audit runs.

    ``radius=None`` means the infinite-radius variant: the boundary
    condition is vacuous and the core is every sampled station.
    """

    delta: float
    t0: float
    horizon: float
    rho: SpacingFunction
    x0: float = 0.0
    radius: float | None = None

    def __post_init__(self):
        if not self.delta > 0:
            raise DomainError(f"delta must be positive, got {self.delta}")
        if not self.horizon > self.t0:
            raise DomainError("window horizon must exceed t0")
        if self.radius is not None and self.radius < 0:
            raise DomainError("radius must be nonnegative or None")


@dataclass
class SampledField:
    """A field sampled on stations ``x`` (rows) and times ``t`` (columns)."""

    x: np.ndarray
    t: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.t = np.asarray(self.t, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.x.size, self.t.size):
            raise DomainError("field values must have shape "
                              "(stations, times)")
        if self.t.size < 2 or (np.diff(self.t) <= 0).any():
            raise DomainError("field times must be strictly increasing "
                              "with at least 2 samples")

    @classmethod
    def from_trajectories(cls, ts, stations, times, index_shift=0):
        """Sample trajectories as a field; ``index_shift`` reads driver
        i+shift at station i (for shifted-solution comparisons)."""
        stations = np.asarray(stations)
        times = np.asarray(times, dtype=float)
        vals = ts.position(stations + index_shift, times)
        return cls(stations.astype(float), times, vals)

    def at_times(self, query):
        """Linear interpolation along time; (stations, len(query))."""
        q = np.asarray(query, dtype=float)
        span = max(1.0, float(self.t[-1] - self.t[0]))
        if float(q.min()) < self.t[0] - _SEL_TOL * span or \
                float(q.max()) > self.t[-1] + _SEL_TOL * span:
            raise ConfigurationError(
                f"field sampled on [{self.t[0]}, {self.t[-1]}] queried at "
                f"[{float(q.min())}, {float(q.max())}]")
        idx = np.searchsorted(self.t, q, side="right") - 1
        idx = np.clip(idx, 0, self.t.size - 2)
        w = (q - self.t[idx]) / (self.t[idx + 1] - self.t[idx])
        w = np.clip(w, 0.0, 1.0)
        return (1.0 - w)[None, :] * self.values[:, idx] + \
            w[None, :] * self.values[:, idx + 1]


def _require_same_grid(v, u):
    if v.x.shape != u.x.shape or v.t.shape != u.t.shape or \
            float(np.max(np.abs(v.x - u.x), initial=0.0)) > _GRID_ATOL or \
            float(np.max(np.abs(v.t - u.t), initial=0.0)) > _GRID_ATOL:
        raise ConfigurationError("fields are sampled on different grids")


@dataclass
class HypothesisCheck:
    """Outcome of the boundary and initial spacing conditions."""

    boundary_ok: bool | None          # None: vacuous (infinite radius)
    initial_ok: bool
    min_separation: float
    worst_ratio_margin: float         # min of rho(tau')*d(t) - d(t-tau')
    boundary_witness: tuple | None    # (station, t)
    initial_witness: tuple | None     # (station, t, tau', condition)

    @property
    def ok(self):
        return (self.boundary_ok is not False) and self.initial_ok


def check_spacing_hypothesis(v: SampledField, u: SampledField,
                             w: ComparisonWindow,
                             tau_points: int = TAU_GRID_POINTS):
    """Audit the boundary ordering and the two-sided initial spacing
    condition on the shared sample grid."""
    _require_same_grid(v, u)
    if tau_points < 16:
        raise ConfigurationError(
            f"tau' grid needs at least 16 points, got {tau_points}")
    rho = w.rho
    tau = rho.tau
    x, t = v.x, v.t
    diff = v.values - u.values

    boundary_ok = None
    boundary_witness = None
    if w.radius is not None and math.isfinite(w.radius):
        rdist = np.abs(x - w.x0)
        ann = (rdist >= w.radius - _SEL_TOL) & \
              (rdist <= w.radius + 1.0 + _SEL_TOL)
        tmask = (t >= w.t0 - tau - _SEL_TOL) & (t < w.horizon)
        if not ann.any() or not tmask.any():
            raise ConfigurationError(
                "field does not sample the boundary annulus "
                f"R <= |x - {w.x0}| <= R+1 with R={w.radius}")
        sub = diff[np.ix_(ann, tmask)]
        neg = sub < 0.0
        boundary_ok = not neg.any()
        if not boundary_ok:
            cols = np.argwhere(neg.any(axis=0))
            c = int(cols[0])
            r = int(np.argmax(neg[:, c]))
            boundary_witness = (float(x[ann][r]), float(t[tmask][c]))
        core = rdist <= w.radius + _SEL_TOL
    else:
        core = np.ones(x.size, dtype=bool)

    if not core.any():
        raise ConfigurationError("no stations inside the comparison core")
    span = max(1.0, float(t[-1] - t[0]))
    if t[0] > w.t0 - 2.0 * tau + _SEL_TOL * span:
        raise ConfigurationError(
            f"initial spacing audit needs samples back to t0 - 2*tau = "
            f"{w.t0 - 2.0 * tau}, field starts at {t[0]}")
    base = (t >= w.t0 - tau - _SEL_TOL) & (t <= w.t0 + _SEL_TOL)
    if not base.any():
        raise ConfigurationError("no samples in the initial window "
                                 f"[{w.t0 - tau}, {w.t0}]")

    base_t = t[base]
    dfield = SampledField(x, t, diff)
    d_now = diff[np.ix_(core, base)]
    taus = np.linspace(0.0, tau, tau_points)
    core_x = x[core]

    min_sep = float(d_now.min())
    worst_margin = math.inf
    failures = []
    for tp in taus:
        d_shift = dfield.at_times(base_t - tp)[core]
        rho_tp = float(rho.value(tp))
        low_bad = d_shift < w.delta
        high_bad = d_shift > rho_tp * d_now
        min_sep = min(min_sep, float(d_shift.min()))
        worst_margin = min(worst_margin,
                           float((rho_tp * d_now - d_shift).min()))
        for kind, bad in (("separation below delta", low_bad),
                          ("growth above rho", high_bad)):
            if bad.any():
                for r, c in np.argwhere(bad):
                    failures.append((float(base_t[c]), float(core_x[r]),
                                     float(tp), kind))
    initial_ok = not failures
    initial_witness = None
    if failures:
        failures.sort(key=lambda rec: (rec[0], rec[1], rec[2]))
        t_bad, x_bad, tp_bad, kind = failures[0]
        initial_witness = (x_bad, t_bad, tp_bad, kind)
    return HypothesisCheck(boundary_ok, initial_ok, min_sep, worst_margin,
                           boundary_witness, initial_witness)


@dataclass
class AuditReport:
    """Full audit: hypothesis flags, certificate, and the decay bound."""

    boundary_ok: bool | None
    initial_ok: bool
    spacing_ok: bool
    conclusion_ok: bool
    min_slack: float
    first_violation: tuple | None     # (station, t)
    violations: list = field(default_factory=list)  # (station, t, gap)
    hypothesis: HypothesisCheck | None = None
    certificate: object = None

    @property
    def hypotheses_ok(self):
        return ((self.boundary_ok is not False) and self.initial_ok
                and self.spacing_ok)

    def to_json_dict(self):
        return {
            "hypothesis_ok": {
                "boundary": self.boundary_ok,
                "initial": self.initial_ok,
                "spacing": self.spacing_ok,
            },
            "conclusion_ok": self.conclusion_ok,
            "min_slack": self.min_slack,
            "first_violation": (list(self.first_violation)
                                if self.first_violation else None),
        }

    def to_json(self):
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2)

    def write_violations_csv(self, f):
        """Rows ``i,t,gap`` for every node violating the decay bound,
        ordered by (t, i), 17 significant digits."""
        close = False
        if isinstance(f, (str, bytes)):
            f = open(f, "w")
            close = True
        try:
            f.write("i,t,gap\n")
            for xv, tv, gv in sorted(self.violations,
                                     key=lambda rec: (rec[1], rec[0])):
                i_txt = str(int(xv)) if float(xv).is_integer() else \
                    f"{xv:.17g}"
                f.write(f"{i_txt},{tv:.17g},{gv:.17g}\n")
        finally:
            if close:
                f.close()


def check_separation_bound(v: SampledField, u: SampledField,
                           w: ComparisonWindow, hypothesis=None,
                           certificate=None,
                           tau_points: int = TAU_GRID_POINTS):
    """Audit the exponential separation bound on [t0, horizon).

    Checks the hypotheses first (unless given pre-computed results; the
    caller decides whether a failed hypothesis still warrants running the
    conclusion scan -- it always runs here, since a violated conclusion
    under *held* hypotheses is the interesting contradiction).
    """
    _require_same_grid(v, u)
    if hypothesis is None:
        hypothesis = check_spacing_hypothesis(v, u, w, tau_points)
    if certificate is None:
        certificate = certify(w.rho, max(16, tau_points))
    rho = w.rho
    x, t = v.x, v.t
    diff = v.values - u.values
    if w.radius is not None and math.isfinite(w.radius):
        core = np.abs(x - w.x0) <= w.radius + _SEL_TOL
    else:
        core = np.ones(x.size, dtype=bool)
    tmask = (t >= w.t0 - _SEL_TOL) & (t < w.horizon)
    if not tmask.any():
        raise ConfigurationError(
            f"no samples in the conclusion window [{w.t0}, {w.horizon})")
    t_sel = t[tmask]
    bound = w.delta * np.exp(-rho.c_f * float(rho.value(rho.tau))
                             * (t_sel - w.t0))
    sub = diff[np.ix_(core, tmask)]
    slack = sub - bound[None, :]
    min_slack = float(slack.min())
    viol_idx = np.argwhere(slack < 0.0)
    violations = [(float(x[core][r]), float(t_sel[c]), float(sub[r, c]))
                  for r, c in viol_idx]
    first = None
    if violations:
        ordered = sorted(violations, key=lambda rec: (rec[1], rec[0]))
        first = (ordered[0][0], ordered[0][1])
    return AuditReport(hypothesis.boundary_ok, hypothesis.initial_ok,
                       bool(certificate.holds), not violations, min_slack,
                       first, violations, hypothesis, certificate)


def order_conservation_audit(ts):
    """Earliest order crossing X_{i+1}(t) <= X_i(t), or None.

    Scans every committed sample (initial window included) over the
    visible drivers; periodic sets include the wrap gap.  Ties resolve
    to the smallest driver index at the earliest sample, independent of
    any evaluation order.
    """
    times = ts.times()
    if ts.mode == "periodic":
        idx = np.arange(ts.driver_lo, ts.driver_hi + 2)
        ids = idx[:-1]
    else:
        idx = np.arange(ts.driver_lo, ts.driver_hi + 1)
        ids = idx[:-1]
        if ids.size == 0:
            return None
    pos = ts.position(idx, times)
    gaps = pos[1:] - pos[:-1]
    bad = gaps <= 0.0
    if not bad.any():
        return None
    c = int(np.argmax(bad.any(axis=0)))
    r = int(np.argmax(bad[:, c]))
    return int(ids[r]), float(times[c])


def overtake_margin(n0: int, tau: float):
    """Closed-form overtake margin of the order-disruption construction.

    For integer growth rate n0 >= 1 and delay tau > 2/n0, the lower
    family's driver j passes the upper family's driver j by exactly

        (n0*tau - 2 + exp(-n0*tau)) / (n0 + 1)

    at time tau (both families evolve on committed history only up to
    then, so the margin is a pure quadrature of initial data).
    """
    if not isinstance(n0, (int, np.integer)) or isinstance(n0, bool) or \
            n0 < 1:
        raise DomainError(f"n0 must be a positive integer, got {n0!r}")
    if not tau > 2.0 / n0:
        raise DomainError(
            f"overtake requires tau > 2/n0 = {2.0 / n0}, got {tau}")
    return (n0 * tau - 2.0 + math.exp(-n0 * tau)) / (n0 + 1.0)
