"""Hydrodynamic rescaling, convergence studies, and the drift obstruction.

The microscopic trajectories X_i(t) embed into a macroscopic field by the
hyperbolic change of variables

    u^eps(x, s) = eps * X_floor(x/eps)(s / eps),

piecewise constant in x (the floor rule) and sampled on the stations
x = i*eps.  Below the delay threshold the rescaled fields converge
locally uniformly to the Hamilton-Jacobi solution u0; a convergence
study measures sup|u^eps - u0| over a compact region for a decreasing
list of scales and classifies the trend.

Above the threshold the resonant oscillating family keeps the gaps
oscillating forever:

    X_{i+1}(t) - X_i(t) = L + A*(-1)^(i+1) * sin(2*alpha*t),

(requires amplitude A < L/2, rate alpha matching the velocity law's
linear coefficient, mean gap equal to the law's reference gap, and delay
tau = pi/(4*alpha)), which makes the positions themselves closed-form:

    X_i(t) = L*i + (-1)^i*(A/2)*sin(2*alpha*t)
             + (F(L) + beta*A^2/2)*t + (beta*A^2/(8*alpha))*sin(4*alpha*t)

for t >= 0.  The mean drift F(L) + beta*A^2/2 strictly exceeds the
macroscopic prediction F(L) whenever A > 0, so u^eps cannot converge to
u0 near x = 0: convergence studies of this family stall at a level set
by beta*A^2/2, and the difference quotient of u^eps(0, .) detects the
excess drift directly with an O(eps/h) oscillatory remainder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .defaults import (CONVERGENCE_TOL, STALL_FLOOR_FACTOR,
                       STALL_REL_SPREAD, quadrature_tolerance)
from .engine import TrajectorySet, integrate
from .errors import ConfigurationError, DomainError
from .macro import FieldGrid
from .model import PeriodicTruncation, Scenario

_REL_TOL = 1e-12
_SEL_TOL = 1e-9


@dataclass
class EpsilonField:
    """u^eps sampled at stations i*eps (rows) and rescaled times (cols)."""

    epsilon: float
    drivers: np.ndarray
    s: np.ndarray
    values: np.ndarray

    def stations(self):
        return self.epsilon * self.drivers

    def value_at(self, x, s):
        """Floor rule in x, linear interpolation in rescaled time."""
        x = np.asarray(x, dtype=float)
        i = np.floor(x / self.epsilon + _SEL_TOL).astype(np.int64)
        lo = int(self.drivers[0])
        if (i < lo).any() or (i > int(self.drivers[-1])).any():
            raise DomainError(
                f"station floor(x/eps) outside sampled drivers "
                f"[{lo}, {int(self.drivers[-1])}]")
        rows = (i - lo)[..., None]
        s = np.atleast_1d(np.asarray(s, dtype=float))
        idx = np.searchsorted(self.s, s, side="right") - 1
        idx = np.clip(idx, 0, self.s.size - 2)
        w = (s - self.s[idx]) / (self.s[idx + 1] - self.s[idx])
        w = np.clip(w, 0.0, 1.0)
        return (1.0 - w) * self.values[rows, idx] + \
            w * self.values[rows, idx + 1]


def rescale_field(ts: TrajectorySet, region=None, s_times=None):
    """Build u^eps from committed trajectories.

    ``region=(x0, x1, s_lo, s_hi)`` selects stations i with i*eps inside
    [x0, x1] and, unless explicit rescaled sample times are given, every
    committed sample with s = eps*t in [s_lo, s_hi].  Values at the
    trajectory's own samples are exact (the definitional identity); other
    times use the engine's linear interpolation.
    """
    eps = ts.epsilon
    if region is None:
        drivers = ts.drivers()
        s_all = eps * ts.times()
        if s_times is None:
            s_times = s_all[s_all >= -_SEL_TOL]
    else:
        x0, x1, s_lo, s_hi = (float(v) for v in region)
        i_lo = int(math.ceil(x0 / eps - _SEL_TOL))
        i_hi = int(math.floor(x1 / eps + _SEL_TOL))
        if i_hi < i_lo:
            raise ConfigurationError(
                f"no stations i*eps inside [{x0}, {x1}] at eps={eps}")
        drivers = np.arange(i_lo, i_hi + 1)
        if s_times is None:
            s_all = eps * ts.times()
            keep = (s_all >= s_lo - _SEL_TOL) & (s_all <= s_hi + _SEL_TOL)
            s_times = s_all[keep]
    s_times = np.asarray(s_times, dtype=float)
    if s_times.size == 0:
        raise ConfigurationError("no rescaled sample times selected")
    need = float(s_times.max()) / eps
    have = ts.committed_until
    if need > have * (1.0 + _SEL_TOL) + _SEL_TOL:
        raise ConfigurationError(
            f"rescaled time s={float(s_times.max())} needs the micro run "
            f"committed to t={need}, but it stops at t={have}")
    vals = eps * ts.position(drivers, s_times / eps)
    return EpsilonField(eps, drivers, s_times, vals)


# ---------------------------------------------------------------------------
# Convergence studies
# ---------------------------------------------------------------------------

@dataclass
class ConvergenceRecord:
    """Per-scale sup errors against the macroscopic field, classified."""

    region: tuple
    epsilons: tuple
    errors: tuple
    verdict: str               # converging | stalled | inconclusive
    drift_estimate: float | None = None

    def rows(self):
        return list(zip(self.epsilons, self.errors))

    def to_csv(self, f):
        close = False
        if isinstance(f, (str, bytes)):
            f = open(f, "w")
            close = True
        try:
            f.write("epsilon,sup_error\n")
            for eps, err in self.rows():
                f.write(f"{eps:.17g},{err:.17g}\n")
        finally:
            if close:
                f.close()


def _verdict(errors, dt):
    errs = list(errors)
    # Errors already at the micro quadrature floor cannot be expected to
    # decrease strictly; they are indistinguishable from the limit.
    at_floor = all(e <= quadrature_tolerance(dt) for e in errs)
    decreasing = len(errs) >= 2 and \
        all(b < a for a, b in zip(errs, errs[1:]))
    if (decreasing or at_floor) and errs[-1] <= CONVERGENCE_TOL:
        return "converging"
    if len(errs) >= 3:
        tail = errs[-3:]
        hi, lo = max(tail), min(tail)
        floor = STALL_FLOOR_FACTOR * quadrature_tolerance(dt)
        if lo > floor and hi - lo < STALL_REL_SPREAD * hi:
            return "stalled"
    return "inconclusive"


def study_truncation(scenario: Scenario, epsilon: float):
    """Index-periodic closure appropriate for the scenario's family.

    The named families are index-periodic, so each scale integrates a
    small periodic system: period 1 for linear data, 2 for the
    alternating oscillation, wavelength/eps for the sinusoidal
    perturbation (the wavelength must then be a whole multiple of eps).
    Other families keep the truncation the scenario declares.
    """
    init = scenario.initial
    p = init.params
    if init.family == "linear":
        return PeriodicTruncation(1, p["gap"])
    if init.family == "alternating-sine":
        return PeriodicTruncation(2, 2.0 * p["gap"])
    if init.family == "perturbed-linear":
        q = p["wavelength"] / epsilon
        n = int(round(q))
        if n < 1 or abs(q - n) > _SEL_TOL * max(1.0, q):
            raise ConfigurationError(
                f"perturbation wavelength {p['wavelength']} is not a "
                f"whole multiple of eps={epsilon}; stations cannot close "
                "periodically")
        return PeriodicTruncation(n, p["gap"] * n)
    return scenario.truncation


def convergence_study(scenario: Scenario, macro: FieldGrid, region=None,
                      epsilons=None):
    """Integrate the scenario at each scale and compare with ``macro``.

    ``macro`` must be solved on a domain covering the region widely
    enough that the compared nodes are boundary-free (the solver's
    determinacy mask tells how much margin the right edge needs).
    Comparison happens at the micro stations x = i*eps and at macro
    sample times inside the region; at least 3 scales are required to
    classify a trend.
    """
    region = tuple(float(v) for v in (region if region is not None
                                      else (macro.x0, macro.x1,
                                            macro.t0, macro.t1)))
    x0, x1, s_lo, s_hi = region
    eps_list = tuple(epsilons if epsilons is not None
                     else scenario.epsilons)
    if len(eps_list) < 3:
        raise ConfigurationError(
            f"need at least 3 scales to assess a trend, got {len(eps_list)}")
    if not all(b < a for a, b in zip(eps_list, eps_list[1:])):
        raise ConfigurationError("scales must be strictly decreasing")
    if x0 < macro.x0 - _SEL_TOL or x1 > macro.x1 + _SEL_TOL or \
            s_lo < macro.t0 - _SEL_TOL or s_hi > macro.t1 + _SEL_TOL:
        raise ConfigurationError(
            "macro field does not cover the comparison region")
    tg = macro.tgrid()
    s_times = tg[(tg >= s_lo - _SEL_TOL) & (tg <= s_hi + _SEL_TOL)]
    if s_times.size == 0:
        raise ConfigurationError(
            "macro grid has no sample times inside the region")

    errors = []
    drift = None
    for eps in eps_list:
        run = replace(scenario, horizon=s_hi / eps,
                      truncation=study_truncation(scenario, eps))
        ts = integrate(run, epsilon=eps)
        fld = rescale_field(ts, region=region, s_times=s_times)
        ref = macro.value_at(fld.stations()[:, None], s_times[None, :])
        errors.append(float(np.max(np.abs(fld.values - ref))))
        if scenario.initial.family == "alternating-sine" and \
                eps == eps_list[-1]:
            a = float(eps * ts.position(0, s_lo / eps))
            b = float(eps * ts.position(0, s_hi / eps))
            drift = (b - a) / (s_hi - s_lo)
    return ConvergenceRecord(region, eps_list, tuple(errors),
                             _verdict(errors, scenario.dt), drift)


# ---------------------------------------------------------------------------
# Drift of the oscillating counterexample
# ---------------------------------------------------------------------------

def _oscillation_params(scenario: Scenario):
    init = scenario.initial
    vel = scenario.velocity
    if init.family != "alternating-sine" or vel.kind != "quadratic-clamped":
        raise ConfigurationError(
            "the oscillation construction needs alternating-sine initial "
            f"data under the quadratic-clamped law, got family "
            f"{init.family!r} under {vel.kind!r}")
    p = init.params
    v = vel.params
    if abs(p["rate"] - v["alpha"]) > _REL_TOL * max(1.0, abs(v["alpha"])):
        raise DomainError(
            f"oscillation rate {p['rate']} must equal the law's linear "
            f"coefficient {v['alpha']}")
    if abs(p["gap"] - v["gap_ref"]) > _REL_TOL * max(1.0, abs(v["gap_ref"])):
        raise DomainError(
            f"mean gap {p['gap']} must equal the law's reference gap "
            f"{v['gap_ref']}")
    tau_req = math.pi / (4.0 * v["alpha"])
    if scenario.delay.tau_min != scenario.delay.tau_max or \
            abs(scenario.delay.tau_max - tau_req) > _REL_TOL * tau_req:
        raise DomainError(
            f"the resonant construction requires constant delay "
            f"tau = pi/(4*alpha) = {tau_req}, got "
            f"[{scenario.delay.tau_min}, {scenario.delay.tau_max}]")
    return p["gap"], p["amplitude"], v["alpha"], v["k"], v["beta"]


def oscillation_gap(scenario: Scenario, i: int, t):
    """Closed-form gap X_{i+1}-X_i of the resonant oscillating family.

    Exact for all committed times; the integrator is tested against it.
    """
    gap, amp, alpha, _, _ = _oscillation_params(scenario)
    t = np.asarray(t, dtype=float)
    if float(t.min(initial=0.0)) < 0.0:
        raise DomainError("the gap law is asserted for t >= 0 only")
    sign = -1.0 if i % 2 == 0 else 1.0
    out = gap + amp * sign * np.sin(2.0 * alpha * t)
    return float(out) if out.ndim == 0 else out


def oscillation_position(scenario: Scenario, i: int, t):
    """Closed-form position of the resonant oscillating family, t >= 0."""
    gap, amp, alpha, k, beta = _oscillation_params(scenario)
    t = np.asarray(t, dtype=float)
    if float(t.min(initial=0.0)) < 0.0:
        raise DomainError("the position law is asserted for t >= 0 only")
    sign = 1.0 if i % 2 == 0 else -1.0
    out = (gap * i + sign * 0.5 * amp * np.sin(2.0 * alpha * t)
           + (k + 0.5 * beta * amp * amp) * t
           + (beta * amp * amp / (8.0 * alpha))
           * np.sin(4.0 * alpha * t))
    return float(out) if out.ndim == 0 else out


def predicted_drift(scenario: Scenario):
    """Mean speed of the oscillating family: F(L) + beta*A^2/2."""
    gap, amp, _, _, beta = _oscillation_params(scenario)
    return float(scenario.velocity.evaluate(gap)) + 0.5 * beta * amp * amp


def drift_quotient(ts: TrajectorySet, s_time: float, h: float,
                   driver: int = 0):
    """(u^eps(x_driver, s+h) - u^eps(x_driver, s)) / h from a run."""
    if not s_time > 0 or not h > 0:
        raise DomainError("drift quotient needs s_time > 0 and h > 0")
    eps = ts.epsilon
    a = ts.position(driver, s_time / eps)
    b = ts.position(driver, (s_time + h) / eps)
    return float(eps * (b - a) / h)


def counterexample_drift(scenario: Scenario, epsilon: float, s_time: float,
                         h: float, driver: int = 0):
    """Integrate the oscillating scenario at one scale and return the
    difference quotient of u^eps(0, .) across [s_time, s_time+h].

    As eps -> 0 this tends to F(L) + beta*A^2/2 (the remainder is the
    sampled antiderivative of the oscillatory terms, O(eps/h)), while
    the macroscopic solution moves at F(L) exactly.
    """
    _oscillation_params(scenario)
    if not s_time > 0 or not h > 0:
        raise DomainError("drift quotient needs s_time > 0 and h > 0")
    run = replace(scenario, horizon=(s_time + h) / epsilon,
                  truncation=study_truncation(scenario, epsilon))
    ts = integrate(run, epsilon=epsilon)
    return drift_quotient(ts, s_time, h, driver)


def drift_scan(scenario: Scenario, epsilons, s_time: float, h: float):
    """Drift quotients across scales; rows (epsilon, s, h, quotient)."""
    return [(float(eps), float(s_time), float(h),
             counterexample_drift(scenario, eps, s_time, h))
            for eps in epsilons]


def write_drift_csv(rows, f):
    close = False
    if isinstance(f, (str, bytes)):
        f = open(f, "w")
        close = True
    try:
        f.write("epsilon,s,h,quotient\n")
        for eps, s, h, q in rows:
            f.write(f"{eps:.17g},{s:.17g},{h:.17g},{q:.17g}\n")
    finally:
        if close:
            f.close()
