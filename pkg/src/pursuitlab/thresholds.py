"""Delay thresholds and spacing-growth certificates.

The strict-comparison machinery for the delayed pursuit law rests on a
*spacing function*: a map rho on [0, tau] with rho > 1 satisfying

    1 + C_F * rho(tau) * I(tau') < rho(tau'),   I(tau') = int_0^{tau'} rho(s) ds,

for every tau' in [0, tau].  Two facts drive everything here:

* an admissible rho exists if and only if  tau < 1/(e * C_F); the
  constructive witness is exponential,

      rho(tau') = b * exp(b * g * C_F * tau'),
      1 < b < sqrt(1 / (e * tau * C_F)),

  where g solves the fixed point g = b * exp(b * g * C_F * tau) -- g is
  also rho(tau), which makes the admissibility margin closed-form:
  rho(tau') - (1 + C_F*g*I(tau')) = (b - 1) * exp(b*g*C_F*tau') > 0;

* a *constant* admissible rho exists on the smaller range
  tau < 1/(4 * C_F): the level x must satisfy C_F*tau*x^2 - x + 1 < 0,
  whose real root interval is nonempty exactly there.

:func:`build_spacing_function` constructs the exponential witness (the
smallest fixed-point root, found by bisection -- the fixed-point equation
in log form, log(g) - b*g*C_F*tau, is increasing up to g = 1/(b*tau*C_F)
and the root lies below that); :func:`certify` audits any spacing function
on a tau' grid and emits a machine-checkable certificate with
zero-tolerance strict positivity.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .defaults import ROOT_TOL, TAU_GRID_POINTS
from .errors import (ConfigurationError, DomainError, InfeasibilityError,
                     NumericError)


def homogenization_threshold(c_f):
    """Delay bound 1/(e*C_F) below which spacing functions exist."""
    if not c_f > 0:
        raise DomainError(f"C_F must be positive, got {c_f}")
    return 1.0 / (math.e * c_f)


def constant_spacing_threshold(c_f):
    """Delay bound 1/(4*C_F) below which a constant level works."""
    if not c_f > 0:
        raise DomainError(f"C_F must be positive, got {c_f}")
    return 1.0 / (4.0 * c_f)


def constant_spacing_interval(tau, c_f):
    """Open interval of admissible constant levels, or None.

    Levels are admissible iff C_F*tau*x^2 - x + 1 < 0; the interval is the
    pair of roots when the discriminant 1 - 4*C_F*tau is positive.
    """
    if not (tau > 0 and c_f > 0):
        raise DomainError(f"tau and C_F must be positive (tau={tau}, "
                          f"C_F={c_f})")
    disc = 1.0 - 4.0 * c_f * tau
    if disc <= 0:
        return None
    root = math.sqrt(disc)
    return ((1.0 - root) / (2.0 * c_f * tau),
            (1.0 + root) / (2.0 * c_f * tau))


def constant_spacing_feasible(tau, c_f, level):
    """Whether the constant ``level`` is admissible, by the direct
    inequality level*C_F*tau < 1 - 1/level (worst tau' is tau itself)."""
    if not (tau > 0 and c_f > 0):
        raise DomainError(f"tau and C_F must be positive (tau={tau}, "
                          f"C_F={c_f})")
    return level > 1.0 and level * c_f * tau < 1.0 - 1.0 / level


@dataclass(frozen=True)
class SpacingFunction:
    """Candidate spacing function rho on [0, tau].

    ``constant`` kind: rho = level.  ``exponential`` kind:
    rho(tau') = start * exp(rate * tau'), with closed-form integral.
    """

    kind: str
    tau: float
    c_f: float
    level: float = 0.0
    start: float = 0.0
    rate: float = 0.0

    def value(self, tau_prime):
        tp = np.asarray(tau_prime, dtype=float)
        if self.kind == "constant":
            out = np.full(tp.shape, self.level)
        else:
            out = self.start * np.exp(self.rate * tp)
        return float(out) if out.ndim == 0 else out

    __call__ = value

    def integral(self, tau_prime):
        """Closed-form int_0^{tau'} rho(s) ds."""
        tp = np.asarray(tau_prime, dtype=float)
        if self.kind == "constant":
            out = self.level * tp
        else:
            out = (np.exp(self.rate * tp) - 1.0) * (self.start / self.rate)
        return float(out) if out.ndim == 0 else out

    @property
    def end(self):
        """rho(tau), the factor entering the comparison decay rate."""
        return self.value(self.tau)

    def params_dict(self):
        if self.kind == "constant":
            return {"level": self.level}
        return {"start": self.start, "rate": self.rate}


def constant_spacing_function(tau, c_f, level):
    """Wrap a constant level as a SpacingFunction (certified separately)."""
    if not (tau > 0 and c_f > 0):
        raise DomainError(f"tau and C_F must be positive (tau={tau}, "
                          f"C_F={c_f})")
    return SpacingFunction("constant", float(tau), float(c_f),
                           level=float(level))


def build_spacing_function(tau, c_f, start=None):
    """Construct the exponential spacing function for delay ``tau``.

    Raises :class:`InfeasibilityError` when tau >= 1/(e*C_F) (no spacing
    function of any shape exists there).  ``start`` -- the value rho(0) --
    defaults to the geometric midpoint of its admissible range
    (1, sqrt(1/(e*tau*C_F))).
    """
    if not (tau > 0 and c_f > 0):
        raise DomainError(f"tau and C_F must be positive (tau={tau}, "
                          f"C_F={c_f})")
    limit = homogenization_threshold(c_f)
    if not tau < limit:
        raise InfeasibilityError(
            f"no admissible spacing function exists: tau={tau} >= "
            f"1/(e*C_F)={limit}")
    start_max = math.sqrt(limit / tau)
    if start is None:
        start = math.sqrt(start_max)
    if not 1.0 < start < start_max:
        raise DomainError(
            f"start must lie strictly inside (1, {start_max}), got {start}")

    # Fixed point g = start*exp(start*g*C_F*tau), smallest root.  In log
    # form h(g) = log(g) - start*g*C_F*tau is increasing on (0, g_cap] with
    # g_cap = 1/(start*tau*C_F); h(start) < log(start) <= h(g_cap), so the
    # root is bracketed by [start, g_cap].
    g_cap = 1.0 / (start * tau * c_f)
    target = math.log(start)
    a, b = start, g_cap

    def h(g):
        return math.log(g) - start * g * tau * c_f

    for _ in range(200):
        mid = 0.5 * (a + b)
        if h(mid) < target:
            a = mid
        else:
            b = mid
    g = 0.5 * (a + b)
    residual = abs(g - start * math.exp(start * g * c_f * tau))
    if residual > ROOT_TOL * max(1.0, abs(g)):
        raise NumericError(
            f"spacing fixed point did not converge: residual {residual} "
            f"at g={g}")
    return SpacingFunction("exponential", float(tau), float(c_f),
                           start=float(start), rate=float(start * g * c_f))


@dataclass(frozen=True)
class SpacingCertificate:
    """Result of auditing a spacing function on a tau' grid."""

    tau: float
    c_f: float
    kind: str
    params: dict
    min_margin: float
    witness: float
    holds: bool

    def to_json_dict(self):
        return {"tau": self.tau, "C_F": self.c_f, "kind": self.kind,
                "params": dict(self.params), "min_margin": self.min_margin,
                "witness": self.witness, "holds": self.holds}

    def to_json(self):
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2)


def certify(rho: SpacingFunction, grid_points: int = TAU_GRID_POINTS):
    """Audit the admissibility inequality on a uniform tau' grid.

    The margin rho(tau') - (1 + C_F*rho(tau)*I(tau')) must be strictly
    positive everywhere (zero tolerance).  The integral I uses the
    closed form for the exponential kind and the trapezoid rule at grid
    resolution otherwise; ``witness`` is the grid point of minimum margin.
    """
    if grid_points < 16:
        raise ConfigurationError(
            f"certificate grid needs at least 16 points, got {grid_points}")
    tps = np.linspace(0.0, rho.tau, grid_points)
    vals = rho.value(tps)
    if rho.kind == "exponential":
        integ = rho.integral(tps)
    else:
        steps = 0.5 * (vals[1:] + vals[:-1]) * np.diff(tps)
        integ = np.concatenate([[0.0], np.cumsum(steps)])
    rho_end = float(rho.value(rho.tau))
    margin = vals - (1.0 + rho.c_f * rho_end * integ)
    j = int(np.argmin(margin))
    m = float(margin[j])
    return SpacingCertificate(rho.tau, rho.c_f, rho.kind, rho.params_dict(),
                              m, float(tps[j]), m > 0.0)
