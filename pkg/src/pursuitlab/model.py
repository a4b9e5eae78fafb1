"""Model types for the delayed pursuit law.

A scenario bundles everything needed to integrate the microscopic system

    X_i'(t) = F( X_{i+1}(t - tau_i) - X_i(t - tau_i) ),    t > 0,

namely the velocity law ``F`` (nondecreasing, bounded, Lipschitz), the
reaction-delay profile ``tau_i``, the initial driver histories on a past
window, a truncation rule that closes the (conceptually infinite) driver
chain, and the numerical step.  Objects here are plain data: construction
rejects malformed structure (non-finite numbers, bad shapes, unknown JSON
keys), while semantic invariants are collected -- never silently clamped --
by :func:`validate_scenario`.

Velocity kinds
    ``quadratic-clamped``  F(g) = k + beta*(g-L)^2 + alpha*(g-L) for g in
                           [0, 2L], constant outside; nondecreasing on the
                           window iff alpha > 4*beta*L (checked).
    ``linear-clamped``     F(g) = intercept + slope*clip(g, lo, hi).
    ``tabulated``          piecewise-linear table with constant extension;
                           declared Lipschitz/bound constants are audited.

Initial-history families (positions for t <= 0)
    ``linear``             x_i(t) = gap*i                        (stationary)
    ``alternating-sine``   x_i(t) = gap*i + (-1)^i (A/2) sin(2*rate*t)
    ``perturbed-linear``   x_i(t) = gap*i + (A/eps) sin(2*pi*i*eps/wavelength)
    ``disruption-pair``    two interleaved families, one compressed slot;
                           the lower family accelerates exponentially and
                           can overtake the upper one (order disruption)
    ``table``              explicit per-driver samples on a past window
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, RangeError, ValidationError

_AUDIT_SEED = 20260823
_AUDIT_PAIRS = 1000
_TABLE_AUDIT_POINTS = 4096

_T_SLACK = 1e-12


def _require_finite(where, **values):
    for name, v in values.items():
        if not math.isfinite(v):
            raise DomainError(f"{where}: field '{name}' must be finite, got {v!r}")


def _finite_array(where, name, values, ndim=1):
    arr = np.asarray(values, dtype=float)
    if arr.ndim != ndim:
        raise DomainError(f"{where}: field '{name}' must be {ndim}-dimensional")
    if not np.isfinite(arr).all():
        raise DomainError(f"{where}: field '{name}' contains non-finite entries")
    return arr


def _pop_key(d, key, where):
    if key not in d:
        raise DomainError(f"{where}: missing key '{key}'")
    return d.pop(key)


def _pop_number(d, key, where):
    v = _pop_key(d, key, where)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise DomainError(f"{where}: key '{key}' must be a number")
    v = float(v)
    if not math.isfinite(v):
        raise DomainError(f"{where}: key '{key}' must be finite")
    return v


def _pop_int(d, key, where):
    v = _pop_key(d, key, where)
    if isinstance(v, bool) or not isinstance(v, int):
        raise DomainError(f"{where}: key '{key}' must be an integer")
    return v


def _reject_unknown(d, where):
    if d:
        raise DomainError(f"{where}: unknown keys {sorted(d)}")


# ---------------------------------------------------------------------------
# Velocity profiles
# ---------------------------------------------------------------------------

_KIND_QUADRATIC = 0
_KIND_LINEAR = 1
_KIND_TABULATED = 2

_EMPTY = np.empty(0, dtype=float)


@dataclass(frozen=True)
class VelocityProfile:
    """Nondecreasing, bounded, Lipschitz speed-vs-gap law."""

    kind: str
    params: dict = field(default_factory=dict)
    table_x: np.ndarray = field(default_factory=lambda: _EMPTY)
    table_f: np.ndarray = field(default_factory=lambda: _EMPTY)

    # -- constructors -------------------------------------------------------

    @classmethod
    def quadratic(cls, k, beta, alpha, gap_ref):
        _require_finite("velocity(quadratic-clamped)", k=k, beta=beta,
                        alpha=alpha, gap_ref=gap_ref)
        return cls("quadratic-clamped",
                   {"k": float(k), "beta": float(beta),
                    "alpha": float(alpha), "gap_ref": float(gap_ref)})

    @classmethod
    def linear(cls, slope, lo, hi, intercept=0.0):
        _require_finite("velocity(linear-clamped)", slope=slope, lo=lo,
                        hi=hi, intercept=intercept)
        return cls("linear-clamped",
                   {"slope": float(slope), "lo": float(lo),
                    "hi": float(hi), "intercept": float(intercept)})

    @classmethod
    def tabulated(cls, x, f, c_f=None, f_sup=None):
        x = _finite_array("velocity(tabulated)", "x", x)
        f = _finite_array("velocity(tabulated)", "f", f)
        if x.size != f.size or x.size < 2:
            raise DomainError("velocity(tabulated): 'x' and 'f' must share a "
                              "length of at least 2")
        if not (np.diff(x) > 0).all():
            raise DomainError("velocity(tabulated): 'x' must be strictly "
                              "increasing")
        with np.errstate(divide="ignore"):
            secants = np.diff(f) / np.diff(x)
        derived_cf = float(np.max(np.abs(secants)))
        derived_sup = float(np.max(np.abs(f)))
        params = {
            "c_f": derived_cf if c_f is None else float(c_f),
            "f_sup": derived_sup if f_sup is None else float(f_sup),
        }
        _require_finite("velocity(tabulated)", **params)
        return cls("tabulated", params, x.copy(), f.copy())

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, gap):
        """Speed at the given gap(s); constant extension outside the window.

        Delegates to the NumPy reference kernel so every consumer -- the
        stepping backends, the macroscopic solver, direct queries -- shares
        one implementation of the law.
        """
        from ._stepcore_py import velocity_values
        g = np.asarray(gap, dtype=float)
        if not np.all(np.isfinite(g)):
            raise DomainError("velocity: gap must be finite")
        kind, p, tx, tf = self.kernel_spec()
        out = velocity_values(kind, p, tx, tf, g)
        if np.isscalar(gap) or getattr(gap, "ndim", 1) == 0:
            return float(out)
        return out

    __call__ = evaluate

    def _declared_constants(self):
        """(C_F, F_sup) straight from the parameters, without auditing."""
        p = self.params
        if self.kind == "quadratic-clamped":
            c_f = p["alpha"] + 2.0 * p["beta"] * p["gap_ref"]
            f_sup = max(abs(self.evaluate(0.0)),
                        abs(self.evaluate(2.0 * p["gap_ref"])))
            return c_f, f_sup
        if self.kind == "linear-clamped":
            f_sup = max(abs(self.evaluate(p["lo"])), abs(self.evaluate(p["hi"])))
            return abs(p["slope"]), f_sup
        return p["c_f"], p["f_sup"]

    def lipschitz_data(self):
        """(C_F, F_sup): Lipschitz constant and uniform bound of the law.

        For the closed-form kinds these are exact; the declared constants
        of a tabulated law are only trusted after the sample audit passes.
        """
        if self.kind == "tabulated":
            bad = self.violations()
            if bad:
                raise ValidationError("velocity audit failed:\n  " +
                                      "\n  ".join(bad))
        return self._declared_constants()

    def clamp_window(self):
        """Gap interval outside which the law is constant."""
        p = self.params
        if self.kind == "quadratic-clamped":
            return 0.0, 2.0 * p["gap_ref"]
        if self.kind == "linear-clamped":
            return p["lo"], p["hi"]
        return float(self.table_x[0]), float(self.table_x[-1])

    def kernel_spec(self):
        """(kind code, four scalar params, table arrays) for the kernels."""
        p = self.params
        if self.kind == "quadratic-clamped":
            return (_KIND_QUADRATIC,
                    (p["k"], p["beta"], p["alpha"], p["gap_ref"]),
                    _EMPTY, _EMPTY)
        if self.kind == "linear-clamped":
            return (_KIND_LINEAR,
                    (p["slope"], p["lo"], p["hi"], p["intercept"]),
                    _EMPTY, _EMPTY)
        return _KIND_TABULATED, (0.0, 0.0, 0.0, 0.0), self.table_x, self.table_f

    # -- validation ---------------------------------------------------------

    def violations(self):
        out = []
        p = self.params
        if self.kind == "quadratic-clamped":
            if p["gap_ref"] <= 0:
                out.append("velocity: gap_ref must be positive")
            if p["beta"] < 0:
                out.append("velocity: beta must be nonnegative")
            if not p["alpha"] > 4.0 * p["beta"] * p["gap_ref"]:
                out.append(
                    "velocity: alpha > 4*beta*gap_ref required for a "
                    f"nondecreasing law (alpha={p['alpha']}, "
                    f"4*beta*gap_ref={4.0 * p['beta'] * p['gap_ref']})")
        elif self.kind == "linear-clamped":
            if p["slope"] < 0:
                out.append("velocity: slope must be nonnegative")
            if not p["lo"] < p["hi"]:
                out.append("velocity: lo < hi required")
        else:
            secants = np.diff(self.table_f) / np.diff(self.table_x)
            if (secants < 0).any():
                j = int(np.argmax(secants < 0))
                out.append(
                    "velocity: table not nondecreasing between "
                    f"x={self.table_x[j]} and x={self.table_x[j + 1]}")
            max_sec = float(np.max(np.abs(secants))) if secants.size else 0.0
            if p["c_f"] < max_sec * (1.0 - 1e-12):
                out.append(
                    f"velocity: declared c_f={p['c_f']} below the table's "
                    f"steepest secant {max_sec}")
            max_abs = float(np.max(np.abs(self.table_f)))
            if p["f_sup"] < max_abs * (1.0 - 1e-12):
                out.append(
                    f"velocity: declared f_sup={p['f_sup']} below the "
                    f"table's largest magnitude {max_abs}")
        out.extend(self._monotone_audit())
        return out

    def _monotone_audit(self):
        """Randomised monotonicity spot check over the clamp window plus
        one window-width of the constant extension on each side."""
        lo, hi = self.clamp_window()
        span = hi - lo
        if not span > 0:
            return []  # already reported as a violation
        rng = np.random.default_rng(_AUDIT_SEED)
        a = rng.uniform(lo - span, hi + span, _AUDIT_PAIRS)
        b = rng.uniform(lo - span, hi + span, _AUDIT_PAIRS)
        x1, x2 = np.minimum(a, b), np.maximum(a, b)
        f1, f2 = self.evaluate(x1), self.evaluate(x2)
        bad = f2 < f1
        if bad.any():
            j = int(np.argmax(bad))
            return [f"velocity: F({x2[j]}) < F({x1[j]}) violates monotonicity"]
        c_f, f_sup = self._declared_constants()
        keep = x2 > x1
        slopes = (f2[keep] - f1[keep]) / (x2[keep] - x1[keep])
        if slopes.size and float(np.max(slopes)) > c_f * (1.0 + 1e-9):
            return [f"velocity: sampled slope {float(np.max(slopes))} exceeds "
                    f"declared Lipschitz constant {c_f}"]
        grid = np.linspace(lo - span, hi + span, _TABLE_AUDIT_POINTS)
        worst = float(np.max(np.abs(self.evaluate(grid))))
        if worst > f_sup * (1.0 + 1e-9):
            return [f"velocity: sampled magnitude {worst} exceeds declared "
                    f"bound {f_sup}"]
        return []

    # -- serialization ------------------------------------------------------

    def to_json_dict(self):
        if self.kind == "tabulated":
            return {"kind": self.kind,
                    "x": self.table_x.tolist(), "f": self.table_f.tolist(),
                    "c_f": self.params["c_f"], "f_sup": self.params["f_sup"]}
        return {"kind": self.kind, **self.params}

    @classmethod
    def from_json_dict(cls, d):
        d = dict(d)
        kind = _pop_key(d, "kind", "velocity")
        if kind == "quadratic-clamped":
            obj = cls.quadratic(_pop_number(d, "k", "velocity"),
                                _pop_number(d, "beta", "velocity"),
                                _pop_number(d, "alpha", "velocity"),
                                _pop_number(d, "gap_ref", "velocity"))
        elif kind == "linear-clamped":
            obj = cls.linear(_pop_number(d, "slope", "velocity"),
                             _pop_number(d, "lo", "velocity"),
                             _pop_number(d, "hi", "velocity"),
                             _pop_number(d, "intercept", "velocity"))
        elif kind == "tabulated":
            obj = cls.tabulated(_pop_key(d, "x", "velocity"),
                                _pop_key(d, "f", "velocity"),
                                _pop_number(d, "c_f", "velocity"),
                                _pop_number(d, "f_sup", "velocity"))
        else:
            raise DomainError(f"velocity: unknown kind {kind!r}")
        _reject_unknown(d, "velocity")
        return obj


# ---------------------------------------------------------------------------
# Delay profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DelayProfile:
    """Per-driver reaction time tau_i = tau0(i * eps), bounded away from 0.

    ``tau_min`` (the infimum) sets the commit-interval length of the
    method-of-steps integration; ``tau_max`` sets the span of initial
    history required.
    """

    kind: str
    tau_min: float
    tau_max: float
    table_x: np.ndarray = field(default_factory=lambda: _EMPTY)
    table_tau: np.ndarray = field(default_factory=lambda: _EMPTY)

    @classmethod
    def constant(cls, tau):
        _require_finite("delay(constant)", tau=tau)
        if not tau > 0.0:
            raise DomainError(f"delay(constant): tau must be positive, "
                              f"got {tau}")
        return cls("constant", float(tau), float(tau))

    @classmethod
    def tabulated(cls, x, tau):
        x = _finite_array("delay(tabulated)", "x", x)
        tau = _finite_array("delay(tabulated)", "tau", tau)
        if x.size != tau.size or x.size < 2:
            raise DomainError("delay(tabulated): 'x' and 'tau' must share a "
                              "length of at least 2")
        if not (np.diff(x) > 0).all():
            raise DomainError("delay(tabulated): 'x' must be strictly "
                              "increasing")
        if not float(np.min(tau)) > 0.0:
            raise DomainError("delay(tabulated): every reaction time must "
                              "be positive")
        return cls("tabulated", float(np.min(tau)), float(np.max(tau)),
                   x.copy(), tau.copy())

    def value(self, x):
        """Reaction time at space coordinate(s) x (constant extension)."""
        if self.kind == "constant":
            out = np.full(np.shape(x), self.tau_min, dtype=float)
            return float(out) if out.ndim == 0 else out
        out = np.interp(x, self.table_x, self.table_tau)
        return float(out) if np.isscalar(x) else out

    def violations(self):
        out = []
        if not self.tau_min > 0:
            out.append(f"delay: reaction times must be positive "
                       f"(min {self.tau_min})")
        return out

    def to_json_dict(self):
        if self.kind == "constant":
            return {"kind": "constant", "tau": self.tau_min}
        return {"kind": "tabulated", "x": self.table_x.tolist(),
                "tau": self.table_tau.tolist()}

    @classmethod
    def from_json_dict(cls, d):
        d = dict(d)
        kind = _pop_key(d, "kind", "delay")
        if kind == "constant":
            obj = cls.constant(_pop_number(d, "tau", "delay"))
        elif kind == "tabulated":
            obj = cls.tabulated(_pop_key(d, "x", "delay"),
                                _pop_key(d, "tau", "delay"))
        else:
            raise DomainError(f"delay: unknown kind {kind!r}")
        _reject_unknown(d, "delay")
        return obj


# ---------------------------------------------------------------------------
# Initial histories
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InitialHistory:
    """Driver positions declared on a past time window (t <= 0)."""

    family: str
    params: dict = field(default_factory=dict)
    table_t: np.ndarray = field(default_factory=lambda: _EMPTY)
    table_pos: np.ndarray = field(default_factory=lambda: _EMPTY)

    @classmethod
    def linear(cls, gap):
        _require_finite("initial(linear)", gap=gap)
        return cls("linear", {"gap": float(gap)})

    @classmethod
    def alternating_sine(cls, gap, amplitude, rate):
        _require_finite("initial(alternating-sine)", gap=gap,
                        amplitude=amplitude, rate=rate)
        return cls("alternating-sine", {"gap": float(gap),
                                        "amplitude": float(amplitude),
                                        "rate": float(rate)})

    @classmethod
    def perturbed_linear(cls, gap, amplitude, wavelength):
        _require_finite("initial(perturbed-linear)", gap=gap,
                        amplitude=amplitude, wavelength=wavelength)
        return cls("perturbed-linear", {"gap": float(gap),
                                        "amplitude": float(amplitude),
                                        "wavelength": float(wavelength)})

    @classmethod
    def disruption_pair(cls, n0, j, side):
        if isinstance(n0, bool) or not isinstance(n0, int):
            raise DomainError("initial(disruption-pair): n0 must be an integer")
        if isinstance(j, bool) or not isinstance(j, int):
            raise DomainError("initial(disruption-pair): j must be an integer")
        if side not in ("upper", "lower"):
            raise DomainError("initial(disruption-pair): side must be "
                              "'upper' or 'lower'")
        return cls("disruption-pair", {"n0": n0, "j": j, "side": side})

    @classmethod
    def table(cls, index_lo, times, positions, lipschitz):
        times = _finite_array("initial(table)", "times", times)
        positions = _finite_array("initial(table)", "positions", positions,
                                  ndim=2)
        if isinstance(index_lo, bool) or not isinstance(index_lo, int):
            raise DomainError("initial(table): index_lo must be an integer")
        if positions.shape[1] != times.size or times.size < 2:
            raise DomainError("initial(table): positions must be "
                              "(drivers, len(times)) with at least 2 times")
        if not (np.diff(times) > 0).all():
            raise DomainError("initial(table): times must be strictly "
                              "increasing")
        if times[-1] < 0.0 - _T_SLACK or times[-1] > _T_SLACK:
            raise DomainError("initial(table): the window must end at t = 0")
        _require_finite("initial(table)", lipschitz=lipschitz)
        return cls("table", {"index_lo": index_lo,
                             "lipschitz": float(lipschitz)},
                   times.copy(), positions.copy())

    # -- evaluation ---------------------------------------------------------

    def position(self, i, t, epsilon=1.0):
        """Position of driver(s) ``i`` at past time(s) ``t``.

        1-D ``i`` and ``t`` broadcast to a (drivers, times) array.  Times
        after 0 raise :class:`RangeError`; drivers missing from a table
        family raise :class:`DomainError`.
        """
        scalar = np.isscalar(i) and np.isscalar(t)
        i = np.atleast_1d(np.asarray(i, dtype=np.int64))
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if float(t.max(initial=-np.inf)) > _T_SLACK:
            raise RangeError(
                f"initial history queried at t={float(t.max())} > 0")
        ii = i[:, None].astype(float)
        tt = t[None, :]
        p = self.params
        if self.family == "linear":
            out = p["gap"] * ii + 0.0 * tt
        elif self.family == "alternating-sine":
            sign = np.where(i[:, None] % 2 == 0, 1.0, -1.0)
            out = (p["gap"] * ii
                   + sign * (0.5 * p["amplitude"])
                   * np.sin(2.0 * p["rate"] * tt))
        elif self.family == "perturbed-linear":
            out = (p["gap"] * ii
                   + (p["amplitude"] / epsilon)
                   * np.sin(2.0 * math.pi * (ii * epsilon) / p["wavelength"])
                   + 0.0 * tt)
        elif self.family == "disruption-pair":
            n0 = float(p["n0"])
            bump = (n0 / (n0 + 1.0)) * np.exp(n0 * tt)
            if p["side"] == "lower":
                out = (ii - 1.0) + bump
            else:
                # Uniform slots below j; above j the slot j..j+1 is
                # compressed by 1/(n0+1) and carries the moving history.
                upper = (ii - 1.0) + 1.0 / (n0 + 1.0) + bump
                out = np.where(i[:, None] <= p["j"], ii, upper)
        elif self.family == "table":
            lo = p["index_lo"]
            rows = i - lo
            if rows.min(initial=0) < 0 or \
                    rows.max(initial=-1) >= self.table_pos.shape[0]:
                raise DomainError(
                    f"initial(table): driver index outside the declared set "
                    f"[{lo}, {lo + self.table_pos.shape[0] - 1}]")
            if float(t.min()) < float(self.table_t[0]) - _T_SLACK:
                raise RangeError(
                    f"initial(table): t={float(t.min())} precedes the stored "
                    f"window start {float(self.table_t[0])}")
            out = np.empty((i.size, t.size), dtype=float)
            for r, row in enumerate(rows):
                out[r] = np.interp(t, self.table_t, self.table_pos[row])
        else:
            raise DomainError(f"initial: unknown family {self.family!r}")
        return float(out[0, 0]) if scalar else out

    def macro_initial(self, x):
        """Macroscopic initial datum u0(x, 0) induced by the family."""
        p = self.params
        x = np.asarray(x, dtype=float)
        if self.family == "linear":
            out = p["gap"] * x
        elif self.family == "alternating-sine":
            # Even-indexed drivers sit exactly on gap*i at t=0, which pins
            # the linear profile in the small-scale limit.
            out = p["gap"] * x
        elif self.family == "perturbed-linear":
            out = p["gap"] * x + p["amplitude"] * np.sin(
                2.0 * math.pi * x / p["wavelength"])
        else:
            raise DomainError(
                f"initial({self.family}): no macroscopic initial datum")
        return float(out) if out.ndim == 0 else out

    def lipschitz_bound(self):
        """Space-time Lipschitz constant of the induced macroscopic datum."""
        p = self.params
        if self.family == "linear":
            return abs(p["gap"])
        if self.family == "alternating-sine":
            return max(abs(p["gap"]) + p["amplitude"],
                       p["rate"] * p["amplitude"])
        if self.family == "perturbed-linear":
            return abs(p["gap"]) + \
                2.0 * math.pi * p["amplitude"] / p["wavelength"]
        if self.family == "disruption-pair":
            n0 = float(p["n0"])
            return max(1.0, n0 * n0 / (n0 + 1.0))
        return p["lipschitz"]

    def window_lo(self):
        """Earliest valid time, or None for closed-form families."""
        if self.family == "table":
            return float(self.table_t[0])
        return None

    def violations(self):
        out = []
        p = self.params
        if self.family == "linear":
            if not p["gap"] > 0:
                out.append("initial: gap must be positive")
        elif self.family == "alternating-sine":
            if not p["gap"] > 0:
                out.append("initial: gap must be positive")
            # A = 0 is admitted as the degenerate stationary case; the
            # oscillation results themselves need A > 0.
            if not 0.0 <= p["amplitude"] < 0.5 * p["gap"]:
                out.append(
                    f"initial: amplitude must satisfy 0 <= A < gap/2 "
                    f"(A={p['amplitude']}, gap/2={0.5 * p['gap']})")
            if not p["rate"] > 0:
                out.append("initial: rate must be positive")
        elif self.family == "perturbed-linear":
            if not p["gap"] > 0:
                out.append("initial: gap must be positive")
            if p["amplitude"] < 0:
                out.append("initial: amplitude must be nonnegative")
            if not p["wavelength"] > 0:
                out.append("initial: wavelength must be positive")
            slope = 2.0 * math.pi * p["amplitude"] / p["wavelength"] \
                if p["wavelength"] > 0 else math.inf
            if slope >= p["gap"]:
                out.append(
                    "initial: perturbation slope 2*pi*A/wavelength "
                    f"({slope}) must stay below gap ({p['gap']}) to keep "
                    "gaps positive")
        elif self.family == "disruption-pair":
            if p["n0"] < 1:
                out.append("initial: n0 must be a positive integer")
        elif self.family == "table":
            dt_steps = np.diff(self.table_t)
            rates = np.abs(np.diff(self.table_pos, axis=1)) / dt_steps
            worst = float(rates.max()) if rates.size else 0.0
            if worst > p["lipschitz"] * (1.0 + 1e-9):
                out.append(
                    f"initial: sampled time-rate {worst} exceeds declared "
                    f"Lipschitz bound {p['lipschitz']}")
        return out

    # -- serialization ------------------------------------------------------

    def to_json_dict(self):
        if self.family == "table":
            return {"family": "table",
                    "index_lo": self.params["index_lo"],
                    "times": self.table_t.tolist(),
                    "positions": self.table_pos.tolist(),
                    "lipschitz": self.params["lipschitz"]}
        return {"family": self.family, **self.params}

    @classmethod
    def from_json_dict(cls, d):
        d = dict(d)
        family = _pop_key(d, "family", "initial")
        if family == "linear":
            obj = cls.linear(_pop_number(d, "gap", "initial"))
        elif family == "alternating-sine":
            obj = cls.alternating_sine(_pop_number(d, "gap", "initial"),
                                       _pop_number(d, "amplitude", "initial"),
                                       _pop_number(d, "rate", "initial"))
        elif family == "perturbed-linear":
            obj = cls.perturbed_linear(_pop_number(d, "gap", "initial"),
                                       _pop_number(d, "amplitude", "initial"),
                                       _pop_number(d, "wavelength", "initial"))
        elif family == "disruption-pair":
            obj = cls.disruption_pair(_pop_int(d, "n0", "initial"),
                                      _pop_int(d, "j", "initial"),
                                      _pop_key(d, "side", "initial"))
        elif family == "table":
            obj = cls.table(_pop_int(d, "index_lo", "initial"),
                            _pop_key(d, "times", "initial"),
                            _pop_key(d, "positions", "initial"),
                            _pop_number(d, "lipschitz", "initial"))
        else:
            raise DomainError(f"initial: unknown family {family!r}")
        _reject_unknown(d, "initial")
        return obj


# ---------------------------------------------------------------------------
# Truncations and scenarios
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PeriodicTruncation:
    """Close the chain with X_{i+N} = X_i + P (N drivers, spatial period P)."""

    drivers: int
    period: float
    mode = "periodic"

    def __post_init__(self):
        if isinstance(self.drivers, bool) or not isinstance(self.drivers, int):
            raise DomainError("truncation(periodic): drivers must be an "
                              "integer")
        _require_finite("truncation(periodic)", period=self.period)

    def to_json_dict(self):
        return {"mode": "periodic", "drivers": self.drivers,
                "period": self.period}


@dataclass(frozen=True)
class ConeTruncation:
    """Integrate drivers lo..hi exactly via their dependency cone.

    The engine additionally advances ceil(T/xi)+1 drivers above ``hi``
    whose initial data must be available; they are dropped from the result.
    """

    lo: int
    hi: int
    mode = "cone"

    def __post_init__(self):
        for name in ("lo", "hi"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int):
                raise DomainError(f"truncation(cone): {name} must be an "
                                  "integer")

    def to_json_dict(self):
        return {"mode": "cone", "lo": self.lo, "hi": self.hi}


def _truncation_from_json(d):
    d = dict(d)
    mode = _pop_key(d, "mode", "truncation")
    if mode == "periodic":
        obj = PeriodicTruncation(_pop_int(d, "drivers", "truncation"),
                                 _pop_number(d, "period", "truncation"))
    elif mode == "cone":
        obj = ConeTruncation(_pop_int(d, "lo", "truncation"),
                             _pop_int(d, "hi", "truncation"))
    else:
        raise DomainError(f"truncation: unknown mode {mode!r}")
    _reject_unknown(d, "truncation")
    return obj


@dataclass(frozen=True)
class Scenario:
    """A complete, serialisable description of one microscopic run."""

    velocity: VelocityProfile
    delay: DelayProfile
    initial: InitialHistory
    truncation: object
    horizon: float
    dt: float
    epsilons: tuple = ()

    def __post_init__(self):
        _require_finite("scenario", horizon=self.horizon, dt=self.dt)
        for e in self.epsilons:
            _require_finite("scenario.epsilons", epsilon=e)
        object.__setattr__(self, "epsilons",
                           tuple(float(e) for e in self.epsilons))

    def to_json_dict(self):
        return {
            "velocity": self.velocity.to_json_dict(),
            "delay": self.delay.to_json_dict(),
            "initial": self.initial.to_json_dict(),
            "truncation": self.truncation.to_json_dict(),
            "horizon": self.horizon,
            "dt": self.dt,
            "epsilons": list(self.epsilons),
        }

    def to_json(self):
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json_dict(cls, d):
        if not isinstance(d, dict):
            raise DomainError("scenario: document must be a JSON object")
        d = dict(d)
        velocity = VelocityProfile.from_json_dict(
            _pop_key(d, "velocity", "scenario"))
        delay = DelayProfile.from_json_dict(_pop_key(d, "delay", "scenario"))
        initial = InitialHistory.from_json_dict(
            _pop_key(d, "initial", "scenario"))
        truncation = _truncation_from_json(_pop_key(d, "truncation",
                                                    "scenario"))
        horizon = _pop_number(d, "horizon", "scenario")
        dt = _pop_number(d, "dt", "scenario")
        epsilons = d.pop("epsilons", [])
        if not isinstance(epsilons, list):
            raise DomainError("scenario: 'epsilons' must be a list")
        _reject_unknown(d, "scenario")
        return cls(velocity, delay, initial, truncation, horizon, dt,
                   tuple(float(e) for e in epsilons))

    @classmethod
    def from_json(cls, text):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DomainError(f"scenario: malformed JSON ({exc})") from exc
        return cls.from_json_dict(doc)


# ---------------------------------------------------------------------------
# Scenario validation
# ---------------------------------------------------------------------------


@dataclass
class ValidationReport:
    ok: bool
    violations: list
    warnings: list
    info: dict

    def to_json_dict(self):
        return {"ok": self.ok, "violations": list(self.violations),
                "warnings": list(self.warnings), "info": dict(self.info)}

    def to_json(self):
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2)


def validate_scenario(s, epsilon=1.0):
    """Collect every violated invariant of ``s`` (nothing is clamped).

    ``epsilon`` is the embedding scale used when the scenario is run as one
    stage of a convergence study; it affects the per-driver delays
    ``tau0(i*eps)`` and the scale-indexed initial families.
    """
    violations = []
    warnings = []
    info = {}

    violations += s.velocity.violations()
    violations += s.delay.violations()
    violations += s.initial.violations()

    if not s.horizon > 0:
        violations.append(f"scenario: horizon must be positive ({s.horizon})")
    if not s.dt > 0:
        violations.append(f"scenario: dt must be positive ({s.dt})")

    xi = s.delay.tau_min
    if s.dt > 0 and xi > 0:
        from .defaults import DIVISIBILITY_RTOL
        n_sub = round(xi / s.dt)
        if n_sub < 1 or abs(n_sub * s.dt - xi) > DIVISIBILITY_RTOL * xi:
            violations.append(
                f"scenario: dt={s.dt} must divide the commit-interval "
                f"length {xi} (xi/dt={xi / s.dt})")

    tr = s.truncation
    if tr.mode == "periodic":
        if tr.drivers < 1:
            violations.append("truncation: drivers must be >= 1")
        if not tr.period > 0:
            violations.append("truncation: period must be positive")
        if tr.drivers >= 1 and s.delay.tau_max > 0:
            violations += _periodicity_check(s, epsilon)
    else:
        if tr.lo > tr.hi:
            violations.append("truncation: lo <= hi required")

    if s.epsilons:
        eps = np.asarray(s.epsilons)
        if (eps <= 0).any() or (np.diff(eps) >= 0).any():
            violations.append("scenario: epsilons must be positive and "
                              "strictly decreasing")

    try:
        c_f, f_sup = s.velocity.lipschitz_data()
        info["c_f"] = c_f
        info["f_sup"] = f_sup
        if c_f > 0:
            threshold = 1.0 / (math.e * c_f)
            info["delay_threshold"] = threshold
            info["below_threshold"] = bool(s.delay.tau_max < threshold)
    except (DomainError, RangeError):
        pass

    win_lo = s.initial.window_lo()
    if win_lo is not None and s.delay.tau_max > 0:
        needed = -2.0 * s.delay.tau_max
        if win_lo > needed + _T_SLACK:
            violations.append(
                f"initial: stored window starts at {win_lo} but the run "
                f"needs history back to {needed}")

    return ValidationReport(not violations, violations, warnings, info)


def _periodicity_check(s, epsilon):
    """Sampled check that initial data and delays honour the closure
    X_{i+N} = X_i + P."""
    tr = s.truncation
    tau = s.delay.tau_max
    t_samples = np.array([-2.0 * tau, -tau, -0.5 * tau, 0.0])
    win_lo = s.initial.window_lo()
    if win_lo is not None:
        t_samples = t_samples[t_samples >= win_lo - _T_SLACK]
    out = []
    try:
        base = s.initial.position(np.array([0, 1]), t_samples, epsilon)
        shifted = s.initial.position(np.array([tr.drivers, tr.drivers + 1]),
                                     t_samples, epsilon)
    except (DomainError, RangeError) as exc:
        return [f"truncation: periodic closure not checkable ({exc})"]
    mismatch = np.abs(shifted - base - tr.period)
    tol = 1e-9 * max(1.0, abs(tr.period))
    if float(mismatch.max()) > tol:
        out.append(
            "truncation: initial data violate the periodic closure "
            f"X_(i+N) = X_i + P by {float(mismatch.max())}")
    d0 = s.delay.value(np.arange(2) * epsilon)
    dN = s.delay.value((np.arange(2) + tr.drivers) * epsilon)
    if float(np.max(np.abs(dN - d0))) > 1e-12:
        out.append("truncation: delay profile is not periodic under the "
                   "declared closure")
    return out
