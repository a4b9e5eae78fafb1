"""Shared scenario builders for the test suite.

Every builder returns a fully validated Scenario; the numeric choices
(step sizes, horizons, truncations) are the ones the module tests and the
acceptance suite rely on, so change them only together with the frozen
oracle values in the tests.
"""

import math

import numpy as np

import pursuitlab as pl

# Reaction time that locks the oscillating construction: tau = pi/(4*rate)
# for the default rate 3.
OSC_RATE = 3.0
OSC_TAU = math.pi / (4.0 * OSC_RATE)


def quadratic_velocity():
    """The clamped-quadratic speed law with the default parameters."""
    return pl.VelocityProfile.quadratic(k=1.0, beta=0.5, alpha=3.0,
                                        gap_ref=1.0)


def oscillating_scenario(horizon=None, dt_factor=1e-3, amplitude=0.4):
    """Two-driver periodic system whose gaps oscillate in closed form."""
    if horizon is None:
        horizon = 10.0 * OSC_TAU
    return pl.Scenario(
        velocity=quadratic_velocity(),
        delay=pl.DelayProfile.constant(OSC_TAU),
        initial=pl.InitialHistory.alternating_sine(
            gap=1.0, amplitude=amplitude, rate=OSC_RATE),
        truncation=pl.PeriodicTruncation(2, 2.0),
        horizon=horizon,
        dt=OSC_TAU * dt_factor)


def stationary_scenario(tau=0.25, horizon=1.0, n_sub=128,
                        epsilons=(0.1, 0.05, 0.025)):
    """Uniformly spaced drivers: X_i(t) = i + F(1) t exactly."""
    return pl.Scenario(
        velocity=quadratic_velocity(),
        delay=pl.DelayProfile.constant(tau),
        initial=pl.InitialHistory.linear(1.0),
        truncation=pl.PeriodicTruncation(1, 1.0),
        horizon=horizon,
        dt=tau / n_sub,
        epsilons=epsilons)


def disruption_runs(n0, tau, j=0, dt_factor=1e-3):
    """The order-disruption pair: (upper scenario, lower scenario).

    The upper family carries a compressed slot behind driver j; the lower
    family is uniformly spaced one unit apart.  Both share the clamped
    identity speed law on [0, 1] and the same reaction time.
    """
    vel = pl.VelocityProfile.linear(1.0, 0.0, 1.0)
    delay = pl.DelayProfile.constant(tau)
    dt = tau * dt_factor
    upper = pl.Scenario(
        velocity=vel, delay=delay,
        initial=pl.InitialHistory.disruption_pair(n0, j, "upper"),
        truncation=pl.ConeTruncation(j, j),
        horizon=tau, dt=dt)
    lower = pl.Scenario(
        velocity=vel, delay=delay,
        initial=pl.InitialHistory.disruption_pair(n0, j, "lower"),
        truncation=pl.PeriodicTruncation(1, 1.0),
        horizon=tau, dt=dt)
    return upper, lower


def wellspaced_scenario(epsilons=(0.1, 0.05, 0.025, 0.0125)):
    """Below-threshold scenario: linear data plus a small sinusoidal bump.

    The speed law is the identity clamped to [0.5, 1.5] (Lipschitz
    constant 1) and tau = 0.9/e sits strictly below the admissibility
    threshold 1/e.
    """
    tau = 0.9 / math.e
    return pl.Scenario(
        velocity=pl.VelocityProfile.linear(1.0, 0.5, 1.5),
        delay=pl.DelayProfile.constant(tau),
        initial=pl.InitialHistory.perturbed_linear(
            gap=1.0, amplitude=0.05, wavelength=1.0),
        truncation=pl.PeriodicTruncation(8, 8.0),
        horizon=1.0,
        dt=tau * 1e-3,
        epsilons=epsilons)


def wellspaced_macro(dx=1.0 / 160):
    """Macro reference for :func:`wellspaced_scenario` at CFL = 1.

    The domain is right-padded so that the default comparison region
    [-1, 1] x [0.1, 1] stays inside the numerical domain of determinacy.
    """
    s = wellspaced_scenario()
    return pl.solve_hj(s.velocity, s.initial.macro_initial,
                       region=(-1.0, 2.0 + dx, 0.0, 1.0), dx=dx, dt=dx)


def random_profile(rng, nx, dx, lipschitz=1.0, dyadic=False):
    """Random Lipschitz node values on nx nodes spaced dx apart.

    With ``dyadic=True`` the slopes are multiples of 2^-10, which keeps
    every scheme operation exact in binary floating point (used by the
    bitwise invariance tests).
    """
    slopes = rng.uniform(-lipschitz, lipschitz, nx - 1)
    if dyadic:
        slopes = np.round(slopes * 1024.0) / 1024.0
    u = np.empty(nx, dtype=float)
    u[0] = 0.0
    np.cumsum(slopes * dx, out=u[1:])
    return u
