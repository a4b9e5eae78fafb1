"""Spacing-function admissibility: thresholds, construction, certification."""

import math

import numpy as np
import pytest

import pursuitlab as pl


# ---------------------------------------------------------------------------
# Threshold formulas
# ---------------------------------------------------------------------------

def test_homogenization_threshold_values():
    assert pl.homogenization_threshold(1.0) == pytest.approx(
        0.36787944117144233, rel=1e-14)
    assert pl.homogenization_threshold(4.0) == pytest.approx(
        0.09196986029286058, rel=1e-14)


def test_homogenization_threshold_monotone():
    cf = np.linspace(0.1, 50.0, 400)
    th = np.array([pl.homogenization_threshold(c) for c in cf])
    assert np.all(np.diff(th) < 0)


def test_constant_spacing_threshold_value():
    assert pl.constant_spacing_threshold(2.0) == 0.125


@pytest.mark.parametrize("fn", [pl.homogenization_threshold,
                                pl.constant_spacing_threshold])
def test_thresholds_reject_nonpositive_lipschitz(fn):
    with pytest.raises(pl.DomainError):
        fn(0.0)
    with pytest.raises(pl.DomainError):
        fn(-1.0)


def test_constant_spacing_feasibility_examples():
    # level 2 at tau=0.2: 2*1*0.2 = 0.4 < 1 - 1/2
    assert pl.constant_spacing_feasible(0.2, 1.0, 2.0)
    # same level at tau=0.3: 0.6 > 0.5
    assert not pl.constant_spacing_feasible(0.3, 1.0, 2.0)


def test_constant_spacing_interval_brackets_feasible_levels():
    lo, hi = pl.constant_spacing_interval(0.2, 1.0)
    # roots of 0.2 x^2 - x + 1; any level strictly inside is feasible
    assert lo == pytest.approx((1.0 - math.sqrt(0.2)) / 0.4, rel=1e-12)
    assert hi == pytest.approx((1.0 + math.sqrt(0.2)) / 0.4, rel=1e-12)
    assert pl.constant_spacing_feasible(0.2, 1.0, 0.5 * (lo + hi))
    assert not pl.constant_spacing_feasible(0.2, 1.0, lo - 1e-6)
    assert not pl.constant_spacing_feasible(0.2, 1.0, hi + 1e-6)


# ---------------------------------------------------------------------------
# The exponential construction
# ---------------------------------------------------------------------------

def test_construct_matches_bisection_oracle():
    rho = pl.build_spacing_function(0.3, 1.0, start=1.05)
    # growth root, via an independent 200-step bisection of
    # ln(g) - 1.05*g*0.3 = ln(1.05)
    g = rho.rate / (rho.start * rho.c_f)
    assert g == pytest.approx(1.9261706801011331, rel=1e-11)
    assert rho.value(0.0) == pytest.approx(1.05, rel=1e-14)


def test_construct_solves_fixed_point_to_tolerance():
    for tau, cf, lam in [(0.3, 1.0, 1.05), (0.08, 4.0, 1.05),
                         (0.36, 1.0, 1.01)]:
        rho = pl.build_spacing_function(tau, cf, start=lam)
        g = rho.rate / (rho.start * rho.c_f)
        assert abs(g - lam * math.exp(lam * g * cf * tau)) < 1e-9 * g


def test_construct_near_threshold_succeeds():
    rho = pl.build_spacing_function(0.36, 1.0, start=1.01)
    assert pl.certify(rho).holds


def test_construct_above_threshold_is_infeasible():
    with pytest.raises(pl.InfeasibilityError, match="1/\\(e\\*C_F\\)"):
        pl.build_spacing_function(0.37, 1.0)


def test_construct_rejects_lambda_outside_range():
    with pytest.raises(pl.DomainError):
        pl.build_spacing_function(0.3, 1.0, start=1.0)     # lam must exceed 1
    with pytest.raises(pl.DomainError):
        pl.build_spacing_function(0.3, 1.0, start=1.2)     # beyond sqrt bound


def test_default_start_is_geometric_midpoint():
    tau, cf = 0.25, 1.0
    rho = pl.build_spacing_function(tau, cf)
    expected = math.sqrt(math.sqrt(1.0 / (math.e * tau * cf)))
    assert rho.value(0.0) == pytest.approx(expected, rel=1e-12)


# ---------------------------------------------------------------------------
# Certification
# ---------------------------------------------------------------------------

def test_certify_constant_level_two_at_tau_point_two():
    rho = pl.constant_spacing_function(0.2, 1.0, 2.0)
    cert = pl.certify(rho)
    assert cert.holds
    # margin 2 - (1 + 2*0.4) = 0.2 attained at tau' = tau
    assert cert.min_margin == pytest.approx(0.2, abs=1e-12)
    assert cert.witness == pytest.approx(0.2, abs=1e-12)


def test_certify_constant_level_two_fails_at_tau_point_three():
    rho = pl.constant_spacing_function(0.3, 1.0, 2.0)
    cert = pl.certify(rho)
    assert not cert.holds
    assert cert.witness == pytest.approx(0.3, abs=1e-12)
    assert cert.min_margin == pytest.approx(2.0 - 2.2, abs=1e-12)


def test_certify_built_functions_have_positive_margin():
    for tau, cf in [(0.3, 1.0), (0.05, 4.0), (0.35, 1.0)]:
        cert = pl.certify(pl.build_spacing_function(tau, cf))
        assert cert.holds
        assert cert.min_margin > 0.0


def test_certify_rejects_coarse_grids():
    rho = pl.build_spacing_function(0.3, 1.0)
    with pytest.raises(pl.ConfigurationError):
        pl.certify(rho, grid_points=15)


def test_certificate_json_fields():
    cert = pl.certify(pl.build_spacing_function(0.3, 1.0))
    d = cert.to_json_dict()
    assert set(d) == {"tau", "C_F", "kind", "params", "min_margin",
                      "witness", "holds"}
    assert d["kind"] == "exponential"


# ---------------------------------------------------------------------------
# Structural properties
# ---------------------------------------------------------------------------

def test_admissible_functions_start_above_one():
    for tau, cf in [(0.3, 1.0), (0.01, 4.0), (0.36, 1.0)]:
        rho = pl.build_spacing_function(tau, cf)
        assert rho.value(0.0) > 1.0


def test_spacing_functions_are_nondecreasing():
    rng = np.random.default_rng(8121)
    rho = pl.build_spacing_function(0.3, 1.0)
    pairs = np.sort(rng.uniform(0.0, 0.3, (1000, 2)), axis=1)
    v1 = np.array([rho.value(a) for a in pairs[:, 0]])
    v2 = np.array([rho.value(b) for b in pairs[:, 1]])
    assert np.all(v1 <= v2)


def test_exponential_integral_matches_quadrature():
    rho = pl.build_spacing_function(0.3, 1.0)
    grid = np.linspace(0.0, 0.27, 2001)
    vals = np.array([rho.value(t) for t in grid])
    quad = np.trapezoid(vals, grid)
    assert rho.integral(0.27) == pytest.approx(quad, rel=1e-7)


def test_iff_threshold_property():
    rng = np.random.default_rng(31415)
    for _ in range(100):
        cf = rng.uniform(0.2, 5.0)
        tau = rng.uniform(0.05, 0.99) / (math.e * cf)
        rho = pl.build_spacing_function(tau, cf)
        cert = pl.certify(rho)
        assert cert.holds and cert.min_margin > 0.0
    for _ in range(100):
        cf = rng.uniform(0.2, 5.0)
        tau = rng.uniform(1.0, 3.0) / (math.e * cf)
        with pytest.raises(pl.InfeasibilityError):
            pl.build_spacing_function(tau, cf)
