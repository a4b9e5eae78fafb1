"""Macroscopic solver: exact solutions, stability guards, and the
structural guarantees of the monotone upwind march (discrete comparison,
constant/translation invariance, Lipschitz preservation)."""

import io
import math

import numpy as np
import pytest

import pursuitlab as pl

import helpers


# ---------------------------------------------------------------------------
# Exact solutions
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("p", [0.25, 1.0, 1.75])
def test_plane_wave_is_exact(p):
    # With initial slope p everywhere (ghost included), every node gains
    # dt * F(p) per step, so u(x, t) = p x + F(p) t up to roundoff.
    vel = helpers.quadratic_velocity()
    speed = vel.evaluate(p)
    f = pl.solve_hj(vel, lambda x: p * x, region=(-1.0, 1.0, 0.0, 0.5),
                    dx=0.05)
    expected = p * f.xgrid()[None, :] + speed * f.tgrid()[:, None]
    assert np.max(np.abs(f.values - expected)) <= 1e-12


def test_default_step_is_stable_and_divides_the_span():
    vel = helpers.quadratic_velocity()
    c_f, _ = vel.lipschitz_data()
    f = pl.solve_hj(vel, lambda x: x, region=(-1.0, 1.0, 0.0, 0.5), dx=0.05)
    assert f.dt * c_f <= 0.05 * (1.0 + 1e-9)
    n = 0.5 / f.dt
    assert abs(n - round(n)) < 1e-9
    assert f.t1 == pytest.approx(0.5, abs=1e-12)


def test_zero_velocity_keeps_the_profile_frozen():
    vel = pl.VelocityProfile.tabulated([0.0, 2.0], [0.0, 0.0])
    f = pl.solve_hj(vel, np.cos, region=(0.0, 2.0, 0.0, 3.0), dx=0.25,
                    dt=0.5)
    assert f.nt == 7
    assert (f.values == f.values[0]).all()


def test_smooth_transport_converges_at_first_order():
    # F(p) = 1 + p on the unclamped band, so u(x, t) = a sin(x + t) + t
    # solves the law exactly while the slopes stay within [-a, a].
    vel = pl.VelocityProfile.linear(1.0, -0.5, 0.5, intercept=1.0)
    a = 0.1

    def error(dx):
        f = pl.solve_hj(vel, lambda x: a * np.sin(x),
                        region=(-2.0, 4.0, 0.0, 1.0), dx=dx, dt=dx / 2.0)
        exact = (a * np.sin(f.xgrid()[None, :] + f.tgrid()[:, None])
                 + f.tgrid()[:, None])
        diff = np.abs(f.values - exact)
        return float(np.max(diff[f.determinacy_mask()]))

    coarse, fine = error(0.04), error(0.02)
    assert coarse < 0.05
    assert 1.5 <= coarse / fine <= 3.0


# ---------------------------------------------------------------------------
# Stability and configuration guards
# ---------------------------------------------------------------------------

def test_unstable_step_is_refused():
    vel = helpers.quadratic_velocity()   # C_F = 4
    with pytest.raises(pl.ConfigurationError, match="unstable step"):
        pl.solve_hj(vel, lambda x: x, region=(0.0, 1.0, 0.0, 1.0),
                    dx=0.1, dt=0.1)


def test_unstable_step_message_names_the_bound():
    vel = helpers.quadratic_velocity()
    with pytest.raises(pl.ConfigurationError, match=r"dt <= 0.025"):
        pl.solve_hj(vel, lambda x: x, region=(0.0, 1.0, 0.0, 1.0),
                    dx=0.1, dt=0.1)


def test_dt_must_divide_the_time_span():
    vel = helpers.quadratic_velocity()
    with pytest.raises(pl.ConfigurationError, match="dt=0.3 must divide"):
        pl.solve_hj(vel, lambda x: 0.0 * x, region=(0.0, 2.0, 0.0, 1.0),
                    dx=2.0, dt=0.3)


def test_dx_must_divide_the_space_span():
    vel = helpers.quadratic_velocity()
    with pytest.raises(pl.ConfigurationError, match="dx=0.3 must divide"):
        pl.solve_hj(vel, lambda x: 0.0 * x, region=(0.0, 1.0, 0.0, 1.0),
                    dx=0.3)


def test_degenerate_inputs_are_domain_errors():
    vel = helpers.quadratic_velocity()
    with pytest.raises(pl.DomainError, match="empty region"):
        pl.solve_hj(vel, lambda x: x, region=(1.0, 1.0, 0.0, 1.0), dx=0.1)
    with pytest.raises(pl.DomainError, match="empty region"):
        pl.solve_hj(vel, lambda x: x, region=(0.0, 1.0, 1.0, 0.5), dx=0.1)
    with pytest.raises(pl.DomainError, match="dx must be positive"):
        pl.solve_hj(vel, lambda x: x, region=(0.0, 1.0, 0.0, 1.0), dx=-0.1)
    with pytest.raises(pl.DomainError, match="dt must be positive"):
        pl.solve_hj(vel, lambda x: x, region=(0.0, 1.0, 0.0, 1.0), dx=0.1,
                    dt=0.0)


def test_initial_profile_is_checked():
    vel = helpers.quadratic_velocity()
    with pytest.raises(pl.DomainError, match="initial profile has 3 values"):
        pl.solve_hj(vel, np.zeros(3), region=(0.0, 1.0, 0.0, 1.0), dx=0.1)
    bad = np.zeros(11)
    bad[4] = np.nan
    with pytest.raises(pl.DomainError, match="non-finite"):
        pl.solve_hj(vel, bad, region=(0.0, 1.0, 0.0, 1.0), dx=0.1)


# ---------------------------------------------------------------------------
# Structural guarantees of the monotone scheme
# ---------------------------------------------------------------------------

def test_discrete_comparison_for_ordered_data():
    # Ordered initial profiles stay ordered.  The perturbation vanishes
    # on the last two nodes so both runs freeze the same ghost slope.
    rng = np.random.default_rng(20260823)
    vel = pl.VelocityProfile.linear(1.0, 0.0, 1.0)
    nx, dx = 40, 0.1
    region = (0.0, (nx - 1) * dx, 0.0, 1.0)
    for _ in range(20):
        u0 = helpers.random_profile(rng, nx, dx, lipschitz=2.0)
        bump = rng.uniform(0.0, 0.5, nx)
        bump[-2:] = 0.0
        fu = pl.solve_hj(vel, u0, region=region, dx=dx, dt=dx)
        fv = pl.solve_hj(vel, u0 + bump, region=region, dx=dx, dt=dx)
        assert float(np.min(fv.values - fu.values)) >= -1e-10


@pytest.mark.parametrize("c", [0.5, -0.375])
def test_adding_a_dyadic_constant_commutes_bitwise(c):
    # Dyadic node values and steps keep every scheme operation exact, so
    # the invariance u -> u + c holds to the last bit.
    rng = np.random.default_rng(404)
    vel = pl.VelocityProfile.linear(1.0, 0.0, 1.0)
    nx, dx = 33, 1.0 / 16
    u0 = helpers.random_profile(rng, nx, dx, dyadic=True)
    region = (0.0, (nx - 1) * dx, 0.0, 1.0)
    fu = pl.solve_hj(vel, u0, region=region, dx=dx, dt=dx)
    fc = pl.solve_hj(vel, u0 + c, region=region, dx=dx, dt=dx)
    assert np.array_equal(fc.values, fu.values + c)


def test_adding_a_generic_constant_commutes_to_roundoff():
    rng = np.random.default_rng(405)
    vel = pl.VelocityProfile.linear(1.0, 0.0, 1.0)
    nx, dx = 40, 0.1
    u0 = helpers.random_profile(rng, nx, dx)
    region = (0.0, (nx - 1) * dx, 0.0, 1.0)
    fu = pl.solve_hj(vel, u0, region=region, dx=dx, dt=dx)
    fc = pl.solve_hj(vel, u0 + 0.7, region=region, dx=dx, dt=dx)
    assert np.max(np.abs(fc.values - (fu.values + 0.7))) <= 1e-12


def test_shifting_the_grid_one_node_commutes_bitwise():
    # Dropping the leftmost node shifts the whole computation by one
    # station; both runs share the same frozen edge slope, so the values
    # agree bitwise across the entire overlap.
    rng = np.random.default_rng(406)
    vel = pl.VelocityProfile.linear(1.0, 0.0, 1.0)
    nx, dx = 41, 0.1
    u0 = helpers.random_profile(rng, nx, dx)
    fa = pl.solve_hj(vel, u0, region=(0.0, (nx - 1) * dx, 0.0, 1.0),
                     dx=dx, dt=dx)
    fb = pl.solve_hj(vel, u0[1:], region=(dx, (nx - 1) * dx, 0.0, 1.0),
                     dx=dx, dt=dx)
    assert np.array_equal(fb.values, fa.values[:, 1:])


def test_slope_range_is_preserved():
    # A new slope is a convex combination of the two old ones whenever
    # dt * C_F <= dx, so the initial slope range can never widen.
    rng = np.random.default_rng(407)
    vel = pl.VelocityProfile.linear(1.0, 0.0, 1.0)
    nx, dx = 50, 0.1
    u0 = helpers.random_profile(rng, nx, dx)
    f = pl.solve_hj(vel, u0, region=(0.0, (nx - 1) * dx, 0.0, 2.0),
                    dx=dx, dt=dx)
    s0 = np.diff(u0) / dx
    lo, hi = float(np.min(s0)), float(np.max(s0))
    slopes = np.diff(f.values, axis=1) / dx
    assert float(np.min(slopes)) >= lo - 1e-12
    assert float(np.max(slopes)) <= hi + 1e-12


def test_unit_cfl_identity_law_is_a_pure_shift():
    # When F is the identity on the slope range and dt = dx, the update
    # telescopes to u_j^{n+1} = u_{j+1}^n; with dyadic data this is exact,
    # and the determinacy mask marks precisely the shifted nodes.
    rng = np.random.default_rng(408)
    vel = pl.VelocityProfile.linear(1.0, 0.0, 1.0)
    nx, dx = 33, 1.0 / 16
    slopes = np.round(rng.uniform(0.1, 0.9, nx - 1) * 1024.0) / 1024.0
    u0 = np.concatenate(([0.0], np.cumsum(slopes * dx)))
    f = pl.solve_hj(vel, u0, region=(0.0, (nx - 1) * dx, 0.0, 1.0),
                    dx=dx, dt=dx)
    mask = f.determinacy_mask()
    assert mask[0].all() and not mask[-1, -1]
    for n in range(f.nt):
        assert (f.values[n, :nx - n] == u0[n:]).all()
        assert mask[n].sum() == nx - n


# ---------------------------------------------------------------------------
# Field queries, errors between fields, serialization
# ---------------------------------------------------------------------------

def small_field():
    return pl.FieldGrid(x0=0.0, dx=1.0, nx=3, t0=0.0, dt=1.0, nt=2,
                        values=np.array([[0.0, 1.0, 2.0],
                                         [3.0, 4.0, 5.0]]))


def test_value_at_interpolates_bilinearly():
    f = small_field()
    assert f.value_at(0.0, 0.0) == 0.0
    assert f.value_at(2.0, 1.0) == 5.0
    assert f.value_at(0.5, 0.0) == pytest.approx(0.5, abs=1e-15)
    assert f.value_at(0.0, 0.5) == pytest.approx(1.5, abs=1e-15)
    assert f.value_at(0.5, 0.5) == pytest.approx(2.0, abs=1e-15)
    got = f.value_at(np.array([0.0, 1.0, 2.0]), 0.0)
    assert np.array_equal(got, [0.0, 1.0, 2.0])


def test_value_at_rejects_points_off_the_grid():
    f = small_field()
    with pytest.raises(pl.RangeError, match="x query"):
        f.value_at(2.1, 0.5)
    with pytest.raises(pl.RangeError, match="t query"):
        f.value_at(1.0, -0.2)


def test_sup_error_against_itself_and_a_closed_form():
    vel = helpers.quadratic_velocity()
    f = pl.solve_hj(vel, lambda x: 0.5 * x, region=(-1.0, 1.0, 0.0, 0.5),
                    dx=0.05)
    assert pl.sup_error(f, f) == 0.0
    speed = vel.evaluate(0.5)
    xg = -1.0 + 0.125 * np.arange(17)
    tg = 0.125 * np.arange(5)
    exact = pl.FieldGrid(-1.0, 0.125, 17, 0.0, 0.125, 5,
                         0.5 * xg[None, :] + speed * tg[:, None])
    assert pl.sup_error(f, exact) <= 1e-12


def test_sup_error_requires_overlap():
    a = small_field()
    b = pl.FieldGrid(10.0, 1.0, 3, 0.0, 1.0, 2, np.zeros((2, 3)))
    with pytest.raises(pl.ConfigurationError, match="share no sample nodes"):
        pl.sup_error(a, b)
    with pytest.raises(pl.ConfigurationError, match="share no sample nodes"):
        pl.sup_error(a, a, region=(5.0, 6.0, 0.0, 1.0))


def test_field_csv_round_trip():
    f = small_field()
    buf = io.StringIO()
    f.to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,x,u"
    assert len(lines) == 1 + f.nt * f.nx
    assert lines[1] == "0,0,0"
    back = np.loadtxt(io.StringIO(buf.getvalue()), delimiter=",",
                      skiprows=1)
    assert np.array_equal(back[:, 2].reshape(f.nt, f.nx), f.values)
    assert np.array_equal(back[:, 0].reshape(f.nt, f.nx)[:, 0], f.tgrid())


def test_wellspaced_macro_helper_runs_at_unit_cfl():
    f = helpers.wellspaced_macro(dx=1.0 / 40)
    assert f.dt == f.dx
    s = helpers.wellspaced_scenario()
    init = s.initial.macro_initial(f.xgrid())
    assert np.max(np.abs(f.values[0] - init)) <= 1e-12
