"""Bitwise parity between the compiled kernel and the NumPy fallback."""

import subprocess
import sys

import numpy as np
import pytest

import pursuitlab as pl
from pursuitlab import _backend, _stepcore_py

import helpers

compiled = pytest.importorskip("pursuitlab._stepcore",
                               reason="compiled kernel not built")


def fractional_delay_scenario():
    """Delays that are not multiples of dt, under a cone closure."""
    x = np.array([-10.0, 10.0])
    tau = np.array([0.21303, 0.30517])
    return pl.Scenario(
        velocity=helpers.quadratic_velocity(),
        delay=pl.DelayProfile.tabulated(x, tau),
        initial=pl.InitialHistory.alternating_sine(1.0, 0.3, 2.0),
        truncation=pl.ConeTruncation(0, 3),
        horizon=1.0, dt=tau[0] / 213)


def run_with_kernel(monkeypatch, scenario, kernel):
    monkeypatch.setattr(_backend, "compute_speeds", kernel)
    return pl.integrate(scenario)


@pytest.mark.parametrize("build", [
    helpers.oscillating_scenario,
    fractional_delay_scenario,
], ids=["on-grid-delay", "fractional-delay"])
def test_kernels_agree_bitwise(monkeypatch, build):
    s = build()
    a = run_with_kernel(monkeypatch, s, compiled.compute_speeds)
    b = run_with_kernel(monkeypatch, s, _stepcore_py.compute_speeds)
    assert np.array_equal(a.positions, b.positions), \
        "compiled and python kernels must be bit-identical"


def test_velocity_kernels_agree_bitwise():
    rng = np.random.default_rng(7)
    gaps = rng.uniform(-1.0, 3.0, 4096)
    for v in (helpers.quadratic_velocity(),
              pl.VelocityProfile.linear(1.0, 0.5, 1.5),
              pl.VelocityProfile.tabulated([0.0, 0.7, 2.0], [0.0, 0.5, 1.0])):
        kind, p, tx, tf = v.kernel_spec()
        f_py = _stepcore_py.velocity_values(kind, p, tx, tf, gaps)
        f_c = compiled.velocity_values(kind, p, tx, tf, gaps)
        assert np.array_equal(f_py, f_c)


def test_backend_env_var_selects_python():
    code = ("import pursuitlab as pl; "
            "print(pl.backend_name())")
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True, text=True,
        env={"PURSUITLAB_BACKEND": "python", "PATH": "/usr/bin:/bin"})
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "python"


def test_backend_env_var_rejects_unknown_choice():
    code = "import pursuitlab"
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True, text=True,
        env={"PURSUITLAB_BACKEND": "turbo", "PATH": "/usr/bin:/bin"})
    assert out.returncode != 0
    assert "PURSUITLAB_BACKEND" in out.stderr
