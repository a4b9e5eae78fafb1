"""Benchmark the compiled stepping kernel against the NumPy fallback.

Runs the same delayed-pursuit integration with both kernels, reports the
best wall time of each, and verifies the results stay bit-identical.

Usage:
    python benchmarks/bench_stepcore.py [--drivers N] [--horizon T]
                                        [--dt-factor F] [--repeats R]
"""

import argparse
import math
import time

import numpy as np

import pursuitlab as pl
from pursuitlab import _backend, _stepcore_py


def build_scenario(drivers, horizon, dt_factor):
    tau = 0.9 / math.e
    return pl.Scenario(
        velocity=pl.VelocityProfile.linear(1.0, 0.5, 1.5),
        delay=pl.DelayProfile.constant(tau),
        initial=pl.InitialHistory.perturbed_linear(
            gap=1.0, amplitude=0.05, wavelength=1.0),
        truncation=pl.PeriodicTruncation(drivers, float(drivers)),
        horizon=horizon,
        dt=tau * dt_factor)


def time_kernel(scenario, kernel, repeats):
    saved = _backend.compute_speeds
    _backend.compute_speeds = kernel
    try:
        best, result = math.inf, None
        for _ in range(repeats):
            t0 = time.perf_counter()
            result = pl.integrate(scenario)
            best = min(best, time.perf_counter() - t0)
        return best, result
    finally:
        _backend.compute_speeds = saved


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--drivers", type=int, default=64,
                    help="periodic drivers per cell (default 64)")
    ap.add_argument("--horizon", type=float, default=1.0,
                    help="integration horizon (default 1.0)")
    ap.add_argument("--dt-factor", type=float, default=1e-3,
                    help="dt as a fraction of the delay (default 1e-3)")
    ap.add_argument("--repeats", type=int, default=3,
                    help="timing repeats, best-of (default 3)")
    args = ap.parse_args(argv)

    s = build_scenario(args.drivers, args.horizon, args.dt_factor)
    steps = round(args.horizon / s.dt)
    work = steps * args.drivers
    print(f"drivers={args.drivers} steps={steps} "
          f"(driver-steps {work:,})")

    t_py, r_py = time_kernel(s, _stepcore_py.compute_speeds, args.repeats)
    print(f"  python    {t_py:8.3f} s   ({work / t_py:,.0f} driver-steps/s)")

    try:
        from pursuitlab import _stepcore
    except ImportError:
        print("  compiled  not built (pip install -e . rebuilds it)")
        return
    t_c, r_c = time_kernel(s, _stepcore.compute_speeds, args.repeats)
    print(f"  compiled  {t_c:8.3f} s   ({work / t_c:,.0f} driver-steps/s)"
          f"   speedup {t_py / t_c:.1f}x")
    print(f"bit-identical positions: "
          f"{np.array_equal(r_py.positions, r_c.positions)}")


if __name__ == "__main__":
    main()
