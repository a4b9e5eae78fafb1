"""Command-line orchestration: scenarios in, CSV/JSON artifacts out.

Verbs map one-to-one onto module entry points:

* ``simulate``       integrate a scenario; trajectories CSV + order audit
* ``threshold``      admissibility thresholds for a given Lipschitz bound
* ``compare``        separation audits between a run and its index shift
* ``homogenize``     convergence study against the macroscopic solver
* ``counterexample`` drift quotients of the oscillating family per scale
* ``validate``       check a scenario file and report every violation

Every run writes ``report.json`` (and verbs with a scenario write
``scenario_echo.json`` with all overrides applied, so the echo re-runs
identically).  Artifacts carry no timestamps, use sorted JSON keys and
17-significant-digit CSV floats: identical commands produce
byte-identical bytes.

Exit codes: 0 success; 1 invalid input (missing file, malformed JSON,
violated invariants, infeasible construction); 2 failed audit or unmet
``--expect`` assertion.
"""

from __future__ import annotations

import argparse
import json
import math
import os
from dataclasses import replace

import numpy as np

from . import _backend
from .comparison import (ComparisonWindow, SampledField,
                         check_separation_bound, order_conservation_audit)
from .defaults import EPSILONS, REGION, TAU_GRID_POINTS
from .engine import integrate
from .errors import PursuitError, ValidationError
from .homogenize import (convergence_study, drift_scan, predicted_drift,
                         write_drift_csv)
from .macro import solve_hj
from .model import Scenario, validate_scenario
from .thresholds import (build_spacing_function, certify,
                         constant_spacing_function,
                         constant_spacing_threshold,
                         homogenization_threshold)


class _Failure(Exception):
    """Controlled CLI failure carrying the exit code and report entry."""

    def __init__(self, code, entry):
        super().__init__(entry.get("error", {}).get("message", "failure"))
        self.code = code
        self.entry = entry


def emit_report(results):
    """Single deterministic summary document for a list of run entries."""
    return json.dumps({"runs": list(results)}, sort_keys=True, indent=2)


def _write(outdir, name, text):
    with open(os.path.join(outdir, name), "w") as f:
        f.write(text)
        if not text.endswith("\n"):
            f.write("\n")


def _error_entry(verb, exc):
    return {"verb": verb, "status": "error",
            "error": {"type": type(exc).__name__, "message": str(exc)}}


def _parse_eps(text):
    return tuple(float(v) for v in text.split(","))


def _parse_region(text):
    parts = tuple(float(v) for v in text.split(","))
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("region must be x0,x1,t0,t1")
    return parts


def _parse_stations(text):
    parts = tuple(int(v) for v in text.split(","))
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("stations must be lo,hi")
    return parts


def _load_scenario(verb, path, dt=None, eps=None):
    if path is None:
        raise _Failure(1, _error_entry(verb, ValueError(
            "--scenario is required for this verb")))
    try:
        with open(path) as f:
            text = f.read()
    except OSError as exc:
        raise _Failure(1, _error_entry(verb, exc)) from exc
    try:
        s = Scenario.from_json(text)
    except PursuitError as exc:
        raise _Failure(1, _error_entry(verb, exc)) from exc
    if dt is not None:
        s = replace(s, dt=float(dt))
    if eps is not None:
        s = replace(s, epsilons=tuple(eps))
    return s


def _validated(verb, s, outdir, epsilon=1.0):
    report = validate_scenario(s, epsilon=epsilon)
    _write(outdir, "scenario_echo.json", s.to_json())
    if not report.ok:
        raise _Failure(1, {"verb": verb, "status": "invalid",
                           "validation": report.to_json_dict(),
                           "artifacts": ["scenario_echo.json"]})
    return report


# ---------------------------------------------------------------------------
# Verbs
# ---------------------------------------------------------------------------

def _run_validate(args, outdir):
    s = _load_scenario("validate", args.scenario, args.dt, args.eps)
    report = validate_scenario(s, epsilon=args.epsilon)
    _write(outdir, "scenario_echo.json", s.to_json())
    entry = {"verb": "validate",
             "status": "ok" if report.ok else "invalid",
             "validation": report.to_json_dict(),
             "artifacts": ["scenario_echo.json"]}
    return (0 if report.ok else 1), entry


def _run_simulate(args, outdir):
    s = _load_scenario("simulate", args.scenario, args.dt, args.eps)
    _validated("simulate", s, outdir, args.epsilon)
    ts = integrate(s, epsilon=args.epsilon)
    with open(os.path.join(outdir, "trajectories.csv"), "w") as f:
        ts.to_csv(f)
    crossing = order_conservation_audit(ts)
    entry = {"verb": "simulate", "status": "ok",
             "backend": _backend.backend_name(),
             "epsilon": args.epsilon,
             "committed_until": ts.committed_until,
             "first_order_crossing": (list(crossing) if crossing is not None
                                      else None),
             "artifacts": ["scenario_echo.json", "trajectories.csv"]}
    return 0, entry


def _run_threshold(args, outdir):
    if args.cf is None:
        raise _Failure(1, _error_entry("threshold", ValueError(
            "--cf is required for the threshold verb")))
    doc = {"homogenization": homogenization_threshold(args.cf),
           "constant_rho": constant_spacing_threshold(args.cf)}
    _write(outdir, "threshold.json",
           json.dumps(doc, sort_keys=True, indent=2))
    entry = {"verb": "threshold", "status": "ok", "thresholds": doc,
             "artifacts": ["threshold.json"]}
    if args.tau is not None:
        try:
            rho = build_spacing_function(args.tau, args.cf)
        except PursuitError as exc:
            raise _Failure(1, _error_entry("threshold", exc)) from exc
        entry["certificate"] = certify(rho).to_json_dict()
    return 0, entry


def _run_compare(args, outdir):
    s = _load_scenario("compare", args.scenario, args.dt, args.eps)
    _validated("compare", s, outdir, args.epsilon)
    ts = integrate(s, epsilon=args.epsilon)
    tau = s.delay.tau_max
    c_f, _ = s.velocity.lipschitz_data()
    if args.rho_level is not None:
        rho = constant_spacing_function(tau, c_f, args.rho_level)
    else:
        try:
            rho = build_spacing_function(tau, c_f)
        except PursuitError as exc:
            raise _Failure(1, _error_entry("compare", exc)) from exc

    if args.stations is not None:
        lo, hi = args.stations
    else:
        lo, hi = ts.driver_lo, ts.driver_hi
        if ts.mode == "cone":
            hi -= args.shift
    if hi < lo:
        raise _Failure(1, _error_entry("compare", ValueError(
            f"empty station range [{lo}, {hi}]")))
    stations = np.arange(lo, hi + 1)
    times = ts.times()
    u = SampledField.from_trajectories(ts, stations, times)
    v = SampledField.from_trajectories(ts, stations, times,
                                       index_shift=args.shift)
    window = ComparisonWindow(args.delta, args.t0,
                              ts.committed_until + 0.5 * ts.dt, rho,
                              x0=args.x0, radius=args.radius)
    audit = check_separation_bound(v, u, window,
                                   tau_points=args.tau_points)
    _write(outdir, "audit.json", audit.to_json())
    with open(os.path.join(outdir, "violations.csv"), "w") as f:
        audit.write_violations_csv(f)
    outcome_holds = audit.hypotheses_ok and audit.conclusion_ok
    contradiction = audit.hypotheses_ok and not audit.conclusion_ok
    entry = {"verb": "compare",
             "status": "audit-failed" if contradiction else "ok",
             "shift": args.shift, "delta": args.delta,
             "audit": audit.to_json_dict(),
             "certificate": audit.certificate.to_json_dict(),
             "artifacts": ["scenario_echo.json", "audit.json",
                           "violations.csv"]}
    code = 2 if contradiction else 0
    if args.expect == "holds" and not outcome_holds:
        code = 2
    elif args.expect == "fails" and outcome_holds:
        entry["status"] = "expect-mismatch"
        code = 2
    return code, entry


def _macro_for(s, region, dx, dt_macro):
    """Solve the macro field on a right-padded domain so every node of
    ``region`` sits inside the scheme's cone of determinacy."""
    x0, x1, t0, t1 = region
    c_f, _ = s.velocity.lipschitz_data()
    if dt_macro is None:
        dt_macro = dx / c_f if c_f > 0 else t1
    pad = (dx / dt_macro) * t1
    x1m = x1 + dx * math.ceil(pad / dx - 1e-9) + dx
    return solve_hj(s.velocity, s.initial.macro_initial,
                    (x0, x1m, 0.0, t1), dx, dt_macro)


def _run_homogenize(args, outdir):
    s = _load_scenario("homogenize", args.scenario, args.dt, args.eps)
    _validated("homogenize", s, outdir)
    region = args.region if args.region is not None else REGION
    if region[2] < 0:
        raise _Failure(1, _error_entry("homogenize", ValueError(
            "region start time must be >= 0 (micro runs begin at t=0)")))
    eps_list = (args.eps if args.eps is not None
                else (s.epsilons if s.epsilons else EPSILONS))
    try:
        macro = _macro_for(s, region, args.dx, args.dt_macro)
        record = convergence_study(s, macro, region, epsilons=eps_list)
    except PursuitError as exc:
        raise _Failure(1, _error_entry("homogenize", exc)) from exc
    with open(os.path.join(outdir, "convergence.csv"), "w") as f:
        record.to_csv(f)
    with open(os.path.join(outdir, "macro.csv"), "w") as f:
        macro.to_csv(f)
    entry = {"verb": "homogenize", "status": "ok",
             "region": list(record.region),
             "epsilons": list(record.epsilons),
             "errors": list(record.errors),
             "verdict": record.verdict,
             "drift_estimate": record.drift_estimate,
             "artifacts": ["scenario_echo.json", "convergence.csv",
                           "macro.csv"]}
    code = 0
    if args.expect is not None and record.verdict != args.expect:
        entry["status"] = "expect-mismatch"
        code = 2
    return code, entry


def _run_counterexample(args, outdir):
    s = _load_scenario("counterexample", args.scenario, args.dt, args.eps)
    _validated("counterexample", s, outdir)
    eps_list = (args.eps if args.eps is not None
                else (s.epsilons if s.epsilons else EPSILONS))
    try:
        predicted = predicted_drift(s)
        rows = drift_scan(s, eps_list, args.s, args.h)
    except PursuitError as exc:
        raise _Failure(1, _error_entry("counterexample", exc)) from exc
    with open(os.path.join(outdir, "drift.csv"), "w") as f:
        write_drift_csv(rows, f)
    macro_ref = float(s.velocity.evaluate(s.initial.params["gap"]))
    entry = {"verb": "counterexample", "status": "ok",
             "predicted_drift": predicted,
             "macro_reference": macro_ref,
             "rows": [list(r) for r in rows],
             "artifacts": ["scenario_echo.json", "drift.csv"]}
    code = 0
    if args.tol is not None and rows:
        if abs(rows[-1][3] - predicted) > args.tol:
            entry["status"] = "expect-mismatch"
            code = 2
    return code, entry


_VERBS = {
    "validate": _run_validate,
    "simulate": _run_simulate,
    "threshold": _run_threshold,
    "compare": _run_compare,
    "homogenize": _run_homogenize,
    "counterexample": _run_counterexample,
}


def _build_parser():
    p = argparse.ArgumentParser(
        prog="pursuitlab",
        description="delayed pursuit-law simulation laboratory")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp, scenario=True):
        if scenario:
            sp.add_argument("--scenario", help="scenario JSON path")
            sp.add_argument("--dt", type=float, default=None,
                            help="override the scenario time step")
            sp.add_argument("--eps", type=_parse_eps, default=None,
                            help="override the scale list, e.g. 0.1,0.05")
        sp.add_argument("--out", required=True, help="output directory")

    sp = sub.add_parser("validate", help="check a scenario file")
    common(sp)
    sp.add_argument("--epsilon", type=float, default=1.0)

    sp = sub.add_parser("simulate", help="integrate and export trajectories")
    common(sp)
    sp.add_argument("--epsilon", type=float, default=1.0,
                    help="embedding scale for delays and initial data")

    sp = sub.add_parser("threshold", help="admissibility thresholds")
    common(sp, scenario=False)
    sp.add_argument("--cf", type=float, default=None,
                    help="Lipschitz constant of the velocity law")
    sp.add_argument("--tau", type=float, default=None,
                    help="also construct and certify a spacing function")

    sp = sub.add_parser("compare", help="separation audit against a shift")
    common(sp)
    sp.add_argument("--epsilon", type=float, default=1.0)
    sp.add_argument("--shift", type=int, default=1,
                    help="index shift defining the upper field")
    sp.add_argument("--delta", type=float, required=True,
                    help="claimed initial separation")
    sp.add_argument("--t0", type=float, default=0.0)
    sp.add_argument("--x0", type=float, default=0.0)
    sp.add_argument("--radius", type=float, default=None,
                    help="half-width of the core (default: infinite)")
    sp.add_argument("--stations", type=_parse_stations, default=None)
    sp.add_argument("--tau-points", type=int, default=TAU_GRID_POINTS)
    sp.add_argument("--rho-level", type=float, default=None,
                    help="use a constant spacing function at this level")
    sp.add_argument("--expect", choices=["holds", "fails"], default=None)

    sp = sub.add_parser("homogenize", help="convergence study vs macro")
    common(sp)
    sp.add_argument("--region", type=_parse_region, default=None,
                    help="compact comparison region x0,x1,t0,t1")
    sp.add_argument("--dx", type=float, default=0.0625)
    sp.add_argument("--dt-macro", type=float, default=None)
    sp.add_argument("--expect",
                    choices=["converging", "stalled", "inconclusive"],
                    default=None)

    sp = sub.add_parser("counterexample", help="drift quotients per scale")
    common(sp)
    sp.add_argument("--s", type=float, default=1.0,
                    help="rescaled time at which the quotient starts")
    sp.add_argument("--h", type=float, default=0.5,
                    help="rescaled time increment of the quotient")
    sp.add_argument("--tol", type=float, default=None,
                    help="fail (exit 2) if the last quotient strays "
                         "further than this from the predicted drift")
    return p


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    outdir = args.out
    os.makedirs(outdir, exist_ok=True)
    try:
        code, entry = _VERBS[args.verb](args, outdir)
    except _Failure as exc:
        code, entry = exc.code, exc.entry
    except ValidationError as exc:
        entry = _error_entry(args.verb, exc)
        if exc.report is not None:
            entry["validation"] = exc.report.to_json_dict()
        code = 1
    except PursuitError as exc:
        code, entry = 1, _error_entry(args.verb, exc)
    _write(outdir, "report.json", emit_report([entry]))
    return code


if __name__ == "__main__":
    raise SystemExit(main())
