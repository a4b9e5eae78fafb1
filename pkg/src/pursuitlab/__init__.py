"""pursuitlab: a multiscale laboratory for a delayed pursuit law.

Microscopic drivers on a line follow the one ahead through a bounded,
nondecreasing, Lipschitz velocity law evaluated with a reaction delay.
The package integrates the delayed system exactly by the method of
steps, solves the macroscopic Hamilton-Jacobi limit with a monotone
scheme, decides when admissible spacing functions exist (the sharp
delay threshold), audits the strict comparison principle, and measures
homogenization convergence -- including the oscillating family whose
excess drift obstructs it.

The stepping kernel has a compiled extension and an equivalent NumPy
fallback; ``backend_name()`` reports which one is active and the
``PURSUITLAB_BACKEND`` environment variable forces a choice.
"""

from ._backend import backend_name
from .comparison import (AuditReport, ComparisonWindow, HypothesisCheck,
                         SampledField, check_separation_bound,
                         check_spacing_hypothesis, order_conservation_audit,
                         overtake_margin)
from .defaults import quadrature_tolerance
from .engine import GapSeries, TrajectorySet, gap_series, integrate, lookup
from .errors import (ConfigurationError, DomainError, InfeasibilityError,
                     NumericError, PursuitError, RangeError, ValidationError)
from .homogenize import (ConvergenceRecord, EpsilonField,
                         convergence_study, counterexample_drift,
                         drift_quotient, drift_scan, oscillation_gap,
                         oscillation_position, predicted_drift,
                         rescale_field, study_truncation, write_drift_csv)
from .macro import FieldGrid, solve_hj, sup_error
from .model import (ConeTruncation, DelayProfile, InitialHistory,
                    PeriodicTruncation, Scenario, ValidationReport,
                    VelocityProfile, validate_scenario)
from .thresholds import (SpacingCertificate, SpacingFunction,
                         build_spacing_function, certify,
                         constant_spacing_feasible,
                         constant_spacing_function,
                         constant_spacing_interval,
                         constant_spacing_threshold,
                         homogenization_threshold)

__version__ = "0.1.0"

__all__ = [
    "AuditReport", "ComparisonWindow", "ConeTruncation",
    "ConfigurationError", "ConvergenceRecord", "DelayProfile",
    "DomainError", "EpsilonField", "FieldGrid", "GapSeries",
    "HypothesisCheck", "InfeasibilityError", "InitialHistory",
    "NumericError", "PeriodicTruncation", "PursuitError", "RangeError",
    "SampledField", "Scenario", "SpacingCertificate", "SpacingFunction",
    "TrajectorySet", "ValidationError", "ValidationReport",
    "VelocityProfile", "backend_name", "build_spacing_function",
    "certify", "check_separation_bound", "check_spacing_hypothesis",
    "constant_spacing_feasible", "constant_spacing_function",
    "constant_spacing_interval", "constant_spacing_threshold",
    "convergence_study", "counterexample_drift", "drift_quotient",
    "drift_scan", "gap_series", "homogenization_threshold", "integrate",
    "lookup", "order_conservation_audit", "oscillation_gap",
    "oscillation_position", "overtake_margin", "predicted_drift",
    "quadrature_tolerance", "rescale_field", "solve_hj",
    "study_truncation", "sup_error", "validate_scenario",
    "write_drift_csv", "__version__",
]
