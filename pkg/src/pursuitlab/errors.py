"""Exception hierarchy shared by all pursuitlab modules.

Errors are split by what the caller did wrong:

* ``ValidationError``   -- a model object violates one of its invariants
  (carries the full validation report when raised by the engine);
* ``DomainError``       -- an argument is outside the mathematical domain of
  an operation (e.g. a closed form queried where it does not apply);
* ``RangeError``        -- a query beyond stored/committed data;
* ``ConfigurationError``-- inconsistent run setup (grid misalignment,
  insufficient index range, CFL violation, disjoint regions);
* ``InfeasibilityError``-- a certificate is requested in a regime where none
  exists (delay at or above the admissibility threshold);
* ``NumericError``      -- non-finite values produced or encountered.

Nothing is silently clamped: every error message names the offending
location or value.
"""


class PursuitError(Exception):
    """Base class for all pursuitlab errors."""


class ValidationError(PursuitError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class DomainError(PursuitError, ValueError):
    pass


class RangeError(PursuitError, ValueError):
    pass


class ConfigurationError(PursuitError):
    pass


class InfeasibilityError(DomainError):
    pass


class NumericError(PursuitError):
    pass
