"""Documented numerical defaults shared by the library and the CLI.

=====================  =======================  =====================================
constant               value                    meaning
=====================  =======================  =====================================
DT_FACTOR              1e-3                     default micro step: dt = 1e-3 * tau
EPSILONS               (0.1, 0.05,              default scale list for convergence
                        0.025, 0.0125)          studies (strictly decreasing)
REGION                 (-1.0, 1.0, 0.1, 1.0)    default macro window (x0, x1, s0, s1)
TAU_GRID_POINTS        64                       tau' grid for spacing-hypothesis and
                                                certificate audits (>= 16 enforced)
ROOT_TOL               1e-12                    fixed-point residual tolerance of the
                                                spacing-function construction
QUAD_TOL_COEFF         100.0                    micro quadrature tolerance model:
                                                tol = QUAD_TOL_COEFF * dt**2
STALL_REL_SPREAD       0.10                     "stalled" verdict: last three errors
                                                pairwise within this relative spread
STALL_FLOOR_FACTOR     10.0                     ... while exceeding this multiple of
                                                the quadrature tolerance
CONVERGENCE_TOL        1e-2                     "converging" verdict: final error at
                                                or below this bound
DIVISIBILITY_RTOL      1e-6                     relative tolerance for "dt divides
                                                the commit-interval length"
LOOKUP_RTOL            1e-9                     slack (in steps) accepted at the ends
                                                of committed/stored time ranges
=====================  =======================  =====================================
"""

DT_FACTOR = 1e-3
EPSILONS = (0.1, 0.05, 0.025, 0.0125)
REGION = (-1.0, 1.0, 0.1, 1.0)
TAU_GRID_POINTS = 64
ROOT_TOL = 1e-12
QUAD_TOL_COEFF = 100.0
STALL_REL_SPREAD = 0.10
STALL_FLOOR_FACTOR = 10.0
CONVERGENCE_TOL = 1e-2
DIVISIBILITY_RTOL = 1e-6
LOOKUP_RTOL = 1e-9


def quadrature_tolerance(dt):
    """Error scale of the trapezoid quadrature at step ``dt``."""
    return QUAD_TOL_COEFF * dt * dt
