"""Numerics for electrostatic point-charge fields under the Born-Infeld model.

Subpackages by role: ``core`` (types, expansion coefficients, closed-form
constants), ``quad`` (half-line quadrature, exact single-charge field),
``conditions`` (solvability certificates), ``radial`` (order-m radial
solver, singularity fits, cone-plus-tail extremals), ``field`` (grid solver
and property reports), ``cli`` (command-line front end).
"""

from .core import (
    AsymptoticsSpec,
    Charge,
    ChargeConfig,
    CoefficientTable,
    GuaranteeRangeError,
    asymptotics_spec,
    best_constant_cbar,
    lagrangian_partial_sum,
    sphere_measure,
    taylor_coefficients,
)
from .quad import (
    AccuracyError,
    RadialProfile,
    exact_radial_profile,
    integrate_decaying,
    refined_constant_ctilde,
    shape_constant_A,
)
from .conditions import (
    PairVerdict,
    Verdict,
    VerdictLevel,
    check_global,
    check_refined,
    check_two_charge,
    classify_segments,
)
from .radial import (
    ConeTailCandidate,
    FitResult,
    approx_radial_profile,
    cone_tail_energy,
    fit_singularity,
    flux_gradient_magnitude,
    spacelike_ratio,
)
from .field import (
    DiscreteProblem,
    GridField,
    assemble_problem,
    compare_solutions,
    extremum_report,
    gradient_sup,
    minimize_energy,
    segment_report,
)

__version__ = "0.1.0"
