"""alpha-times resolvent families, fractional Cauchy problems and semivariation.

Matrix generators stand in for the operator A; everything is computed on
finite grids on [0, r] with 1 < alpha < 2.
"""

from ._accel import backend
from .errors import (
    AlphaResolventError,
    ConditioningError,
    DomainError,
    GridError,
    MLOverflowError,
    NumericalEnvelopeError,
    StepSolveError,
    ValidationError,
)
from .kernels import Grid, SampledFunction, caputo, convolve, convolve_g, g_kernel, integrate
from .mlf import MLParams, ml_matrix, ml_matrix_family, ml_values, mittag_leffler
from .norms import NormSpec
from .resolvent import (
    Generator,
    OperatorFamily,
    family_convolve,
    moment_family,
    p_alpha,
    p_convolve,
    s_alpha,
    s_alpha_volterra,
)
from .semivariation import SemivariationEstimate, Subdivision, sv_brute_force, sv_estimate, sv_on_subdivision
from .solver import (
    RegularityReport,
    SolutionBundle,
    SolveRequest,
    check_p_identities,
    check_prop31,
    corollary_sup,
    equivalence_diagnostics,
    mild_solution,
    ramp_testfunction,
    regularity_constant,
    stieltjes_apf,
    sv_lower_bound,
)

__version__ = "0.1.0"

__all__ = [
    "check_p_identities",
    "check_prop31",
    "AlphaResolventError",
    "backend",
    "caputo",
    "ConditioningError",
    "convolve",
    "convolve_g",
    "corollary_sup",
    "DomainError",
    "equivalence_diagnostics",
    "family_convolve",
    "g_kernel",
    "Generator",
    "Grid",
    "GridError",
    "integrate",
    "mild_solution",
    "mittag_leffler",
    "ml_matrix",
    "ml_matrix_family",
    "ml_values",
    "MLOverflowError",
    "MLParams",
    "moment_family",
    "NormSpec",
    "NumericalEnvelopeError",
    "OperatorFamily",
    "p_alpha",
    "p_convolve",
    "ramp_testfunction",
    "regularity_constant",
    "RegularityReport",
    "s_alpha",
    "s_alpha_volterra",
    "SampledFunction",
    "SemivariationEstimate",
    "SolutionBundle",
    "SolveRequest",
    "StepSolveError",
    "stieltjes_apf",
    "Subdivision",
    "sv_brute_force",
    "sv_estimate",
    "sv_lower_bound",
    "sv_on_subdivision",
    "ValidationError",
]
