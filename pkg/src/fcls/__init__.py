"""Family-constrained iterations for linear least squares.

Affine solver operators (Kaczmarz, Cimmino, Landweber, diagonal
weighting), constraining operators (box projections, smoothing matrices),
a constrained iteration driver with full trace recording, and numerical
certificates for every structural property the convergence theory rests
on.  Desk-scale and deterministic throughout.
"""
from .constraints import (
    Box,
    BoxSchedule,
    NestingReport,
    SmoothingMatrix,
    SneReport,
    box_project,
    in_constrained_solution_set,
    inclusion_inequality_check,
    schedule_intersection,
    smoothing_validate,
    sne_sample_check,
    verify_nesting,
)
from .errors import ConstructionError, DivergenceError, ParseError, ValidationError
from .linalg import (
    SvdFactorization,
    as_matrix,
    as_vector,
    column_space_projector,
    left_null_space_projector,
    null_space_projector,
    pseudoinverse,
    row_space_projector,
    spectral_norm,
    svd,
)
from .operators import (
    AffineOperator,
    NonexpansivenessReport,
    OperatorSchedule,
    PropertyReport,
    build_cimmino,
    build_diagonal_weighting,
    build_kaczmarz,
    build_landweber_schedule,
    certify_nonexpansiveness,
    minimize_fixed_point_residual,
    validate_properties,
)
from .phantom import (
    AdaptiveBoxPolicy,
    PhantomSpec,
    adaptive_box_schedule,
    fixed_box_schedule,
    generate,
    ghost_count,
)
from .solver import (
    FejerReport,
    FixedPointSetReport,
    LLSInstance,
    RunTrace,
    ShiftReport,
    SolverConfig,
    certify_fixed_point_set,
    condition1_monitor,
    fejer_monitor,
    fixed_point_shift,
    run_family_iteration,
    run_fca,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveBoxPolicy",
    "AffineOperator",
    "Box",
    "BoxSchedule",
    "ConstructionError",
    "DivergenceError",
    "FejerReport",
    "FixedPointSetReport",
    "LLSInstance",
    "NestingReport",
    "NonexpansivenessReport",
    "OperatorSchedule",
    "ParseError",
    "PhantomSpec",
    "PropertyReport",
    "RunTrace",
    "ShiftReport",
    "SmoothingMatrix",
    "SneReport",
    "SolverConfig",
    "SvdFactorization",
    "ValidationError",
    "adaptive_box_schedule",
    "as_matrix",
    "as_vector",
    "box_project",
    "build_cimmino",
    "build_diagonal_weighting",
    "build_kaczmarz",
    "build_landweber_schedule",
    "certify_fixed_point_set",
    "certify_nonexpansiveness",
    "column_space_projector",
    "condition1_monitor",
    "fejer_monitor",
    "fixed_box_schedule",
    "fixed_point_shift",
    "generate",
    "ghost_count",
    "in_constrained_solution_set",
    "inclusion_inequality_check",
    "left_null_space_projector",
    "minimize_fixed_point_residual",
    "null_space_projector",
    "pseudoinverse",
    "row_space_projector",
    "run_family_iteration",
    "run_fca",
    "schedule_intersection",
    "smoothing_validate",
    "sne_sample_check",
    "spectral_norm",
    "svd",
    "validate_properties",
    "verify_nesting",
]
