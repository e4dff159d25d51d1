"""Viscosity-solution machinery for second order PDEs on model manifolds."""

from .errors import (
    BasePointMismatchError,
    DegenerateSegmentError,
    DivergenceError,
    GeometryDomainError,
    PreconditionError,
    RiemviscError,
    SingularBVPError,
    UnsupportedModelError,
)
from .manifolds import (
    INFINITE_RADIUS,
    Euclidean,
    FlatTorus,
    GeodesicSegment,
    Hyperbolic,
    Manifold,
    Point,
    Product,
    Sphere,
    SymBilinear,
    TangentVector,
    from_config,
)
from .grids import Grid, GridFunction, build_grid, geodesic_ball_interior
from .jacobi import (
    HessianPair,
    JacobiField,
    check_curvature_bound,
    check_sign_condition,
    grad_distance_sq,
    hessian_distance_sq,
    hessian_on_parallel_pair,
    index_form,
    index_minimality_check,
    solve_jacobi_bvp,
)
from .jets import (
    Jet2,
    StarCondition,
    chart_transfer_check,
    check_P_leq_LQ,
    doubling_diagnostic,
    generate_star_candidates,
    jet_limit_check,
    chart_correction_term,
    quadratic_jet_test,
    verify_condition_star,
)
from .operators import (
    OperatorSpec,
    ScalarField,
    detplus,
    detplus_pospart,
    ellipticity_check,
    intrinsic_modulus_estimate,
    invariance_check,
    monotonicity_estimate,
    twoflat_modulus_estimate,
    yamabe,
)
from .solver import (
    SolveReport,
    discrete_residual,
    discretize,
    perron_iterate,
    solve_dirichlet,
    solve_fixed_point,
    verify_viscosity_residual,
    yamabe_solve,
)

__all__ = [
    "BasePointMismatchError",
    "DegenerateSegmentError",
    "DivergenceError",
    "GeometryDomainError",
    "PreconditionError",
    "RiemviscError",
    "SingularBVPError",
    "UnsupportedModelError",
    "INFINITE_RADIUS",
    "Euclidean",
    "FlatTorus",
    "GeodesicSegment",
    "Hyperbolic",
    "Manifold",
    "Point",
    "Product",
    "Sphere",
    "SymBilinear",
    "TangentVector",
    "from_config",
    "Grid",
    "GridFunction",
    "build_grid",
    "geodesic_ball_interior",
    "HessianPair",
    "JacobiField",
    "check_curvature_bound",
    "check_sign_condition",
    "grad_distance_sq",
    "hessian_distance_sq",
    "hessian_on_parallel_pair",
    "index_form",
    "index_minimality_check",
    "solve_jacobi_bvp",
    "Jet2",
    "StarCondition",
    "chart_transfer_check",
    "check_P_leq_LQ",
    "doubling_diagnostic",
    "generate_star_candidates",
    "jet_limit_check",
    "chart_correction_term",
    "quadratic_jet_test",
    "verify_condition_star",
    "OperatorSpec",
    "ScalarField",
    "detplus",
    "detplus_pospart",
    "ellipticity_check",
    "intrinsic_modulus_estimate",
    "invariance_check",
    "monotonicity_estimate",
    "twoflat_modulus_estimate",
    "yamabe",
    "SolveReport",
    "discrete_residual",
    "discretize",
    "perron_iterate",
    "solve_dirichlet",
    "solve_fixed_point",
    "verify_viscosity_residual",
    "yamabe_solve",
]

__version__ = "0.1.0"
