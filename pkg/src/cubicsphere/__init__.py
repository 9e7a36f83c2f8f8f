"""Certified nonnegativity, unit-ball membership and global optimization of
ternary cubics on the unit sphere S^2 through a spectrahedral representation."""

from .cones import (
    ConeMembershipResult,
    NonnegCertificate,
    in_cone_Cd,
    in_dual_cone,
    in_unit_ball,
    nonneg_cubic_system,
    unit_ball_system,
    verify_certificate,
)
from .optimize import (
    OptimizationResult,
    maximize_on_sphere,
    minimize_on_sphere,
    oracle_minimum,
    scale_to_ball_boundary,
)
from .atoms import AtomMeasure, extract_atoms
from .sphere_moment import (
    CubicOnSphere,
    cubic_from_json,
    h_to_poly,
    moment_matrix,
    moment_matrix_from_x,
    poly_to_h,
    to_riemann,
    to_sphere,
    unit_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "AtomMeasure",
    "ConeMembershipResult",
    "CubicOnSphere",
    "NonnegCertificate",
    "OptimizationResult",
    "cubic_from_json",
    "extract_atoms",
    "h_to_poly",
    "in_cone_Cd",
    "in_dual_cone",
    "in_unit_ball",
    "maximize_on_sphere",
    "minimize_on_sphere",
    "moment_matrix",
    "moment_matrix_from_x",
    "nonneg_cubic_system",
    "oracle_minimum",
    "poly_to_h",
    "scale_to_ball_boundary",
    "to_riemann",
    "to_sphere",
    "unit_ball_system",
    "unit_matrix",
    "verify_certificate",
]
