"""Numerical laboratory for Monge-Ampere problems on planar convex domains
with a flat (curvature-degenerate) boundary point.

The package bundles the geometric side (degenerate boundary profiles, the
boundary-flattening shear, comparability and angle reports), boundary-data
degeneracy conditions, explicit barrier functions with sampled certification,
convex envelopes and homogeneous solutions built from lower convex hulls, a
wide-stencil Monge-Ampere solver, and the measurement apparatus (Holder
exponent fits, sub-level-set balance/decay analysis) used to check the
predicted regularity exponents against closed-form reference cases.
"""

from .geometry import (
    AffineMap2D,
    AngleReport,
    BoundaryProfile,
    ComparabilityReport,
    Domain2D,
    angle_bound_check,
    curvature,
    profile_comparability,
    tangent_transform,
    transformed_profile,
)
from .boundary_data import (
    BoundaryDatum,
    ConditionNotMet,
    ConditionReport,
    ExtendedDatum,
    Obstacle2D,
    check_condition,
    pullback,
    strict_floor,
    subtract_affine,
    taylor_growth_bound,
)
from .barrier import (
    BarrierSpec,
    CertificationReport,
    certify,
    default_parameters,
    evaluate,
    hessian_det,
)
from .envelope import (
    ContactSet,
    PiecewiseAffineConvexFunction,
    contact_set,
    convex_envelope,
    homogeneous_solution,
)
from .solver import (
    ConvergenceError,
    DoublingReport,
    FieldSpec,
    ScalarField2D,
    doubling_estimate,
    doubling_ratio,
    residual,
    solve,
)
from .regularity import (
    ExponentFit,
    SublevelReport,
    TangentialReport,
    c1alpha_seminorm,
    gradient_sup,
    holder_fit,
    sublevel_analysis,
    tangential_holder_check,
)
from .oracles import (
    ClosedFormCase,
    SandwichReport,
    case_library,
    pk,
    qk,
    sandwich_constants,
)

__version__ = "0.1.0"

__all__ = [
    "AffineMap2D",
    "AngleReport",
    "BarrierSpec",
    "BoundaryDatum",
    "BoundaryProfile",
    "CertificationReport",
    "ClosedFormCase",
    "ComparabilityReport",
    "ConditionNotMet",
    "ConditionReport",
    "ContactSet",
    "ConvergenceError",
    "Domain2D",
    "DoublingReport",
    "ExponentFit",
    "ExtendedDatum",
    "FieldSpec",
    "Obstacle2D",
    "PiecewiseAffineConvexFunction",
    "SandwichReport",
    "ScalarField2D",
    "SublevelReport",
    "TangentialReport",
    "angle_bound_check",
    "c1alpha_seminorm",
    "case_library",
    "certify",
    "check_condition",
    "contact_set",
    "convex_envelope",
    "curvature",
    "default_parameters",
    "doubling_estimate",
    "doubling_ratio",
    "evaluate",
    "gradient_sup",
    "hessian_det",
    "holder_fit",
    "homogeneous_solution",
    "pk",
    "profile_comparability",
    "pullback",
    "qk",
    "residual",
    "sandwich_constants",
    "solve",
    "strict_floor",
    "sublevel_analysis",
    "subtract_affine",
    "tangent_transform",
    "tangential_holder_check",
    "taylor_growth_bound",
    "transformed_profile",
]
