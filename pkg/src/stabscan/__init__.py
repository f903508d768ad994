"""Stability scans for minimal submanifolds of projective-space products."""

from .geodesic_lab import (
    Circle,
    CurveSample,
    GeodesicSpec,
    GeodesicSpectrum,
    ProductEmbedding,
    canonical_geodesics,
    geodesic_residual,
    index_form_spectrum,
    sample_geodesic,
    transport_normal_frame,
    transport_residual,
)
from .errors import (
    BadClosure,
    BadDimension,
    CaseMismatch,
    ConfigError,
    DegenerateInput,
    DimensionMismatch,
    IncompleteFrame,
    IncompleteSample,
    StabscanError,
)
from .model_spaces import (
    Flat,
    Kind,
    ProductSpace,
    ProjectiveModel,
    Sphere,
    curvature,
    lambda_squared,
    product_curvature,
    sff_inner,
    veronese_ambient_dims,
)
from .second_variation import (
    ClassifierVerdict,
    EqualityCase,
    PlaneStructure,
    SecondVariationReport,
    build_double_equality_frame,
    build_equality_frame,
    build_structure_plane,
    build_violation_frame,
    classify_equality_case,
    detect_structure,
    formula_scan,
    q_curvature_form,
    q_from_sff,
    q_midform,
    q_normal_closed,
    q_tangent_closed,
    second_variation_report,
    sign_scan,
)
from .tangent_algebra import (
    AdaptedFrame,
    AmbientVector,
    completeness_residual,
    gram_schmidt,
    project_factor,
    random_adapted_frame,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptedFrame",
    "AmbientVector",
    "BadClosure",
    "BadDimension",
    "CaseMismatch",
    "Circle",
    "ClassifierVerdict",
    "ConfigError",
    "CurveSample",
    "DegenerateInput",
    "DimensionMismatch",
    "EqualityCase",
    "Flat",
    "GeodesicSpec",
    "GeodesicSpectrum",
    "IncompleteFrame",
    "IncompleteSample",
    "Kind",
    "PlaneStructure",
    "ProductEmbedding",
    "ProductSpace",
    "ProjectiveModel",
    "SecondVariationReport",
    "Sphere",
    "StabscanError",
    "build_double_equality_frame",
    "build_equality_frame",
    "build_structure_plane",
    "build_violation_frame",
    "canonical_geodesics",
    "classify_equality_case",
    "completeness_residual",
    "curvature",
    "detect_structure",
    "formula_scan",
    "geodesic_residual",
    "gram_schmidt",
    "index_form_spectrum",
    "lambda_squared",
    "product_curvature",
    "project_factor",
    "q_curvature_form",
    "q_from_sff",
    "q_midform",
    "q_normal_closed",
    "q_tangent_closed",
    "random_adapted_frame",
    "sample_geodesic",
    "second_variation_report",
    "sff_inner",
    "sign_scan",
    "transport_normal_frame",
    "transport_residual",
    "veronese_ambient_dims",
]
