"""metricforms: factor metric tensors into 1-form sets and rebuild the
geometry along two cross-validating analytical routes."""

from .chart import Chart
from .errors import MetricFormsError
from .expr import (
    Evaluator,
    Expr,
    differentiate,
    evaluate,
    parse_expr,
    simplify,
    substitute,
    to_source,
)
from .factorization import (
    FormSet,
    factor_diagonal,
    factor_ldl,
    factor_takagi_numeric,
    make_formset,
    numeric_formset,
    orthogonality_residual,
    verify_factorization,
)
from .geometry import (
    Connection,
    FlatnessReport,
    KillingReport,
    christoffel_classical,
    christoffel_factored,
    classify_flatness,
    covariant_divergence_sym2,
    currents,
    einstein_tensor,
    exterior_derivative,
    integrate_geodesic,
    killing_check,
    lie_derivative_metric,
    precurrents,
    ricci_einstein_factored,
    ricci_from_mixed,
    riemann_classical,
    riemann_decomposed,
    scalar_curvature,
    sym_covariant_derivative,
    sym_derivative_via_factors,
    sym_trace,
)
from .manifolds import (
    ManifoldSpec,
    ReferenceValue,
    get_manifold,
    load_catalog,
    load_file,
)
from .analysis import AnalysisReport, GeometrySession, run_analysis
from .report import REPORT_SCHEMA, render_human, render_json
from .tensor import (
    MetricField,
    Tensor,
    antisymmetrize,
    contract,
    invert_metric,
    lower_index,
    raise_index,
    set_product,
    symmetrize,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport",
    "Chart",
    "Connection",
    "Evaluator",
    "Expr",
    "FlatnessReport",
    "FormSet",
    "GeometrySession",
    "KillingReport",
    "ManifoldSpec",
    "MetricField",
    "MetricFormsError",
    "REPORT_SCHEMA",
    "ReferenceValue",
    "Tensor",
    "antisymmetrize",
    "christoffel_classical",
    "christoffel_factored",
    "classify_flatness",
    "contract",
    "covariant_divergence_sym2",
    "currents",
    "differentiate",
    "einstein_tensor",
    "evaluate",
    "exterior_derivative",
    "factor_diagonal",
    "factor_ldl",
    "factor_takagi_numeric",
    "get_manifold",
    "integrate_geodesic",
    "invert_metric",
    "killing_check",
    "lie_derivative_metric",
    "load_catalog",
    "load_file",
    "lower_index",
    "make_formset",
    "numeric_formset",
    "orthogonality_residual",
    "parse_expr",
    "precurrents",
    "raise_index",
    "render_human",
    "render_json",
    "ricci_einstein_factored",
    "ricci_from_mixed",
    "riemann_classical",
    "riemann_decomposed",
    "run_analysis",
    "scalar_curvature",
    "set_product",
    "simplify",
    "substitute",
    "sym_covariant_derivative",
    "sym_derivative_via_factors",
    "sym_trace",
    "symmetrize",
    "to_source",
    "verify_factorization",
]
