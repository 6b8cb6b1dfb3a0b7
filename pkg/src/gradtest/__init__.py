"""Asymptotically optimal two-sample tests of differentiable statistical
functionals.

The library models exactly representable probability measures (finitely
many atoms, or piecewise uniform densities), differentiates statistical
functionals of a product measure along local-alternative curves, builds
the gradient-based test statistic with exact and plug-in critical values,
and verifies the limiting level and power claims by seeded Monte Carlo
experiments. A batch command line front end is included.
"""
from .errors import (
    BaseMismatch,
    ConfigError,
    DegenerateDensity,
    DegenerateGradient,
    DegenerateTangent,
    DomainError,
    GradtestError,
    InvalidMeasure,
    InvalidTangent,
    MixedKindUnsupported,
    NonFiniteFunctionValue,
    OrthogonalTangent,
    QuotientByZero,
    TiedObservations,
    TooFewObservations,
    UnsupportedFootpoint,
    ValueOutsideSupport,
)
from .measures import (
    DiscreteMeasure,
    Measure,
    PiecewisePolynomial,
    PiecewiseUniformMeasure,
    ProductSample,
    as_generator,
    cdf,
    cdf_polynomial,
    hellinger,
    integrate,
    mean,
    measure_from_dict,
    measure_from_json,
    measure_to_dict,
    measure_to_json,
    product_integrate,
    quantile,
    sample,
    tv_distance,
)
from .tangents import (
    DWeightedGradient,
    ProductTangent,
    Tangent,
    center,
    central_sequence,
    curve_measure,
    d_inner,
    l2_derivative_residual,
    lan_remainder,
)
from .functionals import (
    CompositeFunctional,
    Functional,
    GradientPair,
    InvariantFunctional,
    Kernel1,
    Kernel2,
    VonMisesFunctional,
    WilcoxonFunctional,
    directional_derivative,
    evaluate,
    functional_from_dict,
    functional_to_dict,
    gradient,
    gradient_tangent_inner,
    kernel1_from_name,
    kernel2_from_name,
)
from .asymptotics import (
    d_opt,
    gauss_shift_hellinger,
    normal_cdf,
    normal_quantile,
    np_benchmark_power,
    power_one_sided,
    power_two_sided,
)
from .testing import (
    TestReport,
    TestSpec,
    critical_value,
    load_sample_csv,
    load_sample_files,
    one_sample_statistic,
    permutation_critical,
    rank_statistic,
    report_to_dict,
    run_test,
    sigma1_exact,
    sigma1_plugin_product,
    sigma1_plugin_sum,
    t_statistic,
    u_variance_estimator,
    wilcoxon_tilde_statistic,
    wilcoxon_w_estimators,
)
from .montecarlo import (
    SimConfig,
    SimResult,
    SimRow,
    result_to_csv,
    result_to_dict,
    simulate_d_scan,
    simulate_joint,
    simulate_lan,
    simulate_level,
    simulate_power,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "GradtestError", "InvalidMeasure", "NonFiniteFunctionValue",
    "MixedKindUnsupported", "ValueOutsideSupport", "InvalidTangent",
    "BaseMismatch", "DegenerateDensity", "QuotientByZero",
    "DegenerateGradient", "DegenerateTangent", "TooFewObservations",
    "TiedObservations", "OrthogonalTangent", "DomainError",
    "UnsupportedFootpoint", "ConfigError",
    # measures
    "Measure", "DiscreteMeasure", "PiecewiseUniformMeasure", "ProductSample",
    "PiecewisePolynomial", "integrate", "mean", "cdf", "cdf_polynomial",
    "quantile", "tv_distance", "hellinger", "sample", "as_generator",
    "product_integrate", "measure_to_dict", "measure_from_dict",
    "measure_to_json", "measure_from_json",
    # tangents
    "Tangent", "ProductTangent", "DWeightedGradient", "center",
    "curve_measure", "l2_derivative_residual", "central_sequence",
    "lan_remainder", "d_inner",
    # functionals
    "Kernel1", "Kernel2", "kernel1_from_name", "kernel2_from_name",
    "VonMisesFunctional", "WilcoxonFunctional", "InvariantFunctional",
    "CompositeFunctional", "Functional", "GradientPair", "evaluate",
    "gradient", "gradient_tangent_inner", "directional_derivative",
    "functional_to_dict", "functional_from_dict",
    # asymptotics
    "normal_cdf", "normal_quantile", "power_one_sided", "power_two_sided",
    "d_opt", "np_benchmark_power", "gauss_shift_hellinger",
    # testing
    "TestSpec", "TestReport", "t_statistic", "sigma1_exact",
    "critical_value", "sigma1_plugin_sum", "sigma1_plugin_product",
    "u_variance_estimator", "wilcoxon_w_estimators",
    "wilcoxon_tilde_statistic", "rank_statistic", "permutation_critical",
    "one_sample_statistic", "run_test", "report_to_dict",
    "load_sample_csv", "load_sample_files",
    # montecarlo
    "SimConfig", "SimRow", "SimResult", "simulate_level", "simulate_power",
    "simulate_joint", "simulate_lan", "simulate_d_scan", "result_to_csv",
    "result_to_dict",
]
