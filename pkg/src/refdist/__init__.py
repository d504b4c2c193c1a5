"""Reference distribution estimation and comparison for laboratory tests.

Estimates three-parameter (shifted) lognormal reference distributions from
either quantile triples (closed form) or histograms (least squares), and
quantifies how population screening reshapes them: expected-value direction
tests, grid distances between fitted pdfs, and a synthetic four-cohort
experiment with Welch-test group comparison.
"""
from .errors import (
    RefdistError,
    DegenerateSymmetricError,
    LeftSkewUnsupportedError,
    EmptyHistogramError,
    SimplexInitError,
    BandwidthError,
    MissingPredictionError,
    GridRangeError,
    SupportError,
    InsufficientDataError,
    EmptyCohortError,
)
from .special import std_normal_pdf, std_normal_cdf, std_normal_quantile
from .distributions import (
    Lnorm3Params,
    Norm3Params,
    BoxCoxParams,
    lnorm3_pdf,
    lnorm3_cdf,
    lnorm3_quantile,
    lnorm3_expected_value,
    lnorm3_sample,
    norm3_pdf,
    norm3_cdf,
    norm3_quantile,
    norm3_expected_value,
    boxcox_pdf,
    boxcox_cdf,
    boxcox_quantile,
    boxcox_mean,
    boxcox_normalization,
    support_lower,
    params_to_dict,
    params_from_dict,
    write_params,
    read_params,
)
from .quantiles import (
    QuantileTriple,
    classify_skew,
    solve_lnorm3_from_triple,
    solve_mirrored_lnorm3_from_triple,
    MirroredLnorm3,
    triple_from_params,
    read_triples_csv,
    DEFAULT_ALPHA,
)
from .histogram import (
    Histogram,
    build_histogram,
    normalize_histogram,
    average_histograms,
    read_histogram_csv,
    write_histogram_csv,
)
from .simplex import NelderMeadConfig, SimplexResult, nelder_mead
from .fitting import FitResult, sse_objective, fit_histogram, HistogramDensityEstimator
from .kde import silverman_bandwidth, GaussianKde, kde
from .compare import (
    DfeRecord,
    PredictionEntry,
    ConcordanceReport,
    DistanceRecord,
    GroupReport,
    dfe,
    concordance,
    grid_distance,
    symmetric_kl,
    welch_t_test,
    cohen_d_pooled,
    split_near_far,
    group_analysis,
    distance_kde_export,
    read_predictions_csv,
    read_distances_csv,
    write_dfe_csv,
    write_distances_csv,
    group_report_to_dict,
    write_group_report_json,
)
from .synth import (
    CohortSpec,
    ExclusionRule,
    CohortDef,
    ExperimentConfig,
    Population,
    ExclusionResult,
    CohortFit,
    ExperimentReport,
    generate_population,
    apply_exclusion,
    default_experiment_config,
    pipeline_experiment,
    write_report,
    read_experiment_config,
)
from .catalog import TestCatalogEntry, DEFAULT_CATALOG, catalog_by_id, read_catalog_csv

__version__ = "0.1.0"

__all__ = [
    "RefdistError",
    "DegenerateSymmetricError",
    "LeftSkewUnsupportedError",
    "EmptyHistogramError",
    "SimplexInitError",
    "BandwidthError",
    "MissingPredictionError",
    "GridRangeError",
    "SupportError",
    "InsufficientDataError",
    "EmptyCohortError",
    "std_normal_pdf",
    "std_normal_cdf",
    "std_normal_quantile",
    "Lnorm3Params",
    "Norm3Params",
    "BoxCoxParams",
    "lnorm3_pdf",
    "lnorm3_cdf",
    "lnorm3_quantile",
    "lnorm3_expected_value",
    "lnorm3_sample",
    "norm3_pdf",
    "norm3_cdf",
    "norm3_quantile",
    "norm3_expected_value",
    "boxcox_pdf",
    "boxcox_cdf",
    "boxcox_quantile",
    "boxcox_mean",
    "boxcox_normalization",
    "support_lower",
    "params_to_dict",
    "params_from_dict",
    "write_params",
    "read_params",
    "QuantileTriple",
    "classify_skew",
    "solve_lnorm3_from_triple",
    "solve_mirrored_lnorm3_from_triple",
    "MirroredLnorm3",
    "triple_from_params",
    "read_triples_csv",
    "DEFAULT_ALPHA",
    "Histogram",
    "build_histogram",
    "normalize_histogram",
    "average_histograms",
    "read_histogram_csv",
    "write_histogram_csv",
    "NelderMeadConfig",
    "SimplexResult",
    "nelder_mead",
    "FitResult",
    "sse_objective",
    "fit_histogram",
    "HistogramDensityEstimator",
    "silverman_bandwidth",
    "GaussianKde",
    "kde",
    "DfeRecord",
    "PredictionEntry",
    "ConcordanceReport",
    "DistanceRecord",
    "GroupReport",
    "dfe",
    "concordance",
    "grid_distance",
    "symmetric_kl",
    "welch_t_test",
    "cohen_d_pooled",
    "split_near_far",
    "group_analysis",
    "distance_kde_export",
    "read_predictions_csv",
    "read_distances_csv",
    "write_dfe_csv",
    "write_distances_csv",
    "group_report_to_dict",
    "write_group_report_json",
    "CohortSpec",
    "ExclusionRule",
    "CohortDef",
    "ExperimentConfig",
    "Population",
    "ExclusionResult",
    "CohortFit",
    "ExperimentReport",
    "generate_population",
    "apply_exclusion",
    "default_experiment_config",
    "pipeline_experiment",
    "write_report",
    "read_experiment_config",
    "TestCatalogEntry",
    "DEFAULT_CATALOG",
    "catalog_by_id",
    "read_catalog_csv",
]
