"""Driving-style indicators from naturalistic drive traces and their
relation to self-reported driving styles."""

__version__ = "0.1.0"

from .correlation import correlate_all, p_two_tailed, partial_pearson, pearson
from .curves import (
    CenterBand,
    CurveOfInterest,
    CurveWindow,
    compute_center_band,
    curve_relative_deviation,
    extract_window,
    route_profile,
    select_curves,
)
from .envelope import (
    Envelope,
    EnvelopeConfig,
    EnvelopePCA,
    parallel_analysis,
    pca_varimax,
    polar_bin,
    varimax,
)
from .errors import ConfigError, DataError, DriveStyleError, UpstreamMissing
from .ingest import (
    Gap,
    SubjectProfile,
    SubjectTrace,
    TraceSchema,
    filter_context,
    load_profiles,
    load_trace,
    resample_uniform,
)
from .kinematics import StatBlock, aggregate_subject, derive_channels, drift_velocity, stat_block
from .mdsi import (
    ItemBank,
    assign_style,
    cronbach_alpha,
    refined_scores,
    reverse_code,
    score_cohort,
    weighted_sum_scores,
)
from .stationary import CCGResult, StationarySegment, extract_stationary, fit_ccg
from .transient import IntensityResult, TrajectoryClass, classify, encode_curve, intensity

__all__ = [
    "CCGResult", "CenterBand", "ConfigError", "CurveOfInterest", "CurveWindow", "DataError",
    "DriveStyleError", "Envelope", "EnvelopeConfig", "EnvelopePCA", "Gap", "IntensityResult",
    "ItemBank", "StatBlock", "StationarySegment", "SubjectProfile", "SubjectTrace",
    "TraceSchema", "TrajectoryClass", "UpstreamMissing", "aggregate_subject", "assign_style",
    "classify", "compute_center_band", "correlate_all", "cronbach_alpha",
    "curve_relative_deviation", "derive_channels", "drift_velocity", "encode_curve",
    "extract_stationary", "extract_window", "filter_context", "fit_ccg", "intensity",
    "load_profiles", "load_trace", "p_two_tailed", "parallel_analysis", "partial_pearson",
    "pca_varimax", "pearson", "polar_bin", "refined_scores", "resample_uniform", "reverse_code",
    "route_profile", "score_cohort", "select_curves", "stat_block", "varimax",
    "weighted_sum_scores",
]
