# flake8: noqa: F401
from farmrl.analysis.abstract_mdp import (
    VarianceRatio,
    abstractmdp_module_sums,
    check_abstract_mdp_model,
    module_sums_frame,
    variance_ratio,
)
from farmrl.analysis.bundle import BundleIndex, PlotBundle, read_bundle_index
from farmrl.analysis.config import AnalysisConfig
from farmrl.analysis.correlation import (
    compare_correlations,
    correlation_matrix,
    correlations_frame,
    pairwise_event_correlation,
    pearson,
)
from farmrl.analysis.errors import ModelConfigError
from farmrl.analysis.norms import EventCurves, event_average_curves, event_contrast, reference_curve
from farmrl.analysis.pipeline import run_analysis
from farmrl.analysis.segments import EventSegment, extract_segments, window_values
from farmrl.analysis.traces import EpisodeTrace, collect_traces
