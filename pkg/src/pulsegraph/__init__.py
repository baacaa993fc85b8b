"""Interbeat-interval and HRV recovery from motion-contaminated wearable PPG.

Candidate heartbeats from three PPG morphological features become vertices
of a directed acyclic graph; a convex-penalty shortest path selects the
physiologically consistent beat train per feature, and a greedy
segment-wise fusion picks the best intervals across features.
"""

from .beat_graph import (
    BeatGraph,
    PenaltyConfig,
    build_graph,
    build_graph_two_channel,
    shortest_path,
)
from .config import PipelineConfig, load_config
from .errors import (
    CorrUndefined,
    EmptyResult,
    InvalidFilterSpec,
    InvalidInput,
    ManifestError,
    MissingPrior,
    ParseError,
    PipelineStageError,
    PulsegraphError,
    RangeError,
)
from .fiducials import (
    extract_all,
    max_slope_candidates,
    onset_candidates,
    systolic_peak_candidates,
)
from .fusion import SegmentBundle, fuse, fuse_segment, segment
from .hr_prior import HrPrior, avg_ibi_at, estimate_hr_spectral, load_hr_file
from .hrv import HrvReport, frequency_domain, hrv_report, time_domain
from .metrics import AlignedPairs, align, hrv_metrics, ibi_metrics, subject_report
from .preprocess import FilterSpec, apply_filter, ecg_r_peaks, resample, smooth_spline
from .session import (
    EstimationResult,
    Session,
    SessionManifest,
    estimate_from_waveforms,
    ingest,
    run_pipeline,
    write_session,
)
from .synth import ArtifactSpec, SynthConfig, SynthRecord, generate
from .types import FiducialSeries, IbiSequence, Waveform

__version__ = "0.1.0"

__all__ = [
    "AlignedPairs",
    "ArtifactSpec",
    "BeatGraph",
    "CorrUndefined",
    "EmptyResult",
    "EstimationResult",
    "FiducialSeries",
    "FilterSpec",
    "HrPrior",
    "HrvReport",
    "IbiSequence",
    "InvalidFilterSpec",
    "InvalidInput",
    "ManifestError",
    "MissingPrior",
    "ParseError",
    "PenaltyConfig",
    "PipelineConfig",
    "PipelineStageError",
    "PulsegraphError",
    "RangeError",
    "SegmentBundle",
    "Session",
    "SessionManifest",
    "SynthConfig",
    "SynthRecord",
    "Waveform",
    "align",
    "apply_filter",
    "avg_ibi_at",
    "build_graph",
    "build_graph_two_channel",
    "ecg_r_peaks",
    "estimate_from_waveforms",
    "estimate_hr_spectral",
    "extract_all",
    "frequency_domain",
    "fuse",
    "fuse_segment",
    "generate",
    "hrv_metrics",
    "hrv_report",
    "ibi_metrics",
    "ingest",
    "load_config",
    "load_hr_file",
    "max_slope_candidates",
    "onset_candidates",
    "resample",
    "run_pipeline",
    "segment",
    "shortest_path",
    "smooth_spline",
    "subject_report",
    "systolic_peak_candidates",
    "time_domain",
    "write_session",
]
