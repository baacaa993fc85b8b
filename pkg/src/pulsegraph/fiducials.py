"""Candidate beat extraction from the three PPG morphological features.

Each detector returns every plausible beat marker (a superset of the true
beats on noisy data); pruning to the physiologically consistent subset is
the graph stage's job, so thresholds here are deliberately permissive.
"""
from __future__ import annotations

import numpy as np
from scipy.signal import find_peaks

from .preprocess import refine_parabolic
from .types import FiducialSeries, Waveform

# 0.25 s minimum spacing = 240 bpm ceiling; prominence is relative to the
# analyzed stream's interquartile range.
DEFAULT_MIN_DISTANCE_S = 0.25
DEFAULT_PROMINENCE_IQR_FRAC = 0.05
DEFAULT_EDGE_GUARD_S = 1.0


def _candidate_series(
    stream: np.ndarray,
    w: Waveform,
    feature: str,
    channel_id: int,
    min_distance_s: float,
    prominence_iqr_frac: float,
    edge_guard_s: float,
) -> FiducialSeries:
    q75, q25 = np.percentile(stream, [75, 25]) if stream.size else (0.0, 0.0)
    iqr = q75 - q25
    if iqr <= 0:
        return FiducialSeries(feature, channel_id, np.empty(0), np.empty(0, dtype=bool))
    distance = max(1, int(round(min_distance_s * w.sample_rate_hz)))
    idx, _ = find_peaks(stream, distance=distance, prominence=prominence_iqr_frac * iqr)
    pos = refine_parabolic(stream, idx)
    ts = w.t0_s + pos / w.sample_rate_hz
    edge = (ts < w.t0_s + edge_guard_s) | (ts > w.end_s - edge_guard_s)
    return FiducialSeries(feature, channel_id, ts, edge)


def systolic_peak_candidates(
    ppg: Waveform,
    channel_id: int = 0,
    min_distance_s: float = DEFAULT_MIN_DISTANCE_S,
    prominence_iqr_frac: float = DEFAULT_PROMINENCE_IQR_FRAC,
    edge_guard_s: float = DEFAULT_EDGE_GUARD_S,
) -> FiducialSeries:
    """Local maxima of the (preprocessed) PPG signal."""
    return _candidate_series(
        ppg.samples, ppg, "systolic_peak", channel_id,
        min_distance_s, prominence_iqr_frac, edge_guard_s,
    )


def max_slope_candidates(
    ppg: Waveform,
    channel_id: int = 0,
    min_distance_s: float = DEFAULT_MIN_DISTANCE_S,
    prominence_iqr_frac: float = DEFAULT_PROMINENCE_IQR_FRAC,
    edge_guard_s: float = DEFAULT_EDGE_GUARD_S,
) -> FiducialSeries:
    """Local maxima of the first derivative (steepest anacrotic upstroke)."""
    d1 = np.gradient(ppg.samples) * ppg.sample_rate_hz
    return _candidate_series(
        d1, ppg, "max_slope", channel_id,
        min_distance_s, prominence_iqr_frac, edge_guard_s,
    )


def onset_candidates(
    ppg: Waveform,
    channel_id: int = 0,
    min_distance_s: float = DEFAULT_MIN_DISTANCE_S,
    prominence_iqr_frac: float = DEFAULT_PROMINENCE_IQR_FRAC,
    edge_guard_s: float = DEFAULT_EDGE_GUARD_S,
) -> FiducialSeries:
    """Local maxima of the second derivative (foot of the rising edge)."""
    d1 = np.gradient(ppg.samples) * ppg.sample_rate_hz
    d2 = np.gradient(d1) * ppg.sample_rate_hz
    return _candidate_series(
        d2, ppg, "onset", channel_id,
        min_distance_s, prominence_iqr_frac, edge_guard_s,
    )


def extract_all(ppg: Waveform, channel_id: int = 0, **kwargs) -> dict[str, FiducialSeries]:
    """All three candidate streams for one channel, keyed by feature name."""
    return {
        "systolic_peak": systolic_peak_candidates(ppg, channel_id, **kwargs),
        "max_slope": max_slope_candidates(ppg, channel_id, **kwargs),
        "onset": onset_candidates(ppg, channel_id, **kwargs),
    }
