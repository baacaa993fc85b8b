import numpy as np

from pulsegraph.config import PipelineConfig
from pulsegraph.fiducials import (
    max_slope_candidates,
    onset_candidates,
    systolic_peak_candidates,
)
from pulsegraph.session import preprocess_ppg
from pulsegraph.synth import ArtifactSpec, SynthConfig, generate
from pulsegraph.types import Waveform


def preprocessed_record(duration_s=60.0, seed=0, **synth_kwargs):
    rec = generate(SynthConfig(duration_s=duration_s, seed=seed, **synth_kwargs))
    ppg = preprocess_ppg(rec.ppg, PipelineConfig())
    return rec, ppg


def match_errors_ms(candidates_ts, truth_ts, guard_s, end_s):
    """Per-truth-instant distance to the nearest candidate, away from edges."""
    keep = (truth_ts > guard_s) & (truth_ts < end_s - guard_s)
    errs = []
    for t in truth_ts[keep]:
        errs.append(np.min(np.abs(candidates_ts - t)) * 1000.0)
    return np.asarray(errs)


class TestSystolicPeaks:
    def test_clean_72bpm_counts_and_timing(self):
        rec, ppg = preprocessed_record()
        found = systolic_peak_candidates(ppg)
        truth = rec.fiducials["systolic_peak"].timestamps_s
        assert abs(len(found) - 72) <= 1
        errs = match_errors_ms(found.timestamps_s, truth, 1.5, ppg.end_s)
        assert np.max(errs) <= 4.0

    def test_monotone_ramp_gives_no_candidates(self):
        w = Waveform(np.linspace(0.0, 1.0, 5000), 500.0)
        assert len(systolic_peak_candidates(w)) == 0

    def test_spikes_inflate_candidate_count(self):
        rec, ppg = preprocessed_record(
            seed=1,
            artifacts=ArtifactSpec(spike_rate_per_min=30.0, spike_amp_rel=1.0),
        )
        found = systolic_peak_candidates(ppg)
        assert len(found) > len(rec.ibis.beats_s)

    def test_edge_flags_mark_record_margins(self):
        _, ppg = preprocessed_record(seed=2)
        found = systolic_peak_candidates(ppg, edge_guard_s=1.0)
        inside = (found.timestamps_s >= ppg.t0_s + 1.0) & (
            found.timestamps_s <= ppg.end_s - 1.0
        )
        np.testing.assert_array_equal(found.edge_unreliable, ~inside)


class TestMaxSlope:
    def test_one_candidate_per_beat_before_peak(self):
        rec, ppg = preprocessed_record(seed=3)
        slopes = max_slope_candidates(ppg).timestamps_s
        peaks_truth = rec.fiducials["systolic_peak"].timestamps_s
        onsets_truth = rec.fiducials["onset"].timestamps_s
        # Interior beats: exactly one slope candidate inside each rising edge.
        for k in range(2, len(peaks_truth) - 2):
            inside = (slopes > onsets_truth[k] - 0.02) & (slopes < peaks_truth[k] + 0.001)
            assert np.count_nonzero(inside) == 1

    def test_constant_signal_empty(self):
        w = Waveform(np.full(5000, 2.0), 500.0)
        assert len(max_slope_candidates(w)) == 0

    def test_sinusoid_spacing_matches_period(self):
        rate, f = 500.0, 1.2
        t = np.arange(int(rate * 30)) / rate
        w = Waveform(np.sin(2 * np.pi * f * t), rate)
        ts = max_slope_candidates(w).timestamps_s
        spacing = np.diff(ts)
        assert np.all(np.abs(spacing - 1.0 / f) <= 1.0 / rate)


class TestOnset:
    def test_onsets_precede_slopes_within_each_beat(self):
        rec, ppg = preprocessed_record(seed=4)
        onsets = onset_candidates(ppg).timestamps_s
        slopes_truth = rec.fiducials["max_slope"].timestamps_s
        onsets_truth = rec.fiducials["onset"].timestamps_s
        for k in range(2, len(slopes_truth) - 2):
            inside = (onsets > onsets_truth[k] - 0.05) & (onsets <= slopes_truth[k])
            assert np.count_nonzero(inside) >= 1

    def test_sinusoid_spacing_matches_period(self):
        rate, f = 500.0, 0.9
        t = np.arange(int(rate * 30)) / rate
        w = Waveform(np.sin(2 * np.pi * f * t), rate)
        ts = onset_candidates(w).timestamps_s
        spacing = np.diff(ts)
        assert np.all(np.abs(spacing - 1.0 / f) <= 1.0 / rate)

    def test_flat_line_empty(self):
        w = Waveform(np.zeros(5000), 500.0)
        assert len(onset_candidates(w)) == 0


class TestFeatureOrdering:
    def test_onset_slope_peak_order_per_beat(self):
        rec, ppg = preprocessed_record(seed=5)
        onsets = onset_candidates(ppg).timestamps_s
        slopes = max_slope_candidates(ppg).timestamps_s
        peaks = systolic_peak_candidates(ppg).timestamps_s
        truth_peaks = rec.fiducials["systolic_peak"].timestamps_s
        support = rec.ibis.ibis_ms.min() / 1000.0
        for k in range(2, len(truth_peaks) - 2):
            t_peak = truth_peaks[k]
            window_lo = t_peak - 0.6 * support
            p = peaks[(peaks > window_lo) & (peaks <= t_peak + 0.05)]
            s = slopes[(slopes > window_lo) & (slopes <= t_peak + 0.05)]
            o = onsets[(onsets > window_lo) & (onsets <= t_peak + 0.05)]
            if p.size and s.size and o.size:
                assert o.min() <= s.min() <= p.max()

    def test_detection_deterministic(self):
        _, ppg = preprocessed_record(seed=6)
        a = systolic_peak_candidates(ppg).timestamps_s
        b = systolic_peak_candidates(ppg).timestamps_s
        np.testing.assert_array_equal(a, b)
