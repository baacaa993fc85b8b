import numpy as np
import pytest

from oracles import brute_force_fuse

from pulsegraph.errors import EmptyResult
from pulsegraph.fusion import SegmentBundle, fuse, fuse_segment, segment
from pulsegraph.hr_prior import HrPrior
from pulsegraph.types import IbiSequence


def flat_prior(hr=75.0):
    return HrPrior(np.array([30.0]), np.array([hr]))


def seq_from_ibis(ibis_ms, t0=0.0, source="onset"):
    beats = t0 + np.concatenate([[0.0], np.cumsum(np.asarray(ibis_ms) / 1000.0)])
    return IbiSequence(beats_s=beats, source=source)


def bundle(onset, peak=((), ()), slope=((), ()), refs=(800.0, 800.0, 800.0), passthrough=False):
    onset_vals, onset_ts = onset
    peak_vals, peak_ts = peak
    slope_vals, slope_ts = slope
    return SegmentBundle(
        index=0,
        window=(float(min(onset_ts)), float(max(onset_ts)) + 1.0),
        onset_ibis_ms=np.asarray(onset_vals, dtype=float),
        onset_start_ts=np.asarray(onset_ts, dtype=float),
        peak_ibis_ms=np.asarray(peak_vals, dtype=float),
        peak_start_ts=np.asarray(peak_ts, dtype=float),
        slope_ibis_ms=np.asarray(slope_vals, dtype=float),
        slope_start_ts=np.asarray(slope_ts, dtype=float),
        avg_ibis_ms=np.asarray(refs, dtype=float),
        passthrough=passthrough,
    )


class TestSegment:
    def test_nine_intervals_make_three_segments(self):
        onset = seq_from_ibis([800.0] * 9)
        peak = seq_from_ibis([800.0] * 9, t0=0.05, source="systolic_peak")
        slope = seq_from_ibis([800.0] * 9, t0=0.02, source="max_slope")
        bundles = segment(onset, peak, slope, flat_prior())
        assert len(bundles) == 3
        assert all(not b.passthrough for b in bundles)
        assert all(b.onset_ibis_ms.size == 3 for b in bundles)

    def test_ten_intervals_make_three_plus_remainder(self):
        onset = seq_from_ibis([800.0] * 10)
        peak = seq_from_ibis([800.0] * 10, t0=0.05, source="systolic_peak")
        slope = seq_from_ibis([800.0] * 10, t0=0.02, source="max_slope")
        bundles = segment(onset, peak, slope, flat_prior())
        assert len(bundles) == 4
        assert bundles[-1].passthrough
        assert bundles[-1].onset_ibis_ms.size == 1

    def test_candidate_pool_counts_match_window_membership(self):
        # Four peak and three slope interval starts inside segment 0.
        onset = seq_from_ibis([800.0] * 3)
        peak = IbiSequence(
            beats_s=np.array([0.1, 0.75, 1.45, 2.1, 2.75, 3.4]), source="systolic_peak"
        )
        slope = seq_from_ibis([790.0, 800.0, 810.0], t0=0.02, source="max_slope")
        bundles = segment(onset, peak, slope, flat_prior())
        b = bundles[0]
        assert b.peak_ibis_ms.size == 4
        assert b.slope_ibis_ms.size == 3
        values, ts, sources = b.candidate_pool()
        assert values.size == 10

    def test_empty_onset_rejected(self):
        onset = IbiSequence(beats_s=np.array([0.0]))
        peak = seq_from_ibis([800.0] * 3, source="systolic_peak")
        with pytest.raises(EmptyResult):
            segment(onset, peak, peak, flat_prior())

    def test_references_follow_prior(self):
        prior = HrPrior(np.array([1.0, 20.0]), np.array([60.0, 120.0]))
        onset = seq_from_ibis([800.0] * 3)
        peak = seq_from_ibis([800.0] * 3, t0=0.05, source="systolic_peak")
        bundles = segment(onset, peak, peak, prior)
        np.testing.assert_allclose(bundles[0].avg_ibis_ms, 1000.0)


class TestFuseSegment:
    def test_exact_matches_win_with_zero_objective(self):
        b = bundle(
            onset=([800.0, 800.0, 800.0], [0.0, 0.8, 1.6]),
            peak=([650.0, 950.0, 820.0], [0.02, 0.67, 1.62]),
            slope=([790.0, 805.0, 1100.0], [0.01, 0.81, 1.58]),
        )
        values, ts, sources = fuse_segment(b)
        np.testing.assert_array_equal(values, [800.0, 800.0, 800.0])
        assert sources == ["onset", "onset", "onset"]

    def test_minimum_over_four_candidates(self):
        # Frozen via the brute-force oracle: best objective is 210 ms using
        # the {700, 900, 810} values; the 1200 outlier is rejected.
        b = bundle(
            onset=([700.0, 900.0, 810.0], [0.0, 0.7, 1.6]),
            peak=([1200.0], [0.75]),
        )
        values, _, _ = fuse_segment(b)
        objective = float(np.sum(np.abs(values - b.avg_ibis_ms)))
        oracle_obj, _ = brute_force_fuse(*_pool(b), b.avg_ibis_ms)
        assert objective == oracle_obj == pytest.approx(210.0)
        assert sorted(values) == [700.0, 810.0, 900.0]

    def test_duplicate_values_at_distinct_indices_are_distinct(self):
        b = bundle(
            onset=([800.0, 800.0, 800.0], [0.0, 0.8, 1.6]),
            peak=([800.0], [0.05]),
        )
        values, ts, sources = fuse_segment(b)
        np.testing.assert_array_equal(values, [800.0, 800.0, 800.0])
        # Another zero-objective triple exists through the peak duplicate.
        obj, triple = brute_force_fuse(*_pool(b), b.avg_ibis_ms)
        assert obj == 0.0
        assert sources == ["onset", "onset", "onset"]  # onset-majority tie-break

    def test_passthrough_returns_onset_remainder(self):
        b = bundle(onset=([700.0, 900.0], [0.0, 0.7]), passthrough=True)
        values, ts, sources = fuse_segment(b)
        np.testing.assert_array_equal(values, [700.0, 900.0])

    def test_matches_brute_force_on_random_segments(self):
        rng = np.random.default_rng(21)
        for _ in range(200):
            b = random_bundle(rng)
            values, _, _ = fuse_segment(b)
            objective = float(np.sum(np.abs(values - b.avg_ibis_ms)))
            oracle_obj, _ = brute_force_fuse(*_pool(b), b.avg_ibis_ms)
            assert objective == oracle_obj


def _pool(b):
    values, ts, _ = b.candidate_pool()
    return values, ts


def random_bundle(rng):
    refs = rng.uniform(550.0, 1100.0, 3)
    base_s = float(np.mean(refs)) / 1000.0
    onset_gaps = rng.uniform(0.6, 1.3, 3) * base_s
    onset_ts = np.concatenate([[0.0], np.cumsum(onset_gaps[:-1])])
    window_end = float(onset_ts[-1] + onset_gaps[-1])
    onset_vals = rng.uniform(400.0, 1400.0, 3)

    def extra(n):
        ts = np.sort(rng.uniform(0.0, window_end, n))
        ts += np.arange(n) * 1e-6  # keep strictly increasing
        vals = rng.uniform(400.0, 1400.0, n)
        return vals, ts

    n_peak = int(rng.integers(0, 5))
    n_slope = int(rng.integers(0, 5))
    return bundle(
        onset=(onset_vals, onset_ts),
        peak=extra(n_peak),
        slope=extra(n_slope),
        refs=refs,
    )


class TestFuse:
    def test_identical_streams_pass_through(self):
        rng = np.random.default_rng(3)
        ibis = rng.uniform(700.0, 900.0, 12)
        onset = seq_from_ibis(ibis)
        peak = seq_from_ibis(ibis, source="systolic_peak")
        slope = seq_from_ibis(ibis, source="max_slope")
        fused = fuse(onset, peak, slope, flat_prior())
        np.testing.assert_allclose(fused.ibis_ms, onset.ibis_ms, rtol=0, atol=1e-9)
        np.testing.assert_allclose(fused.beats_s, onset.beats_s, rtol=0, atol=1e-9)

    def test_output_length_is_three_q_plus_remainder(self):
        rng = np.random.default_rng(4)
        ibis = rng.uniform(750.0, 850.0, 11)
        onset = seq_from_ibis(ibis)
        peak = seq_from_ibis(ibis + rng.normal(0, 5, 11), t0=0.06, source="systolic_peak")
        slope = seq_from_ibis(ibis + rng.normal(0, 5, 11), t0=0.03, source="max_slope")
        fused = fuse(onset, peak, slope, flat_prior())
        assert fused.n_ibis == 11

    def test_breaks_in_onset_produce_fused_breaks(self):
        beats = np.concatenate([np.arange(7) * 0.8, np.arange(7) * 0.8 + 10.0])
        onset = IbiSequence(beats_s=beats, segment_breaks=np.array([6]), source="onset")
        peak = IbiSequence(beats_s=beats + 0.05, segment_breaks=np.array([6]), source="systolic_peak")
        slope = IbiSequence(beats_s=beats + 0.02, segment_breaks=np.array([6]), source="max_slope")
        fused = fuse(onset, peak, slope, flat_prior())
        assert fused.segment_breaks.size == 1
        assert fused.valid_mask().sum() == fused.n_ibis - 1
