import numpy as np
import pytest

from pulsegraph.errors import CorrUndefined, InvalidInput
from pulsegraph.hrv import HrvReport
from pulsegraph.metrics import align, hrv_metrics, ibi_metrics, subject_report
from pulsegraph.types import IbiSequence


def seq(beats, **kwargs):
    return IbiSequence(beats_s=np.asarray(beats, dtype=float), **kwargs)


def grid(n, ibi_s=0.8, t0=0.0):
    return t0 + np.arange(n) * ibi_s


class TestAlign:
    def test_identical_sequences_fully_match(self):
        a = seq(grid(20))
        pairs = align(a, seq(grid(20)))
        assert pairs.n_pairs == 19
        assert pairs.unmatched_true == 0
        assert pairs.unmatched_est == 0
        assert pairs.coverage == 1.0

    def test_missing_beat_leaves_merged_interval_unmatched(self):
        beats = grid(6)  # intervals end at 0.8 .. 4.0
        est_beats = np.delete(beats, 3)  # merged interval 1.6 -> 3.2
        pairs = align(seq(beats), seq(est_beats))
        assert pairs.unmatched_true == 2
        assert pairs.unmatched_est == 1
        assert pairs.n_pairs == 3

    def test_uniform_shift_within_tolerance_matches_everything(self):
        a = seq(grid(20))
        b = seq(grid(20) + 0.05)
        pairs = align(a, b)
        assert pairs.unmatched_true == 0
        assert pairs.unmatched_est == 0
        np.testing.assert_allclose(pairs.true_ibi_ms, pairs.est_ibi_ms)

    def test_swap_swaps_unmatched_counts(self):
        rng = np.random.default_rng(0)
        a = seq(np.cumsum(rng.uniform(0.7, 0.9, 25)))
        b_beats = np.cumsum(rng.uniform(0.7, 0.9, 20)) + 0.01
        b = seq(b_beats)
        fwd = align(a, b)
        rev = align(b, a)
        assert fwd.n_pairs == rev.n_pairs
        assert fwd.unmatched_true == rev.unmatched_est
        assert fwd.unmatched_est == rev.unmatched_true

    def test_break_intervals_excluded(self):
        beats = np.concatenate([grid(5), grid(5, t0=10.0)])
        a = IbiSequence(beats_s=beats, segment_breaks=np.array([4]))
        pairs = align(a, a)
        assert pairs.n_pairs == 8  # 9 intervals minus the flagged one

    def test_empty_side_rejected(self):
        with pytest.raises(InvalidInput):
            align(seq(grid(2)), seq([1.0]))


class TestIbiMetrics:
    def test_perfect_agreement(self):
        pairs = align(seq(grid(20)), seq(grid(20)))
        corr, mape = ibi_metrics(pairs)
        assert corr == pytest.approx(1.0)
        assert mape == pytest.approx(0.0)

    def test_ten_percent_inflation(self):
        from pulsegraph.metrics import AlignedPairs

        rng = np.random.default_rng(1)
        true_vals = rng.uniform(700.0, 900.0, 30)
        pairs = AlignedPairs(
            true_ibi_ms=true_vals,
            est_ibi_ms=true_vals * 1.1,
            true_beat_t_s=np.cumsum(true_vals) / 1000.0,
            unmatched_true=0,
            unmatched_est=0,
        )
        corr, mape = ibi_metrics(pairs)
        assert mape == pytest.approx(10.0, rel=1e-9)
        assert corr == pytest.approx(1.0, abs=1e-9)

    def test_zero_variance_is_undefined_not_zero(self):
        # 0.5 s spacing is binary-exact, so the interval series is constant.
        pairs = align(seq(grid(10, ibi_s=0.5)), seq(grid(10, ibi_s=0.5)))
        with pytest.raises(CorrUndefined):
            ibi_metrics(pairs)

    def test_needs_three_pairs(self):
        pairs = align(seq(grid(3)), seq(grid(3)))
        with pytest.raises(InvalidInput):
            ibi_metrics(pairs)


def report_from(values):
    return HrvReport(*values)


class TestHrvMetrics:
    def test_identical_reports_are_perfect(self):
        rng = np.random.default_rng(2)
        reports = [report_from(rng.uniform(10.0, 100.0, 8)) for _ in range(5)]
        out = hrv_metrics(reports, reports)
        for corr, mape in out.values():
            assert corr == pytest.approx(1.0)
            assert mape == pytest.approx(0.0)

    def test_constant_parameter_reports_none(self):
        rng = np.random.default_rng(3)
        true = [report_from(np.append(rng.uniform(10, 100, 7), 50.0)) for _ in range(4)]
        est = [report_from(np.append(rng.uniform(10, 100, 7), 50.0)) for _ in range(4)]
        out = hrv_metrics(true, est)
        corr, mape = out["total_power_ms2"]
        assert corr is None
        assert mape == pytest.approx(0.0)

    def test_needs_three_subjects(self):
        r = report_from(np.arange(8.0) + 1)
        with pytest.raises(InvalidInput):
            hrv_metrics([r, r], [r, r])


class TestSubjectReport:
    def test_average_and_population_sd_rows(self):
        rows = [("1", 0.9, 3.0), ("2", 0.8, 5.0), ("3", 1.0, 4.0)]
        table = subject_report(rows)
        assert table[-2] == ("Average", pytest.approx(0.9), pytest.approx(4.0))
        sd_row = table[-1]
        assert sd_row[0] == "SD"
        assert sd_row[1] == pytest.approx(np.std([0.9, 0.8, 1.0]))
        assert sd_row[2] == pytest.approx(np.std([3.0, 5.0, 4.0]))

    def test_single_subject_sd_zero(self):
        table = subject_report([("1", 0.95, 2.0)])
        assert table[-1][1] == 0.0
        assert table[-1][2] == 0.0

    def test_empty_rejected(self):
        with pytest.raises(InvalidInput):
            subject_report([])
