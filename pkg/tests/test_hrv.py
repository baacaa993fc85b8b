import numpy as np
import pytest

from oracles import periodogram_band_powers

from pulsegraph.errors import InvalidInput
from pulsegraph.hrv import (
    band_powers_of_series,
    HF_BAND_HZ,
    LF_BAND_HZ,
    VLF_BAND_HZ,
    burg_coefficients,
    frequency_domain,
    hrv_report,
    time_domain,
    uniform_tachogram,
)
from pulsegraph.types import IbiSequence

BANDS = (VLF_BAND_HZ, LF_BAND_HZ, HF_BAND_HZ)


def seq_from_ibi_function(ibi_ms_of_t, duration_s, t0=0.0):
    """Beat train whose interval at time t is ibi_ms_of_t(t)."""
    beats = [t0]
    while beats[-1] < t0 + duration_s:
        beats.append(beats[-1] + ibi_ms_of_t(beats[-1]) / 1000.0)
    return IbiSequence(beats_s=np.asarray(beats))


def constant_seq(ibi_ms, duration_s):
    return seq_from_ibi_function(lambda t: ibi_ms, duration_s)


class TestTimeDomain:
    def test_constant_series(self):
        mean_rr, mean_hr, sdnn, std_hr = time_domain(np.array([800.0, 800.0, 800.0]))
        assert mean_rr == pytest.approx(800.0)
        assert mean_hr == pytest.approx(75.0)
        assert sdnn == 0.0
        assert std_hr == 0.0

    def test_two_interval_hand_arithmetic(self):
        mean_rr, mean_hr, sdnn, std_hr = time_domain(np.array([750.0, 850.0]))
        assert mean_rr == pytest.approx(800.0)
        assert sdnn == pytest.approx(50.0)
        # (60000/750 + 60000/850) / 2 = (80 + 70.588...) / 2
        assert mean_hr == pytest.approx(75.2941176470588, rel=1e-12)

    def test_order_free(self):
        rng = np.random.default_rng(0)
        ibis = rng.uniform(600.0, 1000.0, 50)
        np.testing.assert_allclose(
            time_domain(ibis), time_domain(ibis[::-1]), rtol=1e-12
        )

    def test_alternate_mean_hr_convention(self):
        _, mean_hr, _, _ = time_domain(np.array([750.0, 850.0]), mean_hr_mode="from_mean_rr")
        assert mean_hr == pytest.approx(75.0)

    def test_needs_two_intervals(self):
        with pytest.raises(InvalidInput):
            time_domain(np.array([800.0]))


class TestBurg:
    def test_recovers_known_ar2_coefficients(self):
        # x[t] = 1.3 x[t-1] - 0.6 x[t-2] + e[t]
        rng = np.random.default_rng(1)
        n = 20000
        x = np.zeros(n)
        e = rng.standard_normal(n)
        for t in range(2, n):
            x[t] = 1.3 * x[t - 1] - 0.6 * x[t - 2] + e[t]
        a, noise_var = burg_coefficients(x[500:], order=2)
        np.testing.assert_allclose(a, [1.0, -1.3, 0.6], atol=0.02)
        assert noise_var == pytest.approx(1.0, rel=0.05)

    def test_invalid_order(self):
        with pytest.raises(InvalidInput):
            burg_coefficients(np.arange(10.0), order=10)


class TestFrequencyDomain:
    def test_constant_intervals_have_no_power(self):
        seq = constant_seq(800.0, 90.0)
        vlf, lf, hf, total = frequency_domain(seq)
        assert max(vlf, lf, hf, total) <= 1e-6

    def test_single_lf_tone_dominates(self):
        seq = seq_from_ibi_function(
            lambda t: 800.0 + 20.0 * np.sin(2 * np.pi * 0.1 * t), 180.0
        )
        vlf, lf, hf, total = frequency_domain(seq)
        assert lf >= 0.95 * total
        # Direct periodogram of the same tachogram agrees on dominance.
        _, tach = uniform_tachogram(seq)
        p_vlf, p_lf, p_hf = periodogram_band_powers(tach, 4.0, BANDS)
        assert p_lf >= 0.95 * (p_vlf + p_lf + p_hf)

    def test_equal_tones_split_equally(self):
        seq = seq_from_ibi_function(
            lambda t: 800.0
            + 15.0 * np.sin(2 * np.pi * 0.1 * t)
            + 15.0 * np.sin(2 * np.pi * 0.3 * t + 1.0),
            240.0,
        )
        vlf, lf, hf, total = frequency_domain(seq)
        assert lf / hf == pytest.approx(1.0, abs=0.1)
        _, tach = uniform_tachogram(seq)
        p_vlf, p_lf, p_hf = periodogram_band_powers(tach, 4.0, BANDS)
        assert p_lf / p_hf == pytest.approx(1.0, abs=0.1)

    def test_band_additivity_exact(self):
        seq = seq_from_ibi_function(
            lambda t: 800.0 + 10.0 * np.sin(2 * np.pi * 0.08 * t), 120.0
        )
        vlf, lf, hf, total = frequency_domain(seq)
        assert total == vlf + lf + hf

    def test_scale_covariance(self):
        # Scaling the deviations of one tachogram scales every band by c^2:
        # the AR poles are scale-invariant, only the noise variance scales.
        seq = seq_from_ibi_function(
            lambda t: 800.0
            + 8.0 * np.sin(2 * np.pi * 0.05 * t)
            + 6.0 * np.sin(2 * np.pi * 0.12 * t + 0.7)
            + 4.0 * np.sin(2 * np.pi * 0.3 * t + 1.9),
            150.0,
        )
        _, tach = uniform_tachogram(seq)
        x = tach - tach.mean()
        base = np.asarray(band_powers_of_series(x, 4.0))
        scaled = np.asarray(band_powers_of_series(3.0 * x, 4.0))
        np.testing.assert_allclose(scaled / base, 9.0, rtol=1e-6)

    def test_parseval_total_matches_tachogram_variance(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            freqs = rng.uniform(0.02, 0.35, 4)
            amps = rng.uniform(3.0, 12.0, 4)
            phases = rng.uniform(0, 2 * np.pi, 4)

            def ibi(t):
                return 850.0 + sum(
                    a * np.sin(2 * np.pi * f * t + p)
                    for f, a, p in zip(freqs, amps, phases)
                )

            seq = seq_from_ibi_function(ibi, 150.0)
            _, _, _, total = frequency_domain(seq)
            _, tach = uniform_tachogram(seq)
            variance = float(np.var(tach - tach.mean()))
            assert total == pytest.approx(variance, rel=0.10)

    def test_short_record_rejected(self):
        with pytest.raises(InvalidInput):
            frequency_domain(constant_seq(800.0, 30.0))


class TestReport:
    def test_report_combines_both_domains(self):
        seq = seq_from_ibi_function(
            lambda t: 800.0 + 20.0 * np.sin(2 * np.pi * 0.1 * t), 120.0
        )
        report = hrv_report(seq)
        assert report.mean_rr_ms == pytest.approx(800.0, rel=0.01)
        assert report.total_power_ms2 == pytest.approx(
            report.vlf_power_ms2 + report.lf_power_ms2 + report.hf_power_ms2
        )
        assert set(report.as_dict()) == set(report.PARAMETERS)
