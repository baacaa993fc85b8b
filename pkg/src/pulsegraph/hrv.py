"""Time-domain and AR-spectrum frequency-domain HRV parameters.

Frequency-domain powers come from an autoregressive spectrum of the
uniformly resampled tachogram: the interval series is cubic-interpolated to
4 Hz, mean-removed, fit with a Burg-recursion AR model, and the model
spectrum is integrated over the conventional VLF/LF/HF bands.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Union

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InvalidInput
from .types import IbiSequence

VLF_BAND_HZ = (0.003, 0.04)
LF_BAND_HZ = (0.04, 0.15)
HF_BAND_HZ = (0.15, 0.4)

DEFAULT_AR_ORDER = 16
DEFAULT_TACHOGRAM_RATE_HZ = 4.0
MIN_SPECTRUM_SPAN_S = 60.0

# Tachograms flatter than this (ms^2) are treated as constant.
_VARIANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class HrvReport:
    """The eight HRV parameters reported for one record."""

    mean_rr_ms: float
    mean_hr_bpm: float
    sdnn_ms: float
    std_hr_bpm: float
    vlf_power_ms2: float
    lf_power_ms2: float
    hf_power_ms2: float
    total_power_ms2: float

    PARAMETERS = (
        "mean_rr_ms",
        "mean_hr_bpm",
        "sdnn_ms",
        "std_hr_bpm",
        "vlf_power_ms2",
        "lf_power_ms2",
        "hf_power_ms2",
        "total_power_ms2",
    )

    def as_dict(self) -> dict:
        return asdict(self)


def _interval_values(ibis: Union[IbiSequence, np.ndarray]) -> np.ndarray:
    if isinstance(ibis, IbiSequence):
        return ibis.valid_ibis_ms()
    return np.asarray(ibis, dtype=float)


def time_domain(
    ibis: Union[IbiSequence, np.ndarray], mean_hr_mode: str = "per_beat"
) -> tuple:
    """Mean RR, mean HR, SDNN, and STD HR of an interval series.

    SDNN is the population standard deviation of the intervals. Heart rate
    statistics come from the per-beat HR series ``60000 / RR_i``; set
    ``mean_hr_mode="from_mean_rr"`` to report ``60000 / mean(RR)`` instead.
    """
    values = _interval_values(ibis)
    if values.size < 2:
        raise InvalidInput(f"need at least 2 intervals, got {values.size}")
    hr = 60000.0 / values
    mean_rr = float(np.mean(values))
    if mean_hr_mode == "per_beat":
        mean_hr = float(np.mean(hr))
    elif mean_hr_mode == "from_mean_rr":
        mean_hr = 60000.0 / mean_rr
    else:
        raise InvalidInput(f"unknown mean_hr_mode {mean_hr_mode!r}")
    return mean_rr, mean_hr, float(np.std(values)), float(np.std(hr))


def burg_coefficients(x: np.ndarray, order: int) -> tuple:
    """Burg-recursion AR fit.

    Returns ``(a, noise_var)`` where ``a`` is the prediction-error filter
    ``[1, a_1, ..., a_p]`` and ``noise_var`` the driving-noise variance.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if order < 1 or order >= n:
        raise InvalidInput(f"AR order {order} invalid for {n} samples")
    a = np.zeros(order + 1)
    a[0] = 1.0
    energy = float(np.dot(x, x)) / n
    ef = x[1:].copy()
    eb = x[:-1].copy()
    for m in range(1, order + 1):
        den = float(np.dot(ef, ef) + np.dot(eb, eb))
        if den <= 0.0:
            break  # signal perfectly predicted at a lower order
        k = -2.0 * float(np.dot(ef, eb)) / den
        prev = a.copy()
        for i in range(1, m + 1):
            a[i] = prev[i] + k * prev[m - i]
        energy *= 1.0 - k * k
        if m < order:
            ef, eb = ef[1:] + k * eb[1:], eb[:-1] + k * ef[:-1]
    return a, energy


def ar_psd(a: np.ndarray, noise_var: float, sample_rate_hz: float, freqs: np.ndarray) -> np.ndarray:
    """One-sided AR power spectral density on the given frequency grid."""
    z = np.exp(-2j * np.pi * np.outer(freqs, np.arange(a.size)) / sample_rate_hz)
    denom = np.abs(z @ a) ** 2
    psd = noise_var / sample_rate_hz / denom
    return 2.0 * psd  # one-sided


def _spectrum_grid(
    a: np.ndarray, sample_rate_hz: float, n_base: int, extra_points: np.ndarray
) -> np.ndarray:
    """Frequency grid that resolves every sharp AR resonance.

    A pole at radius ``r`` produces a Lorentzian-like peak of half-width
    about ``(1 - r) * fs / (2 pi)`` Hz, arbitrarily narrower than any fixed
    grid as ``r -> 1``. Tangent-spaced points around each sharp pole sample
    that peak uniformly in integrated mass, so trapezoid band integrals
    converge.
    """
    nyquist = sample_rate_hz / 2.0
    grid = [np.linspace(0.0, nyquist, n_base), np.asarray(extra_points, dtype=float)]
    roots = np.roots(a)
    theta = np.tan(np.linspace(-1.555, 1.555, 801))
    for root in roots:
        radius = float(np.abs(root))
        if radius < 0.9:
            continue
        f_pole = abs(float(np.angle(root))) / (2.0 * np.pi) * sample_rate_hz
        half_width = max((1.0 - radius), 1e-12) * sample_rate_hz / (2.0 * np.pi)
        cluster = f_pole + half_width * theta
        grid.append(np.clip(cluster, 0.0, nyquist))
    return np.unique(np.concatenate(grid))


def uniform_tachogram(
    ibis: IbiSequence, rate_hz: float = DEFAULT_TACHOGRAM_RATE_HZ
) -> tuple:
    """Cubic interpolation of the interval series onto a uniform grid.

    Each valid interval is a sample at its end-beat time. Returns
    ``(times_s, values_ms)``; the values retain their mean.
    """
    mask = ibis.valid_mask()
    t = ibis.end_times_s[mask]
    v = ibis.ibis_ms[mask]
    if t.size < 4:
        raise InvalidInput(f"need at least 4 intervals to build a tachogram, got {t.size}")
    grid = np.arange(t[0], t[-1] + 1e-9, 1.0 / rate_hz)
    return grid, CubicSpline(t, v)(grid)


def band_powers_of_series(
    x: np.ndarray,
    sample_rate_hz: float,
    ar_order: int = DEFAULT_AR_ORDER,
    n_freqs: int = 4097,
) -> tuple:
    """(VLF, LF, HF, total) AR band powers of a uniform, mean-removed series."""
    x = np.asarray(x, dtype=float)
    if float(np.var(x)) < _VARIANCE_FLOOR:
        return 0.0, 0.0, 0.0, 0.0
    order = min(ar_order, x.size // 2 - 1)
    a, noise_var = burg_coefficients(x, order)
    edges = np.array([*VLF_BAND_HZ, *LF_BAND_HZ, *HF_BAND_HZ])
    freqs = _spectrum_grid(a, sample_rate_hz, n_freqs, edges)
    psd = ar_psd(a, noise_var, sample_rate_hz, freqs)

    def band_power(lo: float, hi: float) -> float:
        m = (freqs >= lo) & (freqs <= hi)
        return float(np.trapezoid(psd[m], freqs[m]))

    vlf = band_power(*VLF_BAND_HZ)
    lf = band_power(*LF_BAND_HZ)
    hf = band_power(*HF_BAND_HZ)
    return vlf, lf, hf, vlf + lf + hf


def frequency_domain(
    ibis: IbiSequence,
    tachogram_rate_hz: float = DEFAULT_TACHOGRAM_RATE_HZ,
    ar_order: int = DEFAULT_AR_ORDER,
    n_freqs: int = 4097,
) -> tuple:
    """VLF, LF, HF, and total power (ms^2) of the AR tachogram spectrum.

    Requires at least :data:`MIN_SPECTRUM_SPAN_S` of beats. Total power is
    the sum of the three band integrals by construction.
    """
    span = float(ibis.beats_s[-1] - ibis.beats_s[0]) if len(ibis.beats_s) else 0.0
    if span < MIN_SPECTRUM_SPAN_S:
        raise InvalidInput(
            f"record spans {span:.1f} s; spectral HRV needs >= {MIN_SPECTRUM_SPAN_S:.0f} s"
        )
    _, tach = uniform_tachogram(ibis, tachogram_rate_hz)
    x = tach - tach.mean()
    return band_powers_of_series(x, tachogram_rate_hz, ar_order, n_freqs)


def hrv_report(
    ibis: IbiSequence,
    mean_hr_mode: str = "per_beat",
    tachogram_rate_hz: float = DEFAULT_TACHOGRAM_RATE_HZ,
    ar_order: int = DEFAULT_AR_ORDER,
) -> HrvReport:
    """All eight HRV parameters for one record."""
    mean_rr, mean_hr, sdnn, std_hr = time_domain(ibis, mean_hr_mode)
    vlf, lf, hf, total = frequency_domain(ibis, tachogram_rate_hz, ar_order)
    return HrvReport(
        mean_rr_ms=mean_rr,
        mean_hr_bpm=mean_hr,
        sdnn_ms=sdnn,
        std_hr_bpm=std_hr,
        vlf_power_ms2=vlf,
        lf_power_ms2=lf,
        hf_power_ms2=hf,
        total_power_ms2=total,
    )
