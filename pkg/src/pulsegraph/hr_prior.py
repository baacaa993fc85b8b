"""Average heart-rate prior: windowed HR track and the average-IBI lookup.

The graph stage needs, for every candidate beat, the average IBI of the
nearest HR window. The prior can come from any source: the built-in
spectral tracker below, a CSV exported by a dataset, or an external HR
algorithm — the lookup contract is the same.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .errors import InvalidInput, MissingPrior, ParseError, RangeError
from .types import Waveform

HR_MIN_BPM = 30.0
HR_MAX_BPM = 240.0
MS_PER_MINUTE = 60000.0

DEFAULT_WINDOW_S = 8.0
DEFAULT_STEP_S = 2.0
DEFAULT_BAND_HZ = (0.5, 4.0)
DEFAULT_CONTINUITY_BPM = 15.0


@dataclass(frozen=True)
class HrPrior:
    """Average HR per analysis window, addressed by window center time."""

    window_centers_s: np.ndarray
    hr_bpm: np.ndarray
    window_len_s: float = DEFAULT_WINDOW_S

    def __post_init__(self):
        centers = np.asarray(self.window_centers_s, dtype=float)
        hr = np.asarray(self.hr_bpm, dtype=float)
        object.__setattr__(self, "window_centers_s", centers)
        object.__setattr__(self, "hr_bpm", hr)
        if centers.size != hr.size:
            raise InvalidInput("window centers and hr values must have equal length")
        if centers.size and np.any(np.diff(centers) <= 0):
            raise InvalidInput("window centers must be increasing")
        if hr.size and (np.any(hr < HR_MIN_BPM) or np.any(hr > HR_MAX_BPM)):
            bad = hr[(hr < HR_MIN_BPM) | (hr > HR_MAX_BPM)][0]
            raise RangeError(f"hr {bad} bpm outside [{HR_MIN_BPM}, {HR_MAX_BPM}]")

    def __len__(self) -> int:
        return self.window_centers_s.size


def _nearest_window(prior: HrPrior, t_s: np.ndarray) -> np.ndarray:
    """Index of the strictly nearest window center; ties go to the earlier one."""
    centers = prior.window_centers_s
    right = np.searchsorted(centers, t_s)
    right = np.clip(right, 0, centers.size - 1)
    left = np.clip(right - 1, 0, centers.size - 1)
    # Earlier window wins ties, so the later one must be strictly closer.
    use_right = np.abs(centers[right] - t_s) < np.abs(t_s - centers[left])
    return np.where(use_right, right, left)


def avg_ibi_at(prior: HrPrior, t_s: Union[float, np.ndarray]):
    """Average IBI (ms) at time ``t_s``, from the nearest HR window.

    Accepts a scalar or an array of query times; queries outside the record
    span clamp to the nearest window.
    """
    if len(prior) == 0:
        raise MissingPrior("empty heart-rate prior")
    t = np.asarray(t_s, dtype=float)
    idx = _nearest_window(prior, np.atleast_1d(t))
    out = MS_PER_MINUTE / prior.hr_bpm[idx]
    return float(out[0]) if t.ndim == 0 else out


def estimate_hr_spectral(
    ppg: Waveform,
    window_s: float = DEFAULT_WINDOW_S,
    step_s: float = DEFAULT_STEP_S,
    band_hz: tuple = DEFAULT_BAND_HZ,
    continuity_bpm: float = DEFAULT_CONTINUITY_BPM,
) -> HrPrior:
    """Track average HR as the dominant in-band spectral peak per window.

    Sliding windows (default 8 s, 2 s step) are scanned for the strongest
    periodicity in ``band_hz``; after the first window the search is confined
    to ±``continuity_bpm`` of the previous estimate, which rejects artifact
    tones that would otherwise cause implausible HR jumps.
    """
    win_n = int(round(window_s * ppg.sample_rate_hz))
    step_n = max(1, int(round(step_s * ppg.sample_rate_hz)))
    if len(ppg) < win_n:
        raise InvalidInput(
            f"record too short for HR estimation: {len(ppg)} samples < {win_n}"
        )
    nfft = 1 << max(12, int(np.ceil(np.log2(win_n * 8))))
    freqs = np.fft.rfftfreq(nfft, d=1.0 / ppg.sample_rate_hz)
    in_band = (freqs >= band_hz[0]) & (freqs <= band_hz[1])
    band_freqs = freqs[in_band]
    taper = np.hanning(win_n)

    centers = []
    hrs = []
    prev_hr = None
    for start in range(0, len(ppg) - win_n + 1, step_n):
        seg = ppg.samples[start : start + win_n]
        seg = seg - seg.mean()
        if np.std(seg) == 0:
            continue
        mag = np.abs(np.fft.rfft(seg * taper, nfft))[in_band]
        if prev_hr is None:
            search = np.ones_like(band_freqs, dtype=bool)
        else:
            lo = (prev_hr - continuity_bpm) / 60.0
            hi = (prev_hr + continuity_bpm) / 60.0
            search = (band_freqs >= lo) & (band_freqs <= hi)
            if not np.any(search):
                search = np.ones_like(band_freqs, dtype=bool)
        k = np.flatnonzero(search)[np.argmax(mag[search])]
        hr = float(np.clip(band_freqs[k] * 60.0, HR_MIN_BPM, HR_MAX_BPM))
        centers.append(ppg.t0_s + (start + win_n / 2.0) / ppg.sample_rate_hz)
        hrs.append(hr)
        prev_hr = hr
    if not hrs:
        raise MissingPrior("no spectral peak found in any window")
    return HrPrior(np.array(centers), np.array(hrs), window_s)


def load_hr_file(path, window_len_s: float = DEFAULT_WINDOW_S) -> HrPrior:
    """Parse a ``t_s,hr_bpm`` CSV into a prior.

    A header row is optional; rows must be two numeric columns. Malformed
    rows raise :class:`ParseError` with the line number, out-of-range HR
    raises :class:`RangeError`.
    """
    path = Path(path)
    centers = []
    hrs = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if lineno == 1 and row and row[0].strip().lower() in ("t_s", "time", "t"):
                continue
            if len(row) != 2:
                raise ParseError(f"expected 2 columns, got {len(row)}", path, lineno)
            try:
                t = float(row[0])
                hr = float(row[1])
            except ValueError:
                raise ParseError(f"non-numeric row {row!r}", path, lineno) from None
            if not (HR_MIN_BPM <= hr <= HR_MAX_BPM):
                raise RangeError(
                    f"hr {hr} bpm outside [{HR_MIN_BPM}, {HR_MAX_BPM}] at {path}:{lineno}"
                )
            centers.append(t)
            hrs.append(hr)
    if not centers:
        raise ParseError("no data rows", path)
    order = np.argsort(centers, kind="stable")
    return HrPrior(np.asarray(centers)[order], np.asarray(hrs)[order], window_len_s)


def prior_from_profile(
    hr_profile: list, duration_s: float, step_s: float = DEFAULT_STEP_S,
    window_len_s: float = DEFAULT_WINDOW_S,
) -> HrPrior:
    """Prior sampled from a piecewise-linear (t_s, bpm) profile."""
    pts = np.asarray(hr_profile, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] == 0:
        raise InvalidInput("hr_profile must be a non-empty list of (t_s, bpm) pairs")
    centers = np.arange(window_len_s / 2.0, max(duration_s - window_len_s / 2.0, 0) + 1e-9, step_s)
    if centers.size == 0:
        centers = np.array([duration_s / 2.0])
    hr = np.interp(centers, pts[:, 0], pts[:, 1])
    return HrPrior(centers, np.clip(hr, HR_MIN_BPM, HR_MAX_BPM), window_len_s)
