"""Core data carriers shared by every pipeline stage.

Timestamps are seconds on a common epoch; interbeat intervals (IBIs) are
milliseconds. All arrays are float64 numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import InvalidInput

# Physiological IBI bounds; intervals outside must be flagged as breaks.
IBI_MIN_MS = 200.0
IBI_MAX_MS = 3000.0

PPG_FEATURES = ("systolic_peak", "max_slope", "onset")


@dataclass(frozen=True)
class Waveform:
    """A uniformly sampled signal.

    Sample ``k`` sits at ``t0_s + k / sample_rate_hz`` exactly.
    """

    samples: np.ndarray
    sample_rate_hz: float
    t0_s: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))
        if self.sample_rate_hz <= 0:
            raise InvalidInput(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if self.samples.ndim != 1:
            raise InvalidInput("samples must be one-dimensional")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    @property
    def end_s(self) -> float:
        return self.t0_s + self.samples.size / self.sample_rate_hz

    def timestamps(self) -> np.ndarray:
        return self.t0_s + np.arange(self.samples.size) / self.sample_rate_hz

    def with_samples(self, samples: np.ndarray) -> "Waveform":
        """Same time base, new sample values (lengths must match)."""
        samples = np.asarray(samples, dtype=float)
        if samples.size != self.samples.size:
            raise InvalidInput("with_samples requires equal length")
        return replace(self, samples=samples)


@dataclass(frozen=True)
class FiducialSeries:
    """Timestamps of candidate beats for one morphological feature of one channel."""

    feature: str
    channel_id: int
    timestamps_s: np.ndarray
    # True where the fiducial falls inside the edge guard at either record end.
    edge_unreliable: Optional[np.ndarray] = None

    def __post_init__(self):
        ts = np.asarray(self.timestamps_s, dtype=float)
        object.__setattr__(self, "timestamps_s", ts)
        if ts.size and np.any(np.diff(ts) <= 0):
            raise InvalidInput(f"{self.feature} timestamps must be strictly increasing")
        if self.edge_unreliable is not None:
            flags = np.asarray(self.edge_unreliable, dtype=bool)
            if flags.size != ts.size:
                raise InvalidInput("edge_unreliable length must match timestamps")
            object.__setattr__(self, "edge_unreliable", flags)

    def __len__(self) -> int:
        return self.timestamps_s.size


@dataclass(frozen=True)
class IbiSequence:
    """Ordered beat timestamps plus the intervals between them.

    ``segment_breaks`` holds indices into the interval array marking IBIs that
    span a path discontinuity (sensor dropout, fusion run junction); those
    intervals are excluded by :meth:`valid_mask` and must not feed HRV or
    error metrics.
    """

    beats_s: np.ndarray
    source: str = "unknown"
    segment_breaks: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))

    def __post_init__(self):
        beats = np.asarray(self.beats_s, dtype=float)
        breaks = np.asarray(self.segment_breaks, dtype=int)
        object.__setattr__(self, "beats_s", beats)
        object.__setattr__(self, "segment_breaks", np.unique(breaks))
        if beats.size and np.any(np.diff(beats) <= 0):
            raise InvalidInput("beat timestamps must be strictly increasing")
        n_ibis = max(beats.size - 1, 0)
        if self.segment_breaks.size and (
            self.segment_breaks.min() < 0 or self.segment_breaks.max() >= n_ibis
        ):
            raise InvalidInput("segment break index out of range")
        ibis = np.diff(beats) * 1000.0
        out_of_range = (ibis <= IBI_MIN_MS) | (ibis >= IBI_MAX_MS)
        unflagged = np.setdiff1d(np.flatnonzero(out_of_range), self.segment_breaks)
        if unflagged.size:
            k = int(unflagged[0])
            raise InvalidInput(
                f"IBI {ibis[k]:.1f} ms at index {k} outside ({IBI_MIN_MS:.0f}, "
                f"{IBI_MAX_MS:.0f}) ms and not flagged as a segment break"
            )

    @property
    def ibis_ms(self) -> np.ndarray:
        return np.diff(self.beats_s) * 1000.0

    @property
    def n_ibis(self) -> int:
        return max(self.beats_s.size - 1, 0)

    @property
    def start_times_s(self) -> np.ndarray:
        """Start beat timestamp of each interval."""
        return self.beats_s[:-1]

    @property
    def end_times_s(self) -> np.ndarray:
        """End beat timestamp of each interval."""
        return self.beats_s[1:]

    def valid_mask(self) -> np.ndarray:
        mask = np.ones(self.n_ibis, dtype=bool)
        mask[self.segment_breaks] = False
        return mask

    def valid_ibis_ms(self) -> np.ndarray:
        return self.ibis_ms[self.valid_mask()]

    def split_at_breaks(self) -> list["IbiSequence"]:
        """Break-free runs, each a standalone sequence with >= 1 interval."""
        if self.n_ibis == 0:
            return []
        runs = []
        start = 0
        for b in list(self.segment_breaks) + [self.n_ibis]:
            if b > start:
                runs.append(
                    IbiSequence(beats_s=self.beats_s[start : b + 1], source=self.source)
                )
            start = b + 1
        return runs
