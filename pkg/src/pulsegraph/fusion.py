"""Greedy segment-wise fusion of the three per-feature IBI sequences.

The onset sequence anchors a segmentation into runs of three consecutive
IBIs. Peak and slope IBIs whose start beats fall inside a segment join its
candidate pool, and the three candidates closest (in total absolute
deviation) to the segment's average-IBI references are kept. Because every
feature stream makes different mistakes on motion-corrupted signal, the
pooled choice damps the interval fluctuation any single stream shows.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .errors import EmptyResult, InvalidInput
from .hr_prior import HrPrior, avg_ibi_at
from .types import IbiSequence

SEGMENT_LEN = 3
# Junction spacing used when a re-anchored run would collide with the
# previous beat; only reachable on pathological inputs.
_MIN_JUNCTION_S = 0.25
# Chosen intervals must be consecutive: each slot's start beat must sit at
# least this fraction of the segment's average IBI after the previous
# slot's. Same-interval re-detections across features start within ~0.2 of
# an IBI of each other; true consecutive intervals start a full IBI apart.
MIN_SLOT_ADVANCE_IBI_FRAC = 0.5


@dataclass(frozen=True)
class SegmentBundle:
    """One fusion segment: three onset IBIs plus pooled candidates and references.

    ``passthrough`` marks a terminal remainder (fewer than three onset IBIs)
    that is copied to the output unfused.
    """

    index: int
    window: tuple
    onset_ibis_ms: np.ndarray
    onset_start_ts: np.ndarray
    peak_ibis_ms: np.ndarray
    peak_start_ts: np.ndarray
    slope_ibis_ms: np.ndarray
    slope_start_ts: np.ndarray
    avg_ibis_ms: np.ndarray
    passthrough: bool = False

    def candidate_pool(self):
        """Pooled candidate IBIs as ``(values_ms, start_ts, sources)``.

        The pool is the set-union of the three feature subsets, ordered
        peak, slope, onset: an interval reported identically (same value and
        start timestamp) by several features appears once, labeled onset
        when the onset stream is among them. Candidates that merely share a
        value remain distinct entries.
        """
        values = np.concatenate([self.peak_ibis_ms, self.slope_ibis_ms, self.onset_ibis_ms])
        ts = np.concatenate([self.peak_start_ts, self.slope_start_ts, self.onset_start_ts])
        sources = (
            ["systolic_peak"] * self.peak_ibis_ms.size
            + ["max_slope"] * self.slope_ibis_ms.size
            + ["onset"] * self.onset_ibis_ms.size
        )
        seen = {}
        keep_values, keep_ts, keep_sources = [], [], []
        for v, t, src in zip(values, ts, sources):
            key = (float(v), float(t))
            if key in seen:
                if src == "onset":
                    keep_sources[seen[key]] = "onset"
                continue
            seen[key] = len(keep_values)
            keep_values.append(float(v))
            keep_ts.append(float(t))
            keep_sources.append(src)
        return np.asarray(keep_values), np.asarray(keep_ts), keep_sources


def _valid_intervals(seq: IbiSequence):
    mask = seq.valid_mask()
    return seq.ibis_ms[mask], seq.start_times_s[mask]


def _window_slice(values, ts, t_start, t_end):
    lo = np.searchsorted(ts, t_start, side="left")
    hi = np.searchsorted(ts, t_end, side="left")
    return values[lo:hi], ts[lo:hi]


def segment(
    onset: IbiSequence,
    peak: IbiSequence,
    slope: IbiSequence,
    prior: HrPrior,
) -> list:
    """Divide the record into 3-IBI fusion segments keyed by the onset stream.

    Returns the bundles in temporal order. Segments never span an onset
    segment break; a run's leftover one or two IBIs become a passthrough
    bundle. Raises :class:`EmptyResult` when the onset stream has no
    intervals at all.
    """
    if onset.n_ibis == 0:
        raise EmptyResult("onset sequence has no intervals to segment")
    peak_vals, peak_ts = _valid_intervals(peak)
    slope_vals, slope_ts = _valid_intervals(slope)

    bundles = []
    idx = 0
    for run in onset.split_at_breaks():
        n = run.n_ibis
        values = run.ibis_ms
        starts = run.start_times_s
        for p in range(0, n, SEGMENT_LEN):
            take = min(SEGMENT_LEN, n - p)
            t_start = run.beats_s[p]
            t_end = run.beats_s[p + take]
            pv, pt = _window_slice(peak_vals, peak_ts, t_start, t_end)
            sv, st = _window_slice(slope_vals, slope_ts, t_start, t_end)
            bundles.append(
                SegmentBundle(
                    index=idx,
                    window=(float(t_start), float(t_end)),
                    onset_ibis_ms=values[p : p + take],
                    onset_start_ts=starts[p : p + take],
                    peak_ibis_ms=pv,
                    peak_start_ts=pt,
                    slope_ibis_ms=sv,
                    slope_start_ts=st,
                    avg_ibis_ms=np.asarray(avg_ibi_at(prior, starts[p : p + take])),
                    passthrough=take < SEGMENT_LEN,
                )
            )
            idx += 1
    return bundles


def fuse_segment(b: SegmentBundle):
    """Pick the three pooled candidates minimizing total deviation from the
    segment's average-IBI references.

    The argmin runs exhaustively over ordered triples of distinct candidate
    indices that form three consecutive intervals: each slot's start beat
    must advance past the previous slot's by at least
    :data:`MIN_SLOT_ADVANCE_IBI_FRAC` of the segment's average IBI, which
    rules out assigning one physical interval (re-detected by several
    features) to two slots. Equal-objective ties prefer triples with more
    onset-sourced members, then earlier timestamps.

    Returns ``(values_ms, start_ts, sources)`` arrays of length three (or
    the onset remainder unchanged for a passthrough bundle). Should no
    feasible triple exist (only possible when the onset stream itself holds
    an implausibly short interval), the onset triple passes through.
    """
    if b.passthrough:
        return b.onset_ibis_ms.copy(), b.onset_start_ts.copy(), ["onset"] * b.onset_ibis_ms.size

    values, ts, sources = b.candidate_pool()
    refs = b.avg_ibis_ms
    if values.size < SEGMENT_LEN:
        raise InvalidInput("segment needs at least three candidate intervals")
    is_onset = np.asarray([s == "onset" for s in sources])
    min_gap_s = MIN_SLOT_ADVANCE_IBI_FRAC * float(np.mean(refs)) / 1000.0

    best_key = None
    best = None
    for j, k, l in permutations(range(values.size), 3):
        if ts[k] - ts[j] < min_gap_s or ts[l] - ts[k] < min_gap_s:
            continue
        objective = (
            abs(values[j] - refs[0]) + abs(values[k] - refs[1]) + abs(values[l] - refs[2])
        )
        n_onset = int(is_onset[j]) + int(is_onset[k]) + int(is_onset[l])
        key = (objective, -n_onset, (ts[j], ts[k], ts[l]), (j, k, l))
        if best_key is None or key < best_key:
            best_key = key
            best = (j, k, l)
    if best is None:
        # No consecutive triple among the candidates; fall back to onset.
        return b.onset_ibis_ms.copy(), b.onset_start_ts.copy(), ["onset"] * SEGMENT_LEN
    picked = list(best)
    return (
        values[picked],
        ts[picked],
        [sources[i] for i in picked],
    )


def fuse(
    onset: IbiSequence,
    peak: IbiSequence,
    slope: IbiSequence,
    prior: HrPrior,
) -> IbiSequence:
    """Fuse the three feature streams into the final IBI sequence.

    Chosen durations are chained cumulatively from each break-free run's
    first onset beat, so interval values are preserved exactly and beat
    timestamps stay strictly increasing; run junctions are flagged as
    segment breaks.
    """
    bundles = segment(onset, peak, slope, prior)
    run_starts = {}
    for run_idx, run in enumerate(onset.split_at_breaks()):
        run_starts[float(run.beats_s[0])] = run_idx

    beats = []
    breaks = []
    current_anchor = None
    for b in bundles:
        anchor = b.window[0]
        starts_new_run = anchor in run_starts
        if starts_new_run:
            if beats:
                breaks.append(len(beats) - 1)
                if anchor <= beats[-1]:
                    anchor = beats[-1] + _MIN_JUNCTION_S
            beats.append(anchor)
            current_anchor = anchor
        values, _, _ = fuse_segment(b)
        for v in values:
            current_anchor += float(v) / 1000.0
            beats.append(current_anchor)
    return IbiSequence(
        beats_s=np.asarray(beats), source="fused", segment_breaks=np.asarray(breaks, dtype=int)
    )
