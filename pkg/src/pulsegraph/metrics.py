"""Alignment of true vs estimated IBI sequences and the agreement metrics:
per-subject Pearson correlation and mean absolute percentage error, plus
cross-subject statistics on HRV parameters.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import CorrUndefined, InvalidInput
from .hrv import HrvReport
from .types import IbiSequence

DEFAULT_TOLERANCE_FACTOR = 0.5


@dataclass(frozen=True)
class AlignedPairs:
    """One-to-one matched (true, estimated) intervals with bookkeeping."""

    true_ibi_ms: np.ndarray
    est_ibi_ms: np.ndarray
    true_beat_t_s: np.ndarray
    unmatched_true: int
    unmatched_est: int

    @property
    def n_pairs(self) -> int:
        return self.true_ibi_ms.size

    @property
    def coverage(self) -> float:
        """Matched fraction of true intervals."""
        total = self.n_pairs + self.unmatched_true
        return self.n_pairs / total if total else 0.0


def align(
    true_seq: IbiSequence,
    est_seq: IbiSequence,
    tolerance_factor: float = DEFAULT_TOLERANCE_FACTOR,
) -> AlignedPairs:
    """Greedy nearest-timestamp matching of interval end beats.

    A true/estimated pair is a match candidate when both its end beats and
    its start beats agree within ``tolerance_factor`` x the local IBI (the
    smaller of the pair's two intervals, which keeps the rule symmetric) —
    the start-beat gate keeps an interval that merged two true beats from
    matching either of them. Candidates are accepted closest-first (by
    end-beat distance), each interval used at most once; unmatched intervals
    on either side are counted, never silently dropped.
    """
    t_mask = true_seq.valid_mask()
    e_mask = est_seq.valid_mask()
    t_end = true_seq.end_times_s[t_mask]
    t_start = true_seq.start_times_s[t_mask]
    t_val = true_seq.ibis_ms[t_mask]
    e_end = est_seq.end_times_s[e_mask]
    e_start = est_seq.start_times_s[e_mask]
    e_val = est_seq.ibis_ms[e_mask]
    if t_end.size == 0 or e_end.size == 0:
        raise InvalidInput("both sequences need at least one valid interval")

    candidates = []
    for i in range(t_end.size):
        search_s = tolerance_factor * t_val[i] / 1000.0
        lo = np.searchsorted(e_end, t_end[i] - search_s, side="left")
        hi = np.searchsorted(e_end, t_end[i] + search_s, side="right")
        for j in range(lo, hi):
            tol_s = tolerance_factor * min(t_val[i], e_val[j]) / 1000.0
            if abs(e_end[j] - t_end[i]) <= tol_s and abs(e_start[j] - t_start[i]) <= tol_s:
                candidates.append((abs(e_end[j] - t_end[i]), i, j))
    candidates.sort()

    used_t = np.zeros(t_end.size, dtype=bool)
    used_e = np.zeros(e_end.size, dtype=bool)
    matched = []
    for _, i, j in candidates:
        if used_t[i] or used_e[j]:
            continue
        used_t[i] = True
        used_e[j] = True
        matched.append((i, j))
    matched.sort()
    idx_t = np.array([i for i, _ in matched], dtype=int)
    idx_e = np.array([j for _, j in matched], dtype=int)
    return AlignedPairs(
        true_ibi_ms=t_val[idx_t],
        est_ibi_ms=e_val[idx_e],
        true_beat_t_s=t_end[idx_t],
        unmatched_true=int(t_end.size - idx_t.size),
        unmatched_est=int(e_end.size - idx_e.size),
    )


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sx = np.std(x)
    sy = np.std(y)
    if sx == 0.0 or sy == 0.0:
        raise CorrUndefined("zero variance makes correlation undefined")
    return float(np.mean((x - x.mean()) * (y - y.mean())) / (sx * sy))


def mape_pct(true_values: np.ndarray, est_values: np.ndarray) -> float:
    t = np.asarray(true_values, dtype=float)
    e = np.asarray(est_values, dtype=float)
    return float(np.mean(np.abs(t - e) / t) * 100.0)


def ibi_metrics(a: AlignedPairs) -> tuple:
    """(Pearson correlation, MAPE %) over the matched interval pairs."""
    if a.n_pairs < 3:
        raise InvalidInput(f"need at least 3 matched pairs, got {a.n_pairs}")
    return pearson(a.true_ibi_ms, a.est_ibi_ms), mape_pct(a.true_ibi_ms, a.est_ibi_ms)


def hrv_metrics(
    true_reports: Sequence[HrvReport], est_reports: Sequence[HrvReport]
) -> dict:
    """Cross-subject (correlation, MAPE %) for each of the eight parameters.

    A parameter with zero variance across subjects gets ``corr=None``
    (undefined, reported distinctly rather than coerced to a number).
    """
    if len(true_reports) != len(est_reports):
        raise InvalidInput("true and estimated report lists must pair up")
    if len(true_reports) < 3:
        raise InvalidInput(f"need at least 3 subjects, got {len(true_reports)}")
    out = {}
    for name in HrvReport.PARAMETERS:
        t = np.array([getattr(r, name) for r in true_reports], dtype=float)
        e = np.array([getattr(r, name) for r in est_reports], dtype=float)
        corr: Optional[float]
        try:
            corr = pearson(t, e)
        except CorrUndefined:
            corr = None
        out[name] = (corr, mape_pct(t, e))
    return out


def subject_report(rows: Sequence[tuple]) -> list:
    """Per-subject table rows plus Average and SD (population) summary rows.

    ``rows`` holds ``(subject_id, corr, mape_pct)`` tuples; returned rows are
    the same followed by ``("Average", ..., ...)`` and ``("SD", ..., ...)``.
    """
    if not rows:
        raise InvalidInput("no subject rows to report")
    corr = np.array([r[1] for r in rows], dtype=float)
    mape = np.array([r[2] for r in rows], dtype=float)
    table = [(str(r[0]), float(r[1]), float(r[2])) for r in rows]
    table.append(("Average", float(np.mean(corr)), float(np.mean(mape))))
    table.append(("SD", float(np.std(corr)), float(np.std(mape))))
    return table
