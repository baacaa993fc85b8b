"""Beat-candidate DAG and the convex-penalty shortest path that selects
true heartbeats.

Every candidate fiducial point becomes a vertex; edges run backward in time
to all candidates within 1.5x the local average IBI. An edge is penalized
by how far the predecessor sits from where the average IBI says the
previous beat should be, raised to a convex power. Dynamic programming in
vertex order then yields, per vertex, the cheapest chain of beats ending
there; walking back from the best end vertex recovers the beat train.

The scale factor of the penalty multiplies every path weight uniformly, so
it cannot change which path wins; the DP therefore accumulates bare
``d**exponent`` terms and applies the scale only to reported weights.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import EmptyResult, InvalidInput
from .hr_prior import HrPrior, avg_ibi_at
from .types import IBI_MAX_MS, IBI_MIN_MS, FiducialSeries, IbiSequence

DEFAULT_WINDOW_IBI_FACTOR = 1.5


@dataclass(frozen=True)
class PenaltyConfig:
    """Convex penalty ``lam * d**exponent`` on edge deviations (seconds)."""

    lam: float = 1.0
    exponent: int = 2

    def __post_init__(self):
        if self.lam <= 0:
            raise InvalidInput(f"lambda must be positive, got {self.lam}")
        if int(self.exponent) != self.exponent or self.exponent < 1:
            raise InvalidInput(f"exponent must be a positive integer, got {self.exponent}")


@dataclass
class BeatGraph:
    """Candidate-beat DAG plus, after solving, the dynamic-programming state.

    ``neighbor_lo[i]``/``neighbor_hi[i]`` bound (inclusively) the backward
    neighbors of vertex ``i``; the range is empty when ``lo > hi``. Vertex
    times are non-decreasing — exact ties can occur when two channels are
    merged — and every edge spans a strictly positive time gap.
    """

    vertices_s: np.ndarray
    channel_ids: np.ndarray
    avg_ibi_s: np.ndarray
    window_s: np.ndarray
    neighbor_lo: np.ndarray
    neighbor_hi: np.ndarray
    feature: str = "unknown"
    # Filled by shortest_path:
    weights: Optional[np.ndarray] = None
    prev: Optional[np.ndarray] = None
    start_eligible: Optional[np.ndarray] = None

    @property
    def n_vertices(self) -> int:
        return self.vertices_s.size

    def neighbor_count(self, i: int) -> int:
        return max(0, int(self.neighbor_hi[i]) - int(self.neighbor_lo[i]) + 1)


def _assemble(
    vertices: np.ndarray,
    channels: np.ndarray,
    prior: HrPrior,
    window_factor: float,
    feature: str,
) -> BeatGraph:
    avg_ibi_s = np.asarray(avg_ibi_at(prior, vertices)) / 1000.0
    window = window_factor * avg_ibi_s
    # Neighbors of i: all j with 0 < v_i - v_j < window_i. Both bounds come
    # from searchsorted on the sorted vertex array.
    lo = np.searchsorted(vertices, vertices - window, side="right")
    hi = np.searchsorted(vertices, vertices, side="left") - 1
    return BeatGraph(
        vertices_s=vertices,
        channel_ids=channels,
        avg_ibi_s=avg_ibi_s,
        window_s=window,
        neighbor_lo=lo.astype(int),
        neighbor_hi=hi.astype(int),
        feature=feature,
    )


def build_graph(
    candidates: FiducialSeries,
    prior: HrPrior,
    window_factor: float = DEFAULT_WINDOW_IBI_FACTOR,
) -> BeatGraph:
    """Single-channel DAG over one candidate fiducial stream."""
    if len(candidates) == 0:
        raise EmptyResult("no candidate fiducial points")
    vertices = candidates.timestamps_s.astype(float)
    channels = np.full(vertices.size, candidates.channel_id, dtype=int)
    return _assemble(vertices, channels, prior, window_factor, candidates.feature)


def build_graph_two_channel(
    c1: FiducialSeries,
    c2: FiducialSeries,
    prior: HrPrior,
    window_factor: float = DEFAULT_WINDOW_IBI_FACTOR,
) -> BeatGraph:
    """DAG over the time-sorted concatenation of two channels' candidates.

    Both series must carry the same feature. The merge is stable (channel 1
    first on exact ties) and vertices keep their channel provenance.
    """
    if c1.feature != c2.feature:
        raise InvalidInput(f"feature mismatch: {c1.feature!r} vs {c2.feature!r}")
    if len(c2) == 0:
        return build_graph(c1, prior, window_factor)
    if len(c1) == 0:
        return build_graph(c2, prior, window_factor)
    ts = np.concatenate([c1.timestamps_s, c2.timestamps_s])
    ch = np.concatenate(
        [
            np.full(len(c1), c1.channel_id, dtype=int),
            np.full(len(c2), c2.channel_id, dtype=int),
        ]
    )
    order = np.argsort(ts, kind="stable")
    return _assemble(ts[order], ch[order], prior, window_factor, c1.feature)


def _end_set(g: BeatGraph, m: int) -> list:
    """Destination candidates for a walk ending at vertex ``m``: N_m plus m."""
    lo, hi = int(g.neighbor_lo[m]), int(g.neighbor_hi[m])
    return (list(range(lo, hi + 1)) if lo <= hi else []) + [m]


def _pick_destination(weights: list, vertices: list, indices: list) -> int:
    """Lowest accumulated weight; ties go to the latest timestamp, then index."""
    best = None
    for k in indices:
        if (
            best is None
            or weights[k] < weights[best]
            or (weights[k] == weights[best] and vertices[k] >= vertices[best])
        ):
            best = k
    return best


def shortest_path(g: BeatGraph, cfg: PenaltyConfig = PenaltyConfig()) -> IbiSequence:
    """Select true beats by dynamic programming over the candidate DAG.

    For vertex ``i`` the expected previous beat sits at ``v_i - avg_ibi_i``;
    each backward neighbor ``j`` costs ``|v_j - (v_i - avg_ibi_i)|**x`` and
    the vertex inherits the cheapest neighbor total. The first vertex, any
    vertex inside the record's first neighbor window (the true first beat is
    unknown), and any vertex with no neighbors at all (sensor dropout) may
    start a chain at zero weight. The destination is the cheapest vertex
    among the last vertex and its neighbors; walking predecessor links
    backward yields the chosen beats. A dropout splits the walk into
    segments: the interval spanning each split is flagged as a segment break
    rather than reported as a beat interval.

    Ties prefer chaining over restarting and the temporally nearest
    neighbor, which keeps the output deterministic and maximizes coverage.
    """
    n = g.n_vertices
    if n == 0:
        raise EmptyResult("empty graph")
    exponent = int(cfg.exponent)

    vs = g.vertices_s.tolist()
    aibi = g.avg_ibi_s.tolist()
    lo_arr = g.neighbor_lo.tolist()
    hi_arr = g.neighbor_hi.tolist()
    first_window = (g.vertices_s - g.vertices_s[0]) < g.window_s

    weights = [0.0] * n
    prev = [-1] * n
    inf = float("inf")
    for i in range(n):
        lo, hi = lo_arr[i], hi_arr[i]
        eligible = (lo > hi) or bool(first_window[i])
        target = vs[i] - aibi[i]
        best = inf
        best_j = -1
        # Descending j: on equal weight the nearest (latest) neighbor sticks.
        for j in range(hi, lo - 1, -1):
            d = vs[j] - target
            if d < 0.0:
                d = -d
            if exponent == 2:
                cand = d * d + weights[j]
            else:
                cand = d**exponent + weights[j]
            if cand < best:
                best = cand
                best_j = j
        if eligible and 0.0 < best:
            # A fresh start is free; chaining wins only at equal weight.
            best = 0.0
            best_j = -1
        weights[i] = best
        prev[i] = best_j

    # Backward recovery, restarting before each dropout gap.
    segments: list[list[int]] = []
    dst = _pick_destination(weights, vs, _end_set(g, n - 1))
    while True:
        chain = []
        k = dst
        while k != -1:
            chain.append(k)
            k = prev[k]
        chain.reverse()
        segments.append(chain)
        s = chain[0]
        if s == 0 or first_window[s]:
            break
        # Gap start: resume on the record prefix that ends just before it.
        dst = _pick_destination(weights, vs, _end_set(g, s - 1))
    segments.reverse()

    beats = []
    breaks = []
    for seg_idx, chain in enumerate(segments):
        if seg_idx > 0 and beats:
            breaks.append(len(beats) - 1)
        for k in chain:
            if beats and vs[k] <= beats[-1]:
                continue  # duplicate timestamp at a two-channel junction
            beats.append(vs[k])
    beats_arr = np.asarray(beats)
    ibis = np.diff(beats_arr) * 1000.0
    out_of_range = np.flatnonzero((ibis <= IBI_MIN_MS) | (ibis >= IBI_MAX_MS))
    all_breaks = np.union1d(np.asarray(breaks, dtype=int), out_of_range)
    all_breaks = all_breaks[(all_breaks >= 0) & (all_breaks < ibis.size)]

    g.weights = np.asarray(weights) * cfg.lam
    g.prev = np.asarray(prev)
    g.start_eligible = first_window | (g.neighbor_lo > g.neighbor_hi)
    return IbiSequence(beats_s=beats_arr, source=g.feature, segment_breaks=all_breaks)


def path_weight(g: BeatGraph, cfg: PenaltyConfig, chain) -> float:
    """Total penalty of an explicit vertex chain, accumulated start-to-end.

    Matches the DP's arithmetic and accumulation order exactly, so a
    DP-optimal chain reproduces the DP weight bit-for-bit.
    """
    exponent = int(cfg.exponent)
    total = 0.0
    for a, b in zip(chain[:-1], chain[1:]):
        d = abs(float(g.vertices_s[a]) - (float(g.vertices_s[b]) - float(g.avg_ibi_s[b])))
        total = (d * d if exponent == 2 else d**exponent) + total
    return cfg.lam * total
