import numpy as np
import pytest

from pulsegraph.beat_graph import build_graph
from pulsegraph.hr_prior import HrPrior
from pulsegraph.types import FiducialSeries


@pytest.fixture
def flat_prior():
    """Single-window 75 bpm prior (800 ms average IBI)."""
    return HrPrior(np.array([30.0]), np.array([75.0]), 8.0)


def make_prior(hr_bpm: float, center_s: float = 30.0) -> HrPrior:
    return HrPrior(np.array([center_s]), np.array([hr_bpm]), 8.0)


def make_graph(vertices, hr_bpm=75.0, feature="systolic_peak"):
    series = FiducialSeries(feature, 0, np.asarray(vertices, dtype=float))
    return build_graph(series, make_prior(hr_bpm))


def random_small_graph(rng: np.random.Generator, max_vertices: int = 12):
    """Random beat grid with jitter and spurious extras, <= max_vertices."""
    n_true = int(rng.integers(3, 8))
    ibi = float(rng.uniform(0.55, 1.0))
    beats = np.cumsum(np.full(n_true, ibi) * rng.uniform(0.92, 1.08, n_true))
    n_extra = int(rng.integers(0, max_vertices - n_true + 1))
    extras = rng.uniform(beats[0], beats[-1], n_extra)
    vertices = np.unique(np.concatenate([beats, extras]))
    hr = 60.0 / ibi
    return make_graph(vertices, hr_bpm=float(np.clip(hr, 40, 200)))
