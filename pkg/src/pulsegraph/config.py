"""Pipeline configuration: one knob per tunable decision, TOML-loadable.

Defaults reproduce the reference processing chain; a flat TOML file (or the
``PULSEGRAPH_CONFIG`` environment variable pointing at one) overrides any
subset of keys. Unknown keys are rejected so typos cannot silently fall
back to defaults.
"""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import InvalidInput, ParseError

ENV_CONFIG_VAR = "PULSEGRAPH_CONFIG"


@dataclass(frozen=True)
class PipelineConfig:
    # Preprocessing
    resample_rate_hz: float = 500.0
    ppg_band_low_hz: float = 0.5
    ppg_band_low_two_channel_hz: float = 0.7
    ppg_band_high_hz: float = 15.0
    ecg_high_pass_hz: float = 0.5
    filter_order: int = 4
    zero_phase: bool = True
    spline_knot_spacing_s: float = 0.02
    # Fiducial candidates
    peak_min_distance_s: float = 0.25
    peak_prominence_iqr_frac: float = 0.05
    edge_guard_s: float = 1.0
    # ECG ground truth
    r_peak_center_freq_hz: float = 10.0
    r_peak_mad_multiplier: float = 3.0
    # HR prior
    hr_window_s: float = 8.0
    hr_step_s: float = 2.0
    hr_band_low_hz: float = 0.5
    hr_band_high_hz: float = 4.0
    hr_continuity_bpm: float = 15.0
    # Beat graph
    penalty_lambda: float = 1.0
    penalty_exponent: int = 2
    neighbor_window_ibi_factor: float = 1.5
    # HRV
    ar_order: int = 16
    tachogram_rate_hz: float = 4.0
    mean_hr_mode: str = "per_beat"
    # Evaluation
    align_tolerance_factor: float = 0.5

    def as_dict(self) -> dict:
        return asdict(self)

    def with_overrides(self, **kwargs) -> "PipelineConfig":
        return replace(self, **kwargs)


_FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def config_from_mapping(mapping: dict) -> PipelineConfig:
    """Build a config from a flat key/value mapping, validating keys."""
    unknown = set(mapping) - set(_FIELD_TYPES)
    if unknown:
        raise InvalidInput(f"unknown config keys: {sorted(unknown)}")
    return PipelineConfig(**mapping)


def load_config(path=None, env=os.environ) -> PipelineConfig:
    """Resolve the active config: explicit file, else env var, else defaults."""
    if path is None:
        path = env.get(ENV_CONFIG_VAR)
    if path is None:
        return PipelineConfig()
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ParseError("config file not found", path) from None
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"invalid TOML: {exc}", path) from None
    return config_from_mapping(data)
