"""Session ingestion, the canonical on-disk formats, and the batch pipeline.

A session is a directory with a ``manifest.json`` naming the channel files:
``ppg1`` (required), ``ppg2``, ``ecg``, ``hr``, and ``true_ibis`` (all
optional). Signals are two-column ``t_s,value`` CSVs at the manifest's
declared sample rate; HR priors are ``t_s,hr_bpm`` CSVs; IBI files carry
``beat_t_s,ibi_ms,source,segment_break`` rows where ``beat_t_s`` is the
interval's start beat. All outputs are written atomically (temp + rename)
and are byte-identical across reruns of the same inputs.
"""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import fiducials as fid
from .beat_graph import PenaltyConfig, build_graph, build_graph_two_channel, shortest_path
from .config import PipelineConfig
from .errors import (
    InvalidInput,
    ManifestError,
    ParseError,
    PipelineStageError,
    PulsegraphError,
)
from .fusion import fuse
from .hr_prior import HrPrior, estimate_hr_spectral, load_hr_file
from .hrv import HrvReport, hrv_report, time_domain
from .metrics import align, ibi_metrics
from .preprocess import FilterSpec, apply_filter, ecg_r_peaks, resample, smooth_spline
from .synth import SynthRecord
from .types import IbiSequence, Waveform

FEATURE_ALIASES = {
    "peak": "systolic_peak",
    "slope": "max_slope",
    "onset": "onset",
    "fused": "fused",
}
FEATURE_SHORT = {v: k for k, v in FEATURE_ALIASES.items()}

WAVEFORM_CHANNELS = ("ppg1", "ppg2", "ecg")


@dataclass(frozen=True)
class SessionManifest:
    session_id: str
    subject_id: str
    activity: str
    channels: dict
    sample_rate_hz: dict


@dataclass
class Session:
    path: Path
    manifest: SessionManifest
    waveforms: dict
    hr_prior: Optional[HrPrior] = None
    true_ibis: Optional[IbiSequence] = None


# ---------------------------------------------------------------- file I/O


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_waveform_csv(path: Path, w: Waveform) -> None:
    t = w.timestamps()
    lines = ["t_s,value"]
    lines.extend(f"{float(ti)!r},{float(vi)!r}" for ti, vi in zip(t, w.samples))
    _atomic_write(Path(path), "\n".join(lines) + "\n")


def read_waveform_csv(path: Path, sample_rate_hz: float) -> Waveform:
    path = Path(path)
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except Exception:
        _locate_csv_error(path, expected_cols=2)
        raise  # pragma: no cover - _locate_csv_error always raises
    if data.shape[1] != 2:
        raise ParseError(f"expected 2 columns, got {data.shape[1]}", path)
    if data.shape[0] == 0:
        raise ParseError("no data rows", path)
    return Waveform(data[:, 1], sample_rate_hz, t0_s=float(data[0, 0]))


def _locate_csv_error(path: Path, expected_cols: int) -> None:
    """Re-parse a CSV slowly to raise ParseError with the offending line."""
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if lineno == 1 or not row:
                continue
            if len(row) != expected_cols:
                raise ParseError(f"expected {expected_cols} columns", path, lineno)
            try:
                [float(c) for c in row]
            except ValueError:
                raise ParseError(f"non-numeric row {row!r}", path, lineno) from None
    raise ParseError("malformed CSV", path)


def write_ibis_csv(path: Path, seq: IbiSequence) -> None:
    breaks = set(int(b) for b in seq.segment_breaks)
    lines = ["beat_t_s,ibi_ms,source,segment_break"]
    starts = seq.start_times_s
    ibis = seq.ibis_ms
    for k in range(seq.n_ibis):
        lines.append(f"{float(starts[k])!r},{float(ibis[k])!r},{seq.source},{int(k in breaks)}")
    _atomic_write(Path(path), "\n".join(lines) + "\n")


def read_ibis_csv(path: Path) -> IbiSequence:
    path = Path(path)
    starts, ibis, breaks = [], [], []
    source = "unknown"
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if lineno == 1 or not row:
                continue
            if len(row) != 4:
                raise ParseError(f"expected 4 columns, got {len(row)}", path, lineno)
            try:
                starts.append(float(row[0]))
                ibis.append(float(row[1]))
                flag = int(row[3])
            except ValueError:
                raise ParseError(f"non-numeric row {row!r}", path, lineno) from None
            source = row[2]
            if flag:
                breaks.append(len(ibis) - 1)
    if not starts:
        raise ParseError("no data rows", path)
    beats = np.append(np.asarray(starts), starts[-1] + ibis[-1] / 1000.0)
    # Rebuild the beat train: each row's start beat plus the final end beat.
    return IbiSequence(beats_s=beats, source=source, segment_breaks=np.asarray(breaks, dtype=int))


def write_hr_csv(path: Path, prior: HrPrior) -> None:
    lines = ["t_s,hr_bpm"]
    lines.extend(
        f"{float(t)!r},{float(h)!r}" for t, h in zip(prior.window_centers_s, prior.hr_bpm)
    )
    _atomic_write(Path(path), "\n".join(lines) + "\n")


# ---------------------------------------------------------------- sessions


def ingest(path) -> Session:
    """Load and validate a session directory."""
    path = Path(path)
    manifest_path = path / "manifest.json"
    if not manifest_path.exists():
        raise ManifestError(f"no manifest.json in {path}")
    try:
        raw = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest.json invalid: {exc}") from None
    channels = raw.get("channels", {})
    if "ppg1" not in channels:
        raise ManifestError(f"manifest {manifest_path} missing required channel 'ppg1'")
    rates = raw.get("sample_rate_hz", {})
    manifest = SessionManifest(
        session_id=str(raw.get("session_id", path.name)),
        subject_id=str(raw.get("subject_id", path.name)),
        activity=str(raw.get("activity", "")),
        channels=channels,
        sample_rate_hz=rates,
    )

    waveforms = {}
    for name in WAVEFORM_CHANNELS:
        if name not in channels:
            continue
        fpath = path / channels[name]
        if not fpath.exists():
            raise ManifestError(f"channel {name!r} file missing: {fpath}")
        rate = rates.get(name)
        if rate is None or float(rate) <= 0:
            raise ManifestError(f"channel {name!r} needs a positive sample_rate_hz")
        waveforms[name] = read_waveform_csv(fpath, float(rate))

    hr_prior = None
    if "hr" in channels:
        fpath = path / channels["hr"]
        if not fpath.exists():
            raise ManifestError(f"channel 'hr' file missing: {fpath}")
        hr_prior = load_hr_file(fpath)

    true_ibis = None
    if "true_ibis" in channels:
        fpath = path / channels["true_ibis"]
        if not fpath.exists():
            raise ManifestError(f"channel 'true_ibis' file missing: {fpath}")
        true_ibis = read_ibis_csv(fpath)

    return Session(path=path, manifest=manifest, waveforms=waveforms,
                   hr_prior=hr_prior, true_ibis=true_ibis)


def write_session(path, record: SynthRecord, session_id: str = None,
                  subject_id: str = "1", activity: str = "synthetic") -> Path:
    """Persist a synthetic record as a canonical session directory."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    channels = {"ppg1": "ppg1.csv", "ecg": "ecg.csv", "hr": "hr.csv",
                "true_ibis": "true_ibis.csv"}
    rates = {"ppg1": record.ppg.sample_rate_hz, "ecg": record.ecg.sample_rate_hz}
    write_waveform_csv(path / "ppg1.csv", record.ppg)
    if len(record.channels) > 1:
        channels["ppg2"] = "ppg2.csv"
        rates["ppg2"] = record.channels[1].ppg.sample_rate_hz
        write_waveform_csv(path / "ppg2.csv", record.channels[1].ppg)
    write_waveform_csv(path / "ecg.csv", record.ecg)
    write_hr_csv(path / "hr.csv", record.hr_prior)
    write_ibis_csv(path / "true_ibis.csv", record.ibis)
    manifest = {
        "session_id": session_id or path.name,
        "subject_id": subject_id,
        "activity": activity,
        "channels": channels,
        "sample_rate_hz": rates,
    }
    _atomic_write(path / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


# ---------------------------------------------------------------- pipeline


@dataclass
class EstimationResult:
    """In-memory pipeline output for one channel set."""

    per_feature: dict
    fused: IbiSequence
    prior: HrPrior
    candidates: dict = field(default_factory=dict)


def preprocess_ppg(w: Waveform, cfg: PipelineConfig, two_channel: bool = False) -> Waveform:
    low = cfg.ppg_band_low_two_channel_hz if two_channel else cfg.ppg_band_low_hz
    out = resample(w, cfg.resample_rate_hz)
    spec = FilterSpec(
        "band_pass", low, cfg.ppg_band_high_hz,
        order=cfg.filter_order, zero_phase=cfg.zero_phase,
    )
    out = apply_filter(out, spec)
    return smooth_spline(out, cfg.spline_knot_spacing_s)


def preprocess_ecg(w: Waveform, cfg: PipelineConfig) -> Waveform:
    out = resample(w, cfg.resample_rate_hz)
    spec = FilterSpec(
        "high_pass", cfg.ecg_high_pass_hz,
        order=cfg.filter_order, zero_phase=cfg.zero_phase,
    )
    return apply_filter(out, spec)


def true_ibis_from_ecg(ecg: Waveform, cfg: PipelineConfig) -> IbiSequence:
    filtered = preprocess_ecg(ecg, cfg)
    peaks = ecg_r_peaks(
        filtered,
        center_freq_hz=cfg.r_peak_center_freq_hz,
        mad_multiplier=cfg.r_peak_mad_multiplier,
    )
    return IbiSequence(beats_s=peaks.timestamps_s, source="true")


def estimate_from_waveforms(
    ppg_channels: list,
    cfg: PipelineConfig = PipelineConfig(),
    prior: Optional[HrPrior] = None,
) -> EstimationResult:
    """Run preprocessing, candidate extraction, graph selection, and fusion.

    ``ppg_channels`` holds one or two raw PPG waveforms; with two, candidate
    streams are concatenated into a two-channel graph per feature. The HR
    prior defaults to the spectral tracker on the first channel.
    """
    if not ppg_channels or len(ppg_channels) > 2:
        raise InvalidInput("need one or two PPG channels")
    two_channel = len(ppg_channels) == 2
    processed = [
        preprocess_ppg(w, cfg, two_channel=two_channel) for w in ppg_channels
    ]
    if prior is None:
        prior = estimate_hr_spectral(
            processed[0],
            window_s=cfg.hr_window_s,
            step_s=cfg.hr_step_s,
            band_hz=(cfg.hr_band_low_hz, cfg.hr_band_high_hz),
            continuity_bpm=cfg.hr_continuity_bpm,
        )

    detector_kwargs = dict(
        min_distance_s=cfg.peak_min_distance_s,
        prominence_iqr_frac=cfg.peak_prominence_iqr_frac,
        edge_guard_s=cfg.edge_guard_s,
    )
    candidates = {}
    for ch, w in enumerate(processed):
        candidates[ch] = fid.extract_all(w, channel_id=ch, **detector_kwargs)

    penalty = PenaltyConfig(lam=cfg.penalty_lambda, exponent=cfg.penalty_exponent)
    per_feature = {}
    for feature in ("systolic_peak", "max_slope", "onset"):
        if two_channel:
            graph = build_graph_two_channel(
                candidates[0][feature], candidates[1][feature], prior,
                window_factor=cfg.neighbor_window_ibi_factor,
            )
        else:
            graph = build_graph(
                candidates[0][feature], prior,
                window_factor=cfg.neighbor_window_ibi_factor,
            )
        per_feature[feature] = shortest_path(graph, penalty)

    fused = fuse(
        per_feature["onset"], per_feature["systolic_peak"], per_feature["max_slope"], prior
    )
    return EstimationResult(
        per_feature=per_feature, fused=fused, prior=prior, candidates=candidates
    )


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PulsegraphError as exc:
        raise PipelineStageError(name, exc) from exc


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _hrv_dict_or_none(seq: IbiSequence, cfg: PipelineConfig):
    try:
        return hrv_report(
            seq, mean_hr_mode=cfg.mean_hr_mode,
            tachogram_rate_hz=cfg.tachogram_rate_hz, ar_order=cfg.ar_order,
        ).as_dict()
    except InvalidInput:
        try:
            mean_rr, mean_hr, sdnn, std_hr = time_domain(seq, cfg.mean_hr_mode)
        except InvalidInput:
            return None
        return {
            "mean_rr_ms": mean_rr,
            "mean_hr_bpm": mean_hr,
            "sdnn_ms": sdnn,
            "std_hr_bpm": std_hr,
            "vlf_power_ms2": None,
            "lf_power_ms2": None,
            "hf_power_ms2": None,
            "total_power_ms2": None,
        }


def run_pipeline(
    session: Session,
    cfg: PipelineConfig = PipelineConfig(),
    out_dir=None,
    channels: tuple = (1,),
) -> Path:
    """Run the full pipeline on a session and persist the artifacts.

    Writes per-feature and fused IBI CSVs, ``hrv.json``, ``metrics.json``,
    plot-data CSVs, and a config echo into ``out_dir`` (default
    ``<session>/results``). Returns the output directory.
    """
    out = Path(out_dir) if out_dir is not None else session.path / "results"
    out.mkdir(parents=True, exist_ok=True)

    names = {1: "ppg1", 2: "ppg2"}
    ppg_waves = []
    for ch in channels:
        name = names.get(ch)
        if name is None or name not in session.waveforms:
            raise ManifestError(f"session {session.manifest.session_id} lacks channel {ch}")
        ppg_waves.append(session.waveforms[name])

    result = _stage(
        "estimate", estimate_from_waveforms, ppg_waves, cfg, prior=session.hr_prior
    )

    for feature, seq in result.per_feature.items():
        write_ibis_csv(out / f"ibis_{FEATURE_SHORT[feature]}.csv", seq)
    write_ibis_csv(out / "ibis_fused.csv", result.fused)

    truth = session.true_ibis
    if truth is None and "ecg" in session.waveforms:
        truth = _stage("ecg_truth", true_ibis_from_ecg, session.waveforms["ecg"], cfg)

    hrv_payload = {
        "feature": "fused",
        "estimated": _hrv_dict_or_none(result.fused, cfg),
        "true": _hrv_dict_or_none(truth, cfg) if truth is not None else None,
    }
    _atomic_write(out / "hrv.json", _json_text(hrv_payload))

    channelset = ",".join(str(c) for c in channels)
    metric_rows = []
    if truth is not None:
        sequences = dict(result.per_feature)
        sequences["fused"] = result.fused
        for feature, seq in sequences.items():
            short = FEATURE_SHORT.get(feature, feature)
            try:
                pairs = align(truth, seq, cfg.align_tolerance_factor)
                corr, mape = ibi_metrics(pairs)
                row = {
                    "subject": session.manifest.subject_id,
                    "channelset": channelset,
                    "feature": short,
                    "corr": corr,
                    "mape_pct": mape,
                    "coverage": pairs.coverage,
                }
            except PulsegraphError as exc:
                row = {
                    "subject": session.manifest.subject_id,
                    "channelset": channelset,
                    "feature": short,
                    "corr": None,
                    "mape_pct": None,
                    "coverage": 0.0,
                    "error": str(exc),
                }
            metric_rows.append(row)
    _atomic_write(out / "metrics.json", _json_text({"rows": metric_rows}))

    timeline = ["t_s,ibi_ms,series"]
    series_list = [("true", truth)] if truth is not None else []
    series_list += [
        (FEATURE_SHORT[f], seq) for f, seq in result.per_feature.items()
    ] + [("fused", result.fused)]
    for label, seq in series_list:
        if seq is None:
            continue
        mask = seq.valid_mask()
        for t, v in zip(seq.end_times_s[mask], seq.ibis_ms[mask]):
            timeline.append(f"{float(t)!r},{float(v)!r},{label}")
    _atomic_write(out / "plotdata_ibi_timeline.csv", "\n".join(timeline) + "\n")

    scatter = ["parameter,true_value,estimated_value"]
    if truth is not None and hrv_payload["true"] and hrv_payload["estimated"]:
        for name in HrvReport.PARAMETERS:
            tv = hrv_payload["true"].get(name)
            ev = hrv_payload["estimated"].get(name)
            if tv is None or ev is None:
                continue
            scatter.append(f"{name},{float(tv)!r},{float(ev)!r}")
    _atomic_write(out / "plotdata_hrv_scatter.csv", "\n".join(scatter) + "\n")

    _atomic_write(out / "config.json", _json_text(cfg.as_dict()))
    return out
