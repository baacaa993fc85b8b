"""Batch command-line front end.

Subcommands:
  synth      generate a synthetic session directory with ground truth
  estimate   run the estimation pipeline on one session
  hrv        compute HRV parameters from an IBI CSV
  evaluate   run the pipeline over a dataset of sessions and collect metrics
  report     aggregate per-subject metric rows into a summary table
"""
from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import sys
from pathlib import Path

from .config import load_config
from .errors import PulsegraphError
from .hrv import hrv_report
from .metrics import subject_report
from .session import (
    FEATURE_ALIASES,
    ingest,
    read_ibis_csv,
    run_pipeline,
    write_session,
)
from .synth import ArtifactSpec, SynthConfig, generate


def _parse_channels(text: str) -> tuple:
    mapping = {"1": (1,), "2": (2,), "1,2": (1, 2)}
    if text not in mapping:
        raise argparse.ArgumentTypeError(f"--channels must be 1, 2, or 1,2 (got {text!r})")
    return mapping[text]


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="TOML config file")
    parser.add_argument("--out", default=None, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pulsegraph",
        description="Interbeat-interval and HRV estimation from wearable PPG",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic session")
    _add_common(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration", type=float, default=120.0, help="seconds")
    p.add_argument("--channels", type=_parse_channels, default=(1,))
    p.add_argument("--hr", type=float, default=72.0, help="constant heart rate (bpm)")
    p.add_argument("--jitter-ms", type=float, default=10.0)
    p.add_argument("--spike-rate", type=float, default=0.0, help="spikes per minute")
    p.add_argument("--spike-amp", type=float, default=1.0)
    p.add_argument("--wander-amp", type=float, default=0.0)
    p.add_argument("--noise-amp", type=float, default=0.0)

    p = sub.add_parser("estimate", help="run the pipeline on a session")
    _add_common(p)
    p.add_argument("--session", required=True)
    p.add_argument("--channels", type=_parse_channels, default=(1,))

    p = sub.add_parser("hrv", help="HRV parameters from an IBI CSV")
    _add_common(p)
    p.add_argument("--ibis", default=None, help="IBI CSV file")
    p.add_argument("--session", default=None, help="session whose results to use")
    p.add_argument("--feature", choices=sorted(FEATURE_ALIASES), default="fused")

    p = sub.add_parser("evaluate", help="run the pipeline over a dataset directory")
    _add_common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--channels", type=_parse_channels, default=(1,))
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--feature", choices=sorted(FEATURE_ALIASES), default="fused")
    p.add_argument("--group-by", choices=["subject"], default="subject")

    p = sub.add_parser("report", help="summary table from metric rows")
    _add_common(p)
    p.add_argument("--metrics", required=True, help="metrics CSV from `evaluate`")
    p.add_argument("--feature", choices=sorted(FEATURE_ALIASES), default="fused")
    p.add_argument("--group-by", choices=["subject"], default="subject")

    return parser


def _cmd_synth(args, cfg) -> int:
    out = Path(args.out or "synth_session")
    synth_cfg = SynthConfig(
        duration_s=args.duration,
        hr_profile=((0.0, args.hr), (args.duration, args.hr)),
        ibi_jitter_ms=args.jitter_ms,
        artifacts=ArtifactSpec(
            spike_rate_per_min=args.spike_rate,
            spike_amp_rel=args.spike_amp,
            wander_amp_rel=args.wander_amp,
            noise_amp_rel=args.noise_amp,
        ),
        seed=args.seed,
    )
    record = generate(synth_cfg, n_channels=len(args.channels))
    write_session(out, record)
    print(f"wrote synthetic session to {out}")
    return 0


def _cmd_estimate(args, cfg) -> int:
    session = ingest(args.session)
    out = run_pipeline(session, cfg, out_dir=args.out, channels=args.channels)
    print(f"wrote pipeline artifacts to {out}")
    return 0


def _cmd_hrv(args, cfg) -> int:
    if args.ibis:
        path = Path(args.ibis)
    elif args.session:
        path = Path(args.session) / "results" / f"ibis_{args.feature}.csv"
    else:
        print("hrv: need --ibis or --session", file=sys.stderr)
        return 2
    seq = read_ibis_csv(path)
    report = hrv_report(
        seq, mean_hr_mode=cfg.mean_hr_mode,
        tachogram_rate_hz=cfg.tachogram_rate_hz, ar_order=cfg.ar_order,
    )
    text = json.dumps(report.as_dict(), indent=2, sort_keys=True)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "hrv.json").write_text(text + "\n")
    print(text)
    return 0


def _session_dirs(dataset: Path) -> list:
    dirs = sorted(p.parent for p in dataset.glob("*/manifest.json"))
    if not dirs:
        raise PulsegraphError(f"no sessions (manifest.json) found under {dataset}")
    return dirs


def _cmd_evaluate(args, cfg) -> int:
    dataset = Path(args.dataset)
    out = Path(args.out or dataset / "evaluation")
    out.mkdir(parents=True, exist_ok=True)
    sessions = _session_dirs(dataset)

    def run_one(path: Path) -> list:
        session = ingest(path)
        result_dir = run_pipeline(
            session, cfg, out_dir=path / "results", channels=args.channels
        )
        rows = json.loads((result_dir / "metrics.json").read_text())["rows"]
        return rows

    all_rows = []
    if args.jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=args.jobs) as pool:
            for rows in pool.map(run_one, sessions):
                all_rows.extend(rows)
    else:
        for path in sessions:
            all_rows.extend(run_one(path))

    metrics_path = out / "metrics.csv"
    with open(metrics_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subject", "channelset", "feature", "corr", "mape_pct", "coverage"])
        for row in sorted(
            all_rows, key=lambda r: (str(r["subject"]), r["channelset"], r["feature"])
        ):
            writer.writerow(
                [
                    row["subject"],
                    row["channelset"],
                    row["feature"],
                    "" if row.get("corr") is None else repr(row["corr"]),
                    "" if row.get("mape_pct") is None else repr(row["mape_pct"]),
                    repr(row.get("coverage", 0.0)),
                ]
            )
    print(f"wrote {metrics_path} ({len(all_rows)} rows)")
    _write_report(metrics_path, out / "report.csv", args.feature)
    return 0


def _write_report(metrics_path: Path, out_path: Path, feature: str) -> None:
    rows = []
    with open(metrics_path, newline="") as fh:
        for row in csv.DictReader(fh):
            if row["feature"] != feature or not row["corr"]:
                continue
            rows.append((row["subject"], float(row["corr"]), float(row["mape_pct"])))
    if not rows:
        print(f"no rows for feature {feature!r}; report skipped", file=sys.stderr)
        return
    table = subject_report(rows)
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subject", "corr", "mape_pct"])
        for subject, corr, mape in table:
            writer.writerow([subject, repr(corr), repr(mape)])
    width = max(len(r[0]) for r in table)
    for subject, corr, mape in table:
        print(f"{subject:<{width}}  {corr:6.3f} | {mape:5.2f} %")
    print(f"wrote {out_path}")


def _cmd_report(args, cfg) -> int:
    metrics_path = Path(args.metrics)
    out = Path(args.out or metrics_path.parent)
    out.mkdir(parents=True, exist_ok=True)
    _write_report(metrics_path, out / "report.csv", args.feature)
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "estimate": _cmd_estimate,
    "hrv": _cmd_hrv,
    "evaluate": _cmd_evaluate,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return _COMMANDS[args.command](args, cfg)
    except PulsegraphError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
