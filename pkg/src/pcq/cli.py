"""Command-line front end.

Subcommands: ``score`` a dataset folder to a score-series CSV, ``report``
threshold sweeps and CDFs from scores plus labels, ``grid-dump`` one frame's
per-cell metrics, ``generate`` a dataset from a scenario script.

Exit codes: 0 on success, 1 on usage errors, 2 on data errors.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
from dataclasses import replace
from pathlib import Path

from . import report as report_mod
from .errors import PcqError
from .grid import BUILTIN_PROFILES, GridConfig, default_grid, frame_score, project_frame
from .io import load_frame, scan_dataset
from .metric import INV_ANGULAR, UNIFORM, IntensityParams, WeightScheme
from .parallel import WORKERS_ENV_VAR, ExecPolicy, StreamError, score_stream
from .synth import generate_dataset, parse_scenario_script

__all__ = ["main"]

DEFAULT_FLAG_THRESHOLD = -0.4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage problems must exit 1, not argparse's default 2
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="pcq", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_metric_flags(p, with_profile=True):
        if with_profile:
            p.add_argument("--profile", choices=sorted(BUILTIN_PROFILES), default=None,
                           help="builtin sensor profile")
        p.add_argument("--grid", default=None, metavar="VxH",
                       help="grid dimensions, e.g. 8x16 (default from profile)")
        p.add_argument("--scheme", choices=[UNIFORM, INV_ANGULAR], default=INV_ANGULAR,
                       help="pair weight scheme")
        p.add_argument("--gamma-ref", type=float, default=None,
                       help="reference mean intensity (default from profile)")
        p.add_argument("--k", type=float, default=1.0, help="multiplier strength")

    p_score = sub.add_parser(
        "score",
        help="score every frame of a dataset folder",
        epilog="CSV columns: frame_id,timestamp_us,score,unweighted_score,mean_range_variance",
    )
    p_score.add_argument("dataset", help="dataset directory")
    add_metric_flags(p_score)
    p_score.add_argument("--cadence", type=int, default=1,
                         help="score every Nth frame (default 1)")
    p_score.add_argument("--workers", type=int, default=None,
                         help=f"worker threads (default: ${WORKERS_ENV_VAR} or cpu count)")
    p_score.add_argument("--out", default="-", help="output CSV path (default stdout)")
    p_score.set_defaults(func=_cmd_score)

    p_report = sub.add_parser(
        "report",
        help="threshold sweep and CDFs from scores + labels",
        epilog="CSV columns: threshold,kept_fraction,filtered_fraction (thresholds file); "
               "label,score,cdf (CDF file). kept_fraction counts positive frames scoring "
               "below the threshold, filtered_fraction negative frames at or above it.",
    )
    p_report.add_argument("scores", help="score series CSV (from 'score')")
    p_report.add_argument("labels", help="labels CSV: frame_id,label")
    p_report.add_argument("--thresholds", default=None,
                          help="comma list 'a,b,c' or range 'start:stop:step' "
                               "(default -2.0:1.0:0.1)")
    p_report.add_argument("--out-prefix", default="report",
                          help="writes PREFIX_thresholds.csv and PREFIX_cdf.csv")
    p_report.set_defaults(func=_cmd_report)

    p_dump = sub.add_parser(
        "grid-dump",
        help="per-cell metrics of one frame file",
        epilog="CSV columns: row,col,n_points,autocorrelation,multiplier,product,flagged. "
               "Empty cells have n_points=0 and blank metric fields.",
    )
    p_dump.add_argument("frame", help="frame file (.csv or .pcq)")
    add_metric_flags(p_dump)
    p_dump.add_argument("--flag-threshold", type=float, default=DEFAULT_FLAG_THRESHOLD,
                        help="flag cells with autocorrelation below this "
                             f"(default {DEFAULT_FLAG_THRESHOLD})")
    p_dump.add_argument("--workers", type=int, default=None,
                        help=f"worker threads (default: ${WORKERS_ENV_VAR} or cpu count)")
    p_dump.add_argument("--out", default="-", help="output CSV path (default stdout)")
    p_dump.set_defaults(func=_cmd_grid_dump)

    p_gen = sub.add_parser("generate", help="render a scenario script to a dataset folder")
    p_gen.add_argument("script", help="scenario script file")
    p_gen.add_argument("out_dir", help="output dataset directory")
    p_gen.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p_gen.add_argument("--format", choices=["pcq", "csv"], default="pcq",
                       help="frame file format (default pcq)")
    p_gen.set_defaults(func=_cmd_generate)

    return parser


def _parse_grid(text: str | None, profile) -> GridConfig:
    if text is None:
        return default_grid(profile)
    match = re.fullmatch(r"(\d+)x(\d+)", text)
    if not match:
        raise _UsageError(f"--grid expects VxH (e.g. 8x16), got {text!r}")
    try:
        return GridConfig(int(match.group(1)), int(match.group(2)))
    except ValueError as exc:
        raise _UsageError(str(exc)) from None


def _resolve_workers(flag_value) -> int | None:
    if flag_value is not None:
        if flag_value < 1:
            raise _UsageError("--workers must be >= 1")
        return flag_value
    env = os.environ.get(WORKERS_ENV_VAR)
    if env:
        try:
            value = int(env)
        except ValueError:
            raise _UsageError(f"${WORKERS_ENV_VAR} must be an integer, got {env!r}") from None
        if value < 1:
            raise _UsageError(f"${WORKERS_ENV_VAR} must be >= 1")
        return value
    return None


def _resolve_profile(name, fallback=None):
    if name is not None:
        return BUILTIN_PROFILES[name]
    if fallback is not None and fallback in BUILTIN_PROFILES:
        return BUILTIN_PROFILES[fallback]
    if fallback is not None:
        raise _UsageError(f"dataset manifest names unknown profile {fallback!r}; pass --profile")
    raise _UsageError("no profile given (use --profile)")


def _metric_config(args, profile):
    scheme = WeightScheme(variant=args.scheme)
    gamma_ref = args.gamma_ref if args.gamma_ref is not None else profile.gamma_ref
    try:
        params = IntensityParams(gamma_ref=gamma_ref, k=args.k)
    except ValueError as exc:
        raise _UsageError(str(exc)) from None
    return scheme, params


def _write_out(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


class _BrokenFrame:
    """Stand-in for a frame file that failed to load.

    Keeps the frame's slot in the stream (so cadence indexing is unaffected)
    and re-raises the load error when the scorer touches the points, which
    turns it into an in-stream StreamError instead of aborting the run.
    """

    def __init__(self, frame_id: int, error: Exception):
        self.frame_id = frame_id
        self.timestamp_us = 0
        self._error = error

    @property
    def points(self):
        raise self._error


def _iter_frames_tolerant(manifest):
    for fid, path in manifest.entries:
        try:
            fr = load_frame(path)
        except PcqError as exc:
            yield _BrokenFrame(fid, exc)
            continue
        ts = fr.timestamp_us or int(round(fid * 1_000_000 / manifest.rate_hz))
        yield replace(fr, frame_id=fid, timestamp_us=ts)


def _cmd_score(args) -> int:
    manifest = scan_dataset(args.dataset)
    profile = _resolve_profile(args.profile, manifest.profile_name)
    config = _parse_grid(args.grid, profile)
    scheme, params = _metric_config(args, profile)
    if args.cadence < 1:
        raise _UsageError("--cadence must be >= 1")
    policy = ExecPolicy(workers=_resolve_workers(args.workers))

    rows = []
    failures = []
    for item in score_stream(
        _iter_frames_tolerant(manifest), profile, config, scheme, params, policy,
        cadence=args.cadence,
    ):
        if isinstance(item, StreamError):
            failures.append(item)
        else:
            rows.append(
                report_mod.ScoreRow(
                    frame_id=item.frame_id,
                    timestamp_us=item.timestamp_us,
                    score=item.score,
                    unweighted_score=item.unweighted_score,
                    mean_range_variance=item.mean_range_variance,
                )
            )
    _write_out(report_mod.write_score_csv(rows), args.out)
    if failures:
        for failure in failures:
            print(
                f"pcq: frame {failure.frame_id} (index {failure.stream_index}) "
                f"failed: {failure.error}",
                file=sys.stderr,
            )
        return 2
    return 0


def _parse_thresholds(spec: str | None):
    if spec is None:
        return report_mod.default_thresholds()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise _UsageError(f"--thresholds range expects start:stop:step, got {spec!r}")
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError:
            raise _UsageError(f"bad --thresholds range {spec!r}") from None
        if step <= 0:
            raise _UsageError("--thresholds step must be positive")
        values = []
        i = 0
        while True:
            value = round(start + i * step, 10)
            if value > stop + step * 1e-9:
                break
            values.append(value)
            i += 1
        if not values:
            raise _UsageError(f"--thresholds range {spec!r} is empty (start > stop)")
        return values
    try:
        return [float(p) for p in spec.split(",")]
    except ValueError:
        raise _UsageError(f"bad --thresholds list {spec!r}") from None


def _cmd_report(args) -> int:
    scores = report_mod.read_score_csv(Path(args.scores).read_text())
    labels = report_mod.read_labels_csv(Path(args.labels).read_text())
    thresholds = _parse_thresholds(args.thresholds)
    try:
        sweep = report_mod.build_threshold_report(scores, labels, thresholds)
    except ValueError as exc:
        raise _UsageError(str(exc)) from None
    series = {
        "positive": [row.score for row in scores if labels[row.frame_id]],
        "negative": [row.score for row in scores if not labels[row.frame_id]],
    }
    series = {label: vals for label, vals in series.items() if vals}
    Path(f"{args.out_prefix}_thresholds.csv").write_text(report_mod.write_threshold_csv(sweep))
    Path(f"{args.out_prefix}_cdf.csv").write_text(report_mod.write_cdf_csv(series))
    print(
        f"pcq: {sweep.n_positive} positive / {sweep.n_negative} negative frames, "
        f"{len(sweep.rows)} thresholds -> {args.out_prefix}_thresholds.csv, "
        f"{args.out_prefix}_cdf.csv"
    )
    return 0


def _cmd_grid_dump(args) -> int:
    profile = _resolve_profile(args.profile, "lidar2")
    config = _parse_grid(args.grid, profile)
    scheme, params = _metric_config(args, profile)
    policy = ExecPolicy(workers=_resolve_workers(args.workers))
    frame = load_frame(args.frame)
    grid = project_frame(frame, profile, config)
    result = frame_score(grid, scheme, params, policy)

    lines = ["row,col,n_points,autocorrelation,multiplier,product,flagged"]
    for i in range(config.v):
        for j in range(config.h):
            cell = result.cells[i][j]
            if cell is None:
                lines.append(f"{i},{j},0,,,,")
            else:
                flagged = 1 if cell.autocorrelation < args.flag_threshold else 0
                lines.append(
                    f"{i},{j},{cell.n_points},{cell.autocorrelation!r},"
                    f"{cell.multiplier!r},{cell.product!r},{flagged}"
                )
    _write_out("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_generate(args) -> int:
    script = parse_scenario_script(Path(args.script).read_text())
    manifest = generate_dataset(script, args.out_dir, master_seed=args.seed, fmt=args.format)
    print(
        f"pcq: wrote {len(manifest)} frames ({script.profile.name}, "
        f"{script.rate_hz:g} Hz) to {manifest.directory}"
    )
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"pcq: error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"pcq: error: {exc}", file=sys.stderr)
        return 1
    except PcqError as exc:
        print(f"pcq: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"pcq: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
