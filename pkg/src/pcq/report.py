"""Score series CSV, labels, threshold sweeps and CDFs.

A frame is flagged when its score falls below a threshold. Given a labeled
dataset (positive = interference truly present), a threshold sweep reports,
per threshold, the fraction of positive frames caught (scoring below) and
the fraction of negative frames passing (scoring at or above). Score CDFs
per label class feed the same judgement visually.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import ParseError, PcqError

__all__ = [
    "ScoreRow",
    "SCORE_HEADER",
    "LABELS_HEADER",
    "ThresholdRow",
    "ThresholdReport",
    "write_score_csv",
    "read_score_csv",
    "read_labels_csv",
    "default_thresholds",
    "build_threshold_report",
    "write_threshold_csv",
    "score_cdf",
    "write_cdf_csv",
]

SCORE_HEADER = "frame_id,timestamp_us,score,unweighted_score,mean_range_variance"
LABELS_HEADER = "frame_id,label"

_TRUE_LABELS = {"positive", "1", "true"}
_FALSE_LABELS = {"negative", "0", "false"}


@dataclass(frozen=True)
class ScoreRow:
    """One scored frame in a score series."""

    frame_id: int
    timestamp_us: int
    score: float
    unweighted_score: float
    mean_range_variance: float


def write_score_csv(rows: Iterable[ScoreRow]) -> str:
    """Serialize a score series. repr floats keep the output byte-deterministic."""
    lines = [SCORE_HEADER]
    for row in rows:
        lines.append(
            f"{row.frame_id},{row.timestamp_us},{row.score!r},"
            f"{row.unweighted_score!r},{row.mean_range_variance!r}"
        )
    return "\n".join(lines) + "\n"


def read_score_csv(text: str) -> list[ScoreRow]:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0] != SCORE_HEADER:
        raise ParseError(f"expected header {SCORE_HEADER!r}")
    rows = []
    for line_no, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 5:
            raise ParseError(f"expected 5 fields, got {len(parts)}", line_no)
        try:
            rows.append(
                ScoreRow(
                    frame_id=int(parts[0]),
                    timestamp_us=int(parts[1]),
                    score=float(parts[2]),
                    unweighted_score=float(parts[3]),
                    mean_range_variance=float(parts[4]),
                )
            )
        except ValueError:
            raise ParseError(f"non-numeric field in {line!r}", line_no) from None
    return rows


def read_labels_csv(text: str) -> dict[int, bool]:
    """Parse a labels file: header ``frame_id,label``, labels positive/negative."""
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0] != LABELS_HEADER:
        raise ParseError(f"expected header {LABELS_HEADER!r}")
    labels: dict[int, bool] = {}
    for line_no, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(f"expected 2 fields, got {len(parts)}", line_no)
        try:
            fid = int(parts[0])
        except ValueError:
            raise ParseError(f"bad frame_id {parts[0]!r}", line_no) from None
        value = parts[1].strip().lower()
        if value in _TRUE_LABELS:
            labels[fid] = True
        elif value in _FALSE_LABELS:
            labels[fid] = False
        else:
            raise ParseError(f"bad label {parts[1]!r} (use positive/negative)", line_no)
    return labels


@dataclass(frozen=True)
class ThresholdRow:
    """Detector behaviour at one threshold.

    ``kept_fraction``: share of labeled-positive frames scoring below the
    threshold (caught). ``filtered_fraction``: share of labeled-negative
    frames scoring at or above it (passing).
    """

    threshold: float
    kept_fraction: float
    filtered_fraction: float


@dataclass(frozen=True)
class ThresholdReport:
    rows: tuple[ThresholdRow, ...]
    n_positive: int
    n_negative: int


def default_thresholds() -> list[float]:
    """-2.0 to 1.0 in steps of 0.1."""
    return [i / 10 for i in range(-20, 11)]


def build_threshold_report(
    scores: Sequence[ScoreRow],
    labels: Mapping[int, bool],
    thresholds: Sequence[float] | None = None,
) -> ThresholdReport:
    """Sweep thresholds over a labeled score series.

    Every scored frame must be labeled; labels for frames absent from the
    series (for example skipped by cadence) are ignored. Fractions over an
    empty class are reported as 0.0.
    """
    if thresholds is None:
        thresholds = default_thresholds()
    thresholds = [float(t) for t in thresholds]
    if any(not math.isfinite(t) for t in thresholds):
        raise ValueError("thresholds must be finite")
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be strictly ascending")

    unlabeled = [row.frame_id for row in scores if row.frame_id not in labels]
    if unlabeled:
        shown = ", ".join(str(fid) for fid in unlabeled[:10])
        more = f" (+{len(unlabeled) - 10} more)" if len(unlabeled) > 10 else ""
        raise PcqError(f"unlabeled frame id(s): {shown}{more}")

    positive = sorted(row.score for row in scores if labels[row.frame_id])
    negative = sorted(row.score for row in scores if not labels[row.frame_id])

    rows = []
    for th in thresholds:
        # single-division quotients; 1 - below/n would round twice
        kept = _count_below(positive, th) / len(positive) if positive else 0.0
        filtered = (
            (len(negative) - _count_below(negative, th)) / len(negative) if negative else 0.0
        )
        rows.append(ThresholdRow(threshold=th, kept_fraction=kept, filtered_fraction=filtered))
    return ThresholdReport(rows=tuple(rows), n_positive=len(positive), n_negative=len(negative))


def _count_below(sorted_scores: list[float], threshold: float) -> int:
    # count of scores strictly below the threshold
    lo, hi = 0, len(sorted_scores)
    while lo < hi:
        mid = (lo + hi) // 2
        if sorted_scores[mid] < threshold:
            lo = mid + 1
        else:
            hi = mid
    return lo


def write_threshold_csv(report: ThresholdReport) -> str:
    lines = ["threshold,kept_fraction,filtered_fraction"]
    for row in report.rows:
        lines.append(f"{row.threshold!r},{row.kept_fraction!r},{row.filtered_fraction!r}")
    return "\n".join(lines) + "\n"


def score_cdf(scores: Sequence[float]) -> list[tuple[float, float]]:
    """Empirical CDF points (score, cumulative fraction), fraction ending at 1.0."""
    ordered = sorted(scores)
    n = len(ordered)
    return [(s, (k + 1) / n) for k, s in enumerate(ordered)]


def write_cdf_csv(series: Mapping[str, Sequence[float]]) -> str:
    """Long-format CDF CSV: one block of rows per label class."""
    lines = ["label,score,cdf"]
    for label in sorted(series):
        for score, frac in score_cdf(series[label]):
            lines.append(f"{label},{score!r},{frac!r}")
    return "\n".join(lines) + "\n"
