"""Per-cell execution engine.

Cells are independent, so a frame's non-empty cells are fanned out to a host
thread pool in fixed-size chunks. The compiled metric kernel releases the
GIL, which is what makes threads (rather than processes) worth having here.
Results are assembled into the V x H matrix by cell index, and the callers
reduce that matrix in a fixed row-major order, so the outcome is bit-identical
for any worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Iterator

__all__ = ["ExecPolicy", "StreamError", "map_cells", "score_stream", "WORKERS_ENV_VAR"]

# consulted by the CLI when no explicit worker count is given
WORKERS_ENV_VAR = "PCQ_WORKERS"


@dataclass(frozen=True)
class ExecPolicy:
    """How per-cell work is distributed.

    ``workers`` of None means one worker per available CPU. ``chunk_size``
    is the number of cells handed to a worker at a time; larger chunks cut
    scheduling overhead, smaller ones balance uneven cells.
    """

    workers: int | None = None
    chunk_size: int = 4

    def __post_init__(self):
        if self.workers is not None and self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")

    def resolved_workers(self) -> int:
        if self.workers is not None:
            return self.workers
        return os.cpu_count() or 1


@dataclass(frozen=True)
class StreamError:
    """In-stream marker for a frame that failed to score."""

    frame_id: int
    stream_index: int
    error: Exception


def map_cells(grid, cell_fn: Callable[[Any], Any], policy: ExecPolicy | None = None):
    """Apply ``cell_fn`` to every non-empty cell of ``grid``.

    Returns a V x H row-major list of lists with None in empty cells. If any
    cells raise, the error from the lowest flat cell index is re-raised, so
    failure behaviour does not depend on scheduling.
    """
    if policy is None:
        policy = ExecPolicy()
    v, h = grid.config.v, grid.config.h
    out: list[list[Any]] = [[None] * h for _ in range(v)]
    tasks = list(grid.nonempty_cells())
    if not tasks:
        return out

    workers = policy.resolved_workers()
    failures: list[tuple[int, Exception]] = []

    if workers == 1 or len(tasks) == 1:
        for (i, j), cell_points in tasks:
            try:
                out[i][j] = cell_fn(cell_points)
            except Exception as exc:
                failures.append((i * h + j, exc))
    else:
        def run_chunk(chunk):
            results = []
            for (i, j), cell_points in chunk:
                try:
                    results.append((i, j, cell_fn(cell_points), None))
                except Exception as exc:
                    results.append((i, j, None, exc))
            return results

        chunks = [tasks[k:k + policy.chunk_size] for k in range(0, len(tasks), policy.chunk_size)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for results in pool.map(run_chunk, chunks):
                for i, j, value, exc in results:
                    if exc is not None:
                        failures.append((i * h + j, exc))
                    else:
                        out[i][j] = value

    if failures:
        failures.sort(key=lambda f: f[0])
        raise failures[0][1]
    return out


def score_stream(
    frames: Iterable,
    profile,
    config=None,
    scheme=None,
    params=None,
    policy: ExecPolicy | None = None,
    cadence: int = 1,
) -> Iterator:
    """Score an iterable of FrameRecords, yielding FrameScore items in order.

    ``cadence`` of c scores every c-th frame (counting from the first) and
    skips the rest, matching a deployment that samples the stream instead of
    scoring every frame. A frame whose scoring raises yields a StreamError
    item in its place; later frames are unaffected.
    """
    from .grid import frame_score, project_frame
    from .metric import WeightScheme

    if cadence < 1:
        raise ValueError("cadence must be >= 1")
    if scheme is None:
        scheme = WeightScheme()

    for index, frame in enumerate(frames):
        if index % cadence:
            continue
        try:
            grid = project_frame(frame, profile, config)
            yield frame_score(grid, scheme, params, policy)
        except Exception as exc:
            yield StreamError(
                frame_id=int(getattr(frame, "frame_id", index)),
                stream_index=index,
                error=exc,
            )
