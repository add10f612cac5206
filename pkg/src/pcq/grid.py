"""Angular gridding of frames and the frame-level quality score.

A frame's returns are binned into a V x H grid of equal-angle cells covering
the sensor's field of view (rows over elevation, columns over azimuth). Each
non-empty cell is scored independently; the frame score is the mean cell
product over all V*H cells, empty cells counting as zero.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySetError
from .metric import (
    CellScore,
    IntensityParams,
    PointSet,
    WeightScheme,
    range_variance,
    spatial_autocorrelation,
    weighted_cell_score,
)
from .parallel import ExecPolicy, map_cells

__all__ = [
    "SensorProfile",
    "GridConfig",
    "FrameGrid",
    "FrameScore",
    "BUILTIN_PROFILES",
    "default_grid",
    "project_frame",
    "frame_score",
    "unweighted_frame_score",
    "mean_range_variance",
]


@dataclass(frozen=True)
class SensorProfile:
    """Static description of a LiDAR unit.

    ``az_fov`` and ``el_fov`` are (min, max) in degrees. For a surrounding
    sensor the azimuth span is exactly 360. ``rows`` and ``cols`` give the
    native m x n array layout used by the binary frame format, and
    ``gamma_ref`` is the sensor's reference mean intensity for the
    low-intensity multiplier.
    """

    name: str
    az_fov: tuple[float, float]
    el_fov: tuple[float, float]
    rows: int
    cols: int
    gamma_ref: float = 0.15

    def __post_init__(self):
        az_span = self.az_fov[1] - self.az_fov[0]
        el_span = self.el_fov[1] - self.el_fov[0]
        if not (0.0 < az_span <= 360.0):
            raise ValueError("azimuth span must be in (0, 360]")
        if not el_span > 0.0:
            raise ValueError("elevation span must be positive")
        if self.rows < 1 or self.cols < 1:
            raise ValueError("rows and cols must be >= 1")

    @property
    def az_span(self) -> float:
        return self.az_fov[1] - self.az_fov[0]

    @property
    def el_span(self) -> float:
        return self.el_fov[1] - self.el_fov[0]

    @property
    def full_circle(self) -> bool:
        return self.az_span == 360.0


BUILTIN_PROFILES: dict[str, SensorProfile] = {
    # surrounding unit: 360 x 40 degree FOV
    "lidar1": SensorProfile(
        name="lidar1",
        az_fov=(0.0, 360.0),
        el_fov=(-20.0, 20.0),
        rows=64,
        cols=1024,
        gamma_ref=0.15,
    ),
    # forward unit: 120 x 25 degree FOV
    "lidar2": SensorProfile(
        name="lidar2",
        az_fov=(-60.0, 60.0),
        el_fov=(-12.5, 12.5),
        rows=128,
        cols=512,
        gamma_ref=0.15,
    ),
}


@dataclass(frozen=True)
class GridConfig:
    """Grid dimensions: ``v`` elevation rows by ``h`` azimuth columns."""

    v: int = 8
    h: int = 16

    def __post_init__(self):
        if self.v < 1 or self.h < 1:
            raise ValueError("grid dimensions must be >= 1")

    @property
    def n_cells(self) -> int:
        return self.v * self.h


def default_grid(profile: SensorProfile) -> GridConfig:
    """8 x 32 for surrounding sensors, 8 x 16 for forward sensors."""
    return GridConfig(8, 32) if profile.full_circle else GridConfig(8, 16)


class FrameGrid:
    """A frame's valid returns grouped by grid cell.

    Points are stored once, sorted by flat cell index, with per-cell offsets,
    so ``cell(i, j)`` returns array views without copying.
    """

    def __init__(self, profile, config, points, cell_index, dropped_invalid,
                 frame_id=0, timestamp_us=0):
        order = np.argsort(cell_index, kind="stable")
        self.profile = profile
        self.config = config
        self.frame_id = int(frame_id)
        self.timestamp_us = int(timestamp_us)
        self.dropped_invalid = int(dropped_invalid)
        self._points = points.subset(order)
        counts = np.bincount(cell_index, minlength=config.n_cells)
        self._starts = np.concatenate(([0], np.cumsum(counts)))
        self.counts = counts.reshape(config.v, config.h)

    @property
    def n_points(self) -> int:
        return len(self._points)

    def cell(self, i: int, j: int) -> PointSet:
        """Points binned into row ``i``, column ``j`` (may be empty)."""
        if not (0 <= i < self.config.v and 0 <= j < self.config.h):
            raise IndexError(f"cell ({i}, {j}) outside {self.config.v} x {self.config.h} grid")
        flat = i * self.config.h + j
        return self._points.subset(slice(self._starts[flat], self._starts[flat + 1]))

    def nonempty_cells(self):
        """Yield ``((i, j), PointSet)`` for non-empty cells in row-major order."""
        v, h = self.config.v, self.config.h
        for i in range(v):
            for j in range(h):
                flat = i * h + j
                lo, hi = self._starts[flat], self._starts[flat + 1]
                if hi > lo:
                    yield (i, j), self._points.subset(slice(lo, hi))


def project_frame(frame, profile: SensorProfile, config: GridConfig | None = None) -> FrameGrid:
    """Bin a frame's returns into the angular grid.

    ``frame`` is a FrameRecord or a bare PointSet. Rows with range == 0 are
    no-return sentinels: they are counted in ``dropped_invalid`` and excluded.
    Cells are half-open in both axes except the last cell along each axis,
    which is closed so the FOV edge itself is covered. Points outside the FOV
    are clamped into the nearest edge cell (azimuth distance measured around
    the circle).
    """
    points = getattr(frame, "points", frame)
    frame_id = getattr(frame, "frame_id", 0)
    timestamp_us = getattr(frame, "timestamp_us", 0)
    if config is None:
        config = default_grid(profile)

    valid_mask = points.range_m > 0.0
    dropped = int(points.range_m.size - np.count_nonzero(valid_mask))
    pts = points.subset(valid_mask)

    v, h = config.v, config.h
    az_min = profile.az_fov[0]
    az_span = profile.az_span
    offset = np.mod(pts.azimuth_deg - az_min, 360.0)
    col = np.floor(offset * (h / az_span)).astype(np.int64)
    if profile.full_circle:
        np.clip(col, 0, h - 1, out=col)
    else:
        inside = offset < az_span
        np.clip(col, 0, h - 1, out=col)
        # outside points go to whichever azimuth edge is circularly nearer
        d_high = offset - az_span
        d_low = 360.0 - offset
        col = np.where(inside, col, np.where(d_high < d_low, h - 1, 0))

    el_min = profile.el_fov[0]
    row = np.floor((pts.elevation_deg - el_min) * (v / profile.el_span)).astype(np.int64)
    np.clip(row, 0, v - 1, out=row)

    cell_index = row * h + col
    return FrameGrid(profile, config, pts, cell_index, dropped, frame_id, timestamp_us)


@dataclass(frozen=True)
class FrameScore:
    """Frame-level score and its per-cell breakdown.

    ``cells`` is a V x H row-major list of lists holding a CellScore per
    non-empty cell and None for empty cells. ``score`` is the mean cell
    product over all V*H cells; ``unweighted_score`` averages the bare
    autocorrelation values the same way.
    """

    score: float
    cells: list[list[CellScore | None]] = field(repr=False)
    frame_id: int = 0
    timestamp_us: int = 0
    compute_time_s: float = 0.0
    mean_range_variance: float = 0.0

    @property
    def unweighted_score(self) -> float:
        total = 0.0
        n_cells = 0
        for row in self.cells:
            for c in row:
                n_cells += 1
                if c is not None:
                    total += c.autocorrelation
        return total / n_cells


def _fixed_order_mean(cells, config, key):
    # summation order fixed row-major so results do not depend on worker count
    total = 0.0
    for i in range(config.v):
        for j in range(config.h):
            c = cells[i][j]
            if c is not None:
                total += key(c)
    return total / config.n_cells


def frame_score(
    grid: FrameGrid,
    scheme: WeightScheme = WeightScheme(),
    params: IntensityParams | None = None,
    policy: ExecPolicy | None = None,
) -> FrameScore:
    """Score a gridded frame.

    Every non-empty cell contributes its multiplier-weighted autocorrelation;
    empty cells contribute 0; the divisor is always V*H. ``params`` defaults
    to the profile's gamma_ref with k = 1.
    """
    if params is None:
        params = IntensityParams(gamma_ref=grid.profile.gamma_ref)
    t0 = time.perf_counter()
    cells = map_cells(grid, lambda ps: weighted_cell_score(ps, scheme, params), policy)
    s = _fixed_order_mean(cells, grid.config, lambda c: c.product)
    return FrameScore(
        score=s,
        cells=cells,
        frame_id=grid.frame_id,
        timestamp_us=grid.timestamp_us,
        compute_time_s=time.perf_counter() - t0,
        mean_range_variance=mean_range_variance(grid),
    )


def unweighted_frame_score(
    grid: FrameGrid,
    scheme: WeightScheme = WeightScheme(),
    policy: ExecPolicy | None = None,
) -> float:
    """Frame score with the intensity multiplier forced to 1 in every cell."""
    cells = map_cells(grid, lambda ps: spatial_autocorrelation(ps, scheme), policy)
    return _fixed_order_mean(cells, grid.config, lambda x: x)


def mean_range_variance(grid: FrameGrid) -> float:
    """Mean of the per-cell range variances over non-empty cells (0 if none)."""
    total = 0.0
    count = 0
    for _, cell_points in grid.nonempty_cells():
        total += range_variance(cell_points)
        count += 1
    return total / count if count else 0.0
