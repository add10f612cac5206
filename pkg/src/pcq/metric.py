"""Per-cell quality metric: spatial autocorrelation of range, intensity weighting.

The score of a set of returns is Moran's I computed over their range values,
with neighbour weights derived from angular separation. Coherent surfaces
(neighbouring beams reporting similar ranges) score near +1; interference
(ranges scattered independently of direction) scores near 0 or below.

A low mean intensity inflates the final cell score magnitude through an
exponential multiplier, because real low-reflectivity returns and noise
returns are hard to tell apart by geometry alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import inv_angular_quadform
from .errors import EmptySetError, NonFiniteInputError

__all__ = [
    "UNIFORM",
    "INV_ANGULAR",
    "PolarPoint",
    "PointSet",
    "WeightScheme",
    "IntensityParams",
    "CellScore",
    "pairwise_weight",
    "spatial_autocorrelation",
    "intensity_multiplier",
    "weighted_cell_score",
    "range_variance",
]

UNIFORM = "uniform"
INV_ANGULAR = "inv-angular"


def _wrap_azimuth(az):
    """Map azimuth degrees onto [0, 360). Exact for values already in range."""
    return np.mod(az, 360.0)


@dataclass(frozen=True)
class PolarPoint:
    """One LiDAR return in sensor-centric polar coordinates.

    Attributes
    ----------
    range_m : float
        Distance to the return in metres, >= 0. A range of exactly 0 is the
        no-return sentinel used by the storage formats.
    azimuth_deg : float
        Horizontal angle in degrees, wrapped onto [0, 360).
    elevation_deg : float
        Vertical angle in degrees.
    intensity : float
        Normalized reflectance in [0, 1].
    """

    range_m: float
    azimuth_deg: float
    elevation_deg: float
    intensity: float

    def __post_init__(self):
        if not all(
            math.isfinite(v)
            for v in (self.range_m, self.azimuth_deg, self.elevation_deg, self.intensity)
        ):
            raise NonFiniteInputError("point fields must be finite")
        if self.range_m < 0:
            raise ValueError(f"range must be >= 0, got {self.range_m}")
        if not 0.0 <= self.intensity <= 1.0:
            raise ValueError(f"intensity must be in [0, 1], got {self.intensity}")
        object.__setattr__(self, "azimuth_deg", float(np.mod(self.azimuth_deg, 360.0)))


class PointSet:
    """A column-oriented bundle of returns.

    Stores range, azimuth, elevation and normalized intensity as parallel
    float64 arrays. Azimuths are wrapped onto [0, 360) on construction;
    intensities are validated against [0, 1].
    """

    __slots__ = ("range_m", "azimuth_deg", "elevation_deg", "intensity")

    def __init__(self, range_m, azimuth_deg, elevation_deg, intensity):
        r = np.asarray(range_m, dtype=np.float64).ravel()
        az = np.asarray(azimuth_deg, dtype=np.float64).ravel()
        el = np.asarray(elevation_deg, dtype=np.float64).ravel()
        it = np.asarray(intensity, dtype=np.float64).ravel()
        if not (r.size == az.size == el.size == it.size):
            raise ValueError("range, azimuth, elevation, intensity must have equal length")
        if it.size and (np.nanmin(it) < 0.0 or np.nanmax(it) > 1.0):
            raise ValueError("intensity values must lie in [0, 1]")
        self.range_m = r
        self.azimuth_deg = _wrap_azimuth(az)
        self.elevation_deg = el
        self.intensity = it

    @classmethod
    def empty(cls) -> "PointSet":
        z = np.empty(0, dtype=np.float64)
        return cls(z, z, z, z)

    @classmethod
    def from_points(cls, points) -> "PointSet":
        """Build from an iterable of PolarPoint."""
        pts = list(points)
        return cls(
            [p.range_m for p in pts],
            [p.azimuth_deg for p in pts],
            [p.elevation_deg for p in pts],
            [p.intensity for p in pts],
        )

    def __len__(self) -> int:
        return int(self.range_m.size)

    def point(self, i: int) -> PolarPoint:
        return PolarPoint(
            float(self.range_m[i]),
            float(self.azimuth_deg[i]),
            float(self.elevation_deg[i]),
            float(self.intensity[i]),
        )

    def subset(self, index) -> "PointSet":
        """Return a new PointSet holding the rows selected by ``index``."""
        out = PointSet.__new__(PointSet)
        out.range_m = self.range_m[index]
        out.azimuth_deg = self.azimuth_deg[index]
        out.elevation_deg = self.elevation_deg[index]
        out.intensity = self.intensity[index]
        return out

    def valid(self) -> "PointSet":
        """Drop range-0 sentinel rows."""
        return self.subset(self.range_m > 0.0)

    def n_valid(self) -> int:
        return int(np.count_nonzero(self.range_m > 0.0))


@dataclass(frozen=True)
class WeightScheme:
    """Neighbour weighting rule for the autocorrelation statistic.

    ``uniform`` gives every distinct pair weight 1. ``inv-angular`` weights a
    pair by the inverse square of its angular distance in degrees (azimuth
    difference wrapped onto (-180, 180], elevation difference taken as-is),
    with the distance floored at ``min_angular_separation`` so coincident
    beams cannot produce unbounded weights.
    """

    variant: str = INV_ANGULAR
    min_angular_separation: float = 0.05

    def __post_init__(self):
        if self.variant not in (UNIFORM, INV_ANGULAR):
            raise ValueError(f"unknown weight scheme {self.variant!r}")
        if not (self.min_angular_separation > 0 and math.isfinite(self.min_angular_separation)):
            raise ValueError("min_angular_separation must be positive and finite")

    @classmethod
    def uniform(cls) -> "WeightScheme":
        return cls(variant=UNIFORM)

    @classmethod
    def inverse_angular(cls, min_angular_separation: float = 0.05) -> "WeightScheme":
        return cls(variant=INV_ANGULAR, min_angular_separation=min_angular_separation)


@dataclass(frozen=True)
class IntensityParams:
    """Parameters of the low-intensity weighting multiplier.

    ``gamma_ref`` is the reference mean intensity below which the multiplier
    starts to grow; ``k`` sets its strength. Both operate on normalized
    intensities in [0, 1].
    """

    gamma_ref: float = 0.15
    k: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.gamma_ref <= 1.0):
            raise ValueError("gamma_ref must be in (0, 1]")
        if not (self.k > 0 and math.isfinite(self.k)):
            raise ValueError("k must be positive and finite")


@dataclass(frozen=True)
class CellScore:
    """Metric outputs for one grid cell."""

    autocorrelation: float
    multiplier: float
    n_points: int
    product: float


def pairwise_weight(a: PolarPoint, b: PolarPoint, scheme: WeightScheme) -> float:
    """Weight of the (a, b) pair under ``scheme``.

    Uniform: 1.0 for any pair. Inverse-angular: d^-2 where d is the Euclidean
    angular distance in degrees, azimuth wrapped onto (-180, 180], floored at
    the scheme's minimum separation.
    """
    if scheme.variant == UNIFORM:
        return 1.0
    dth = abs(a.azimuth_deg - b.azimuth_deg)
    if dth > 180.0:
        dth = 360.0 - dth
    dph = a.elevation_deg - b.elevation_deg
    d = math.hypot(dth, dph)
    d = max(d, scheme.min_angular_separation)
    return 1.0 / (d * d)


def spatial_autocorrelation(points: PointSet, scheme: WeightScheme = WeightScheme()) -> float:
    """Moran's I of the range values under the given weight scheme.

    Returns -1.0 for a single point (the degenerate case is pinned to the
    most-anticorrelated value) and +1.0 when every range is identical
    (perfectly coherent, even though the ratio is 0/0).

    Raises
    ------
    EmptySetError
        If ``points`` is empty.
    NonFiniteInputError
        If any coordinate or range is NaN or infinite.
    """
    n = len(points)
    if n == 0:
        raise EmptySetError("spatial autocorrelation needs at least one point")
    r = points.range_m
    if not (
        np.isfinite(r).all()
        and np.isfinite(points.azimuth_deg).all()
        and np.isfinite(points.elevation_deg).all()
    ):
        raise NonFiniteInputError("ranges and angles must be finite")
    if n == 1:
        return -1.0
    if bool(np.all(r == r[0])):
        return 1.0
    dr = r - r.mean()
    den = float(np.sum(dr * dr))
    if den == 0.0:
        return 1.0
    if scheme.variant == UNIFORM:
        # sum_{i != j} dr_i dr_j collapses to (sum dr)^2 - sum dr^2
        s = float(dr.sum())
        num = s * s - den
        wsum = float(n) * float(n - 1)
    else:
        num, wsum = inv_angular_quadform(
            points.azimuth_deg, points.elevation_deg, dr, scheme.min_angular_separation
        )
    return (n / wsum) * (num / den)


def intensity_multiplier(points: PointSet, params: IntensityParams = IntensityParams()) -> float:
    """exp(k * max(0, gamma_ref - mean_intensity) / gamma_ref).

    Equals 1.0 whenever the mean intensity reaches ``gamma_ref`` and grows to
    e^k as the mean intensity falls to 0.
    """
    if len(points) == 0:
        raise EmptySetError("intensity multiplier needs at least one point")
    gbar = float(points.intensity.mean())
    deficit = max(0.0, params.gamma_ref - gbar)
    return math.exp(params.k * deficit / params.gamma_ref)


def weighted_cell_score(
    points: PointSet,
    scheme: WeightScheme = WeightScheme(),
    params: IntensityParams = IntensityParams(),
) -> CellScore:
    """Autocorrelation, multiplier and their product for one cell."""
    i_val = spatial_autocorrelation(points, scheme)
    mult = intensity_multiplier(points, params)
    return CellScore(
        autocorrelation=i_val,
        multiplier=mult,
        n_points=len(points),
        product=mult * i_val,
    )


def range_variance(points: PointSet) -> float:
    """Population variance of the range values."""
    if len(points) == 0:
        raise EmptySetError("range variance needs at least one point")
    r = points.range_m
    dr = r - r.mean()
    return float(np.mean(dr * dr))
