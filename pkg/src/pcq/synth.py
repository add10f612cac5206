"""Synthetic frame and dataset generation.

Scenes are built from axis-aligned angular boxes: each box scatters returns
uniformly over its angular extent and puts them on a tilted planar surface
(base range plus linear ramps in azimuth and elevation) with Gaussian range
jitter. Noise variants reproduce the failure modes of interest: scattered
wideband interference, a compact low-intensity cluster, and attenuation.

All sampling uses counter-based Philox streams seeded explicitly, and every
generated field is rounded to float32, so a given seed reproduces an
identical frame on any platform and binary storage is lossless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError
from .grid import BUILTIN_PROFILES, SensorProfile
from .io import DatasetManifest, FrameRecord, save_frame, scan_dataset, write_manifest
from .metric import PointSet

__all__ = [
    "BoxSpec",
    "SceneSpec",
    "Scattered",
    "ClusteredLowIntensity",
    "Attenuation",
    "NoiseSpec",
    "Segment",
    "ScenarioScript",
    "SCENE_BUILDERS",
    "build_scene",
    "generate_scene",
    "inject_noise",
    "generate_dataset",
    "parse_scenario_script",
]


@dataclass(frozen=True)
class BoxSpec:
    """A planar surface patch covering an angular box.

    ``range_m`` is the range at the box centre. ``ramp_az`` and ``ramp_el``
    give the total range change in metres across the box along each axis
    (a tilted plane), and ``range_jitter`` the per-return Gaussian sigma.
    """

    az_span: tuple[float, float]
    el_span: tuple[float, float]
    range_m: float
    count: int
    ramp_az: float = 12.0
    ramp_el: float = 3.0
    range_jitter: float = 0.05
    intensity_mean: float = 0.35
    intensity_jitter: float = 0.05

    def __post_init__(self):
        if self.az_span[1] <= self.az_span[0] or self.el_span[1] <= self.el_span[0]:
            raise ValueError("box spans must have positive extent")
        if self.range_m <= 0:
            raise ValueError("box range must be positive")
        if self.count < 0:
            raise ValueError("box count must be >= 0")


@dataclass(frozen=True)
class SceneSpec:
    """A static scene: surface boxes plus optional uniform background returns."""

    profile: SensorProfile
    boxes: tuple[BoxSpec, ...] = ()
    background_count: int = 0
    background_range: tuple[float, float] = (2.0, 80.0)
    background_intensity: tuple[float, float] = (0.05, 0.6)

    def __post_init__(self):
        lo_az, hi_az = self.profile.az_fov
        lo_el, hi_el = self.profile.el_fov
        for box in self.boxes:
            if not (lo_az <= box.az_span[0] and box.az_span[1] <= hi_az):
                raise ValueError(f"box azimuth span {box.az_span} outside FOV {self.profile.az_fov}")
            if not (lo_el <= box.el_span[0] and box.el_span[1] <= hi_el):
                raise ValueError(f"box elevation span {box.el_span} outside FOV {self.profile.el_fov}")


@dataclass(frozen=True)
class Scattered:
    """Independent returns spread uniformly over the whole FOV."""

    count: int
    range_span: tuple[float, float] = (1.0, 60.0)
    intensity_span: tuple[float, float] = (0.0, 0.05)


@dataclass(frozen=True)
class ClusteredLowIntensity:
    """A compact angular blob of weak returns at a common range."""

    center_az: float
    center_el: float
    radius_deg: float
    range_m: float
    count: int
    intensity_cap: float = 0.02
    range_jitter: float = 0.05


@dataclass(frozen=True)
class Attenuation:
    """Random return loss with surviving intensities scaled down."""

    keep_fraction: float
    intensity_scale: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.keep_fraction <= 1.0:
            raise ValueError("keep_fraction must be in [0, 1]")
        if not 0.0 <= self.intensity_scale <= 1.0:
            raise ValueError("intensity_scale must be in [0, 1]")


NoiseVariant = Scattered | ClusteredLowIntensity | Attenuation


@dataclass(frozen=True)
class NoiseSpec:
    """A noise variant plus the seed of its private random stream."""

    variant: NoiseVariant
    seed: object = 0


def _rng(seed) -> np.random.Generator:
    # Philox is counter-based: the same seed gives the same stream everywhere
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def _quantize_f32(points: PointSet) -> PointSet:
    r = points.range_m.astype(np.float32).astype(np.float64)
    az = np.mod(points.azimuth_deg, 360.0).astype(np.float32)
    az[az >= 360.0] = 0.0  # float32 rounding can reach 360.0 exactly
    el = points.elevation_deg.astype(np.float32).astype(np.float64)
    it = points.intensity.astype(np.float32).astype(np.float64)
    return PointSet(r, az.astype(np.float64), el, it)


def _sample_box(box: BoxSpec, rng: np.random.Generator) -> PointSet:
    az = rng.uniform(box.az_span[0], box.az_span[1], box.count)
    el = rng.uniform(box.el_span[0], box.el_span[1], box.count)
    az_c = 0.5 * (box.az_span[0] + box.az_span[1])
    el_c = 0.5 * (box.el_span[0] + box.el_span[1])
    slope_az = box.ramp_az / (box.az_span[1] - box.az_span[0])
    slope_el = box.ramp_el / (box.el_span[1] - box.el_span[0])
    r = (
        box.range_m
        + slope_az * (az - az_c)
        + slope_el * (el - el_c)
        + box.range_jitter * rng.standard_normal(box.count)
    )
    np.maximum(r, 0.05, out=r)
    inten = box.intensity_mean + box.intensity_jitter * rng.standard_normal(box.count)
    np.clip(inten, 0.0, 1.0, out=inten)
    return PointSet(r, az, el, inten)


def generate_scene(spec: SceneSpec, seed, frame_id: int = 0, timestamp_us: int = 0) -> FrameRecord:
    """Render one frame of a scene. Identical (spec, seed) gives identical bytes."""
    rng = _rng(seed)
    parts = [_sample_box(box, rng) for box in spec.boxes]
    if spec.background_count:
        az = rng.uniform(spec.profile.az_fov[0], spec.profile.az_fov[1], spec.background_count)
        el = rng.uniform(spec.profile.el_fov[0], spec.profile.el_fov[1], spec.background_count)
        r = rng.uniform(spec.background_range[0], spec.background_range[1], spec.background_count)
        inten = rng.uniform(
            spec.background_intensity[0], spec.background_intensity[1], spec.background_count
        )
        parts.append(PointSet(r, az, el, inten))
    if parts:
        points = PointSet(
            np.concatenate([p.range_m for p in parts]),
            np.concatenate([p.azimuth_deg for p in parts]),
            np.concatenate([p.elevation_deg for p in parts]),
            np.concatenate([p.intensity for p in parts]),
        )
    else:
        points = PointSet.empty()
    return FrameRecord(frame_id=frame_id, timestamp_us=timestamp_us, points=_quantize_f32(points))


def inject_noise(frame: FrameRecord, noise: NoiseSpec, profile: SensorProfile) -> FrameRecord:
    """Apply one noise variant to a frame.

    Scattered and clustered noise append points after the frame's own (order
    is part of the deterministic output); attenuation drops and dims existing
    points. The profile supplies the FOV that scattered noise covers.
    """
    rng = _rng(noise.seed)
    variant = noise.variant

    if isinstance(variant, Attenuation):
        pts = frame.points
        keep = rng.random(len(pts)) < variant.keep_fraction
        kept = pts.subset(keep)
        dimmed = PointSet(
            kept.range_m,
            kept.azimuth_deg,
            kept.elevation_deg,
            np.clip(kept.intensity * variant.intensity_scale, 0.0, 1.0),
        )
        return FrameRecord(frame.frame_id, frame.timestamp_us, _quantize_f32(dimmed))

    if isinstance(variant, Scattered):
        az = rng.uniform(profile.az_fov[0], profile.az_fov[1], variant.count)
        el = rng.uniform(profile.el_fov[0], profile.el_fov[1], variant.count)
        r = rng.uniform(variant.range_span[0], variant.range_span[1], variant.count)
        inten = np.clip(
            rng.uniform(variant.intensity_span[0], variant.intensity_span[1], variant.count),
            0.0,
            1.0,
        )
    elif isinstance(variant, ClusteredLowIntensity):
        rr = variant.radius_deg * np.sqrt(rng.random(variant.count))
        theta = rng.uniform(0.0, 2.0 * math.pi, variant.count)
        az = variant.center_az + rr * np.cos(theta)
        el = variant.center_el + rr * np.sin(theta)
        r = variant.range_m + variant.range_jitter * rng.standard_normal(variant.count)
        np.maximum(r, 0.05, out=r)
        inten = rng.uniform(0.0, variant.intensity_cap, variant.count)
    else:
        raise TypeError(f"unknown noise variant {type(variant).__name__}")

    extra = _quantize_f32(PointSet(r, az, el, inten))
    pts = frame.points
    merged = PointSet(
        np.concatenate([pts.range_m, extra.range_m]),
        np.concatenate([pts.azimuth_deg, extra.azimuth_deg]),
        np.concatenate([pts.elevation_deg, extra.elevation_deg]),
        np.concatenate([pts.intensity, extra.intensity]),
    )
    return FrameRecord(frame.frame_id, frame.timestamp_us, merged)


# --- builtin scenes -------------------------------------------------------

def _scene_empty(profile: SensorProfile, params: dict) -> SceneSpec:
    return SceneSpec(profile=profile)


def _scene_wall(profile: SensorProfile, params: dict) -> SceneSpec:
    count = int(params.get("points", 12000))
    box = BoxSpec(
        az_span=profile.az_fov,
        el_span=profile.el_fov,
        range_m=float(params.get("range", 20.0)),
        count=count,
        ramp_az=float(params.get("ramp_az", 12.0)),
        ramp_el=float(params.get("ramp_el", 3.0)),
        range_jitter=float(params.get("jitter", 0.05)),
        intensity_mean=float(params.get("intensity", 0.35)),
    )
    return SceneSpec(profile=profile, boxes=(box,))


def _scene_wall_sky(profile: SensorProfile, params: dict) -> SceneSpec:
    """A wall over the lower part of the FOV, empty sky above it."""
    fraction = float(params.get("fraction", 0.375))
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must be in (0, 1]")
    lo, hi = profile.el_fov
    box = BoxSpec(
        az_span=profile.az_fov,
        el_span=(lo, lo + fraction * (hi - lo)),
        range_m=float(params.get("range", 20.0)),
        count=int(params.get("points", 12000)),
        ramp_az=float(params.get("ramp_az", 12.0)),
        ramp_el=float(params.get("ramp_el", 1.5)),
        range_jitter=float(params.get("jitter", 0.05)),
        intensity_mean=float(params.get("intensity", 0.35)),
    )
    return SceneSpec(profile=profile, boxes=(box,))


SCENE_BUILDERS = {
    "empty": _scene_empty,
    "wall": _scene_wall,
    "wall_sky": _scene_wall_sky,
}


def build_scene(name: str, profile: SensorProfile, **params) -> SceneSpec:
    """Instantiate a builtin scene by name."""
    try:
        builder = SCENE_BUILDERS[name]
    except KeyError:
        raise ValueError(
            f"unknown scene {name!r} (have {', '.join(sorted(SCENE_BUILDERS))})"
        ) from None
    return builder(profile, params)


# --- scenario scripts -----------------------------------------------------

@dataclass(frozen=True)
class Segment:
    """A timed stretch of a scenario: one scene, optional noise on top."""

    duration_s: float
    scene: SceneSpec
    noise_variant: NoiseVariant | None = None
    seed: int = 0

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValueError("segment duration must be positive")


@dataclass(frozen=True)
class ScenarioScript:
    """A profile, a frame rate and a list of timed segments."""

    profile: SensorProfile
    rate_hz: float = 10.0
    segments: tuple[Segment, ...] = ()

    def __post_init__(self):
        if self.rate_hz <= 0:
            raise ValueError("rate must be positive")


_NOISE_KEYS = {
    "scattered": {"count", "range_low", "range_high", "intensity_low", "intensity_high"},
    "clustered": {"az", "el", "radius", "range", "count", "cap", "range_jitter"},
    "attenuation": {"keep", "intensity_scale"},
}


def _build_noise(name: str, params: dict, line_no: int) -> NoiseVariant:
    unknown = set(params) - _NOISE_KEYS.get(name, set())
    if unknown:
        raise ParseError(f"unknown noise parameter(s) {sorted(unknown)} for {name!r}", line_no)
    try:
        if name == "scattered":
            return Scattered(
                count=int(params["count"]),
                range_span=(params.get("range_low", 1.0), params.get("range_high", 60.0)),
                intensity_span=(
                    params.get("intensity_low", 0.0),
                    params.get("intensity_high", 0.05),
                ),
            )
        if name == "clustered":
            return ClusteredLowIntensity(
                center_az=params["az"],
                center_el=params["el"],
                radius_deg=params["radius"],
                range_m=params.get("range", 4.0),
                count=int(params["count"]),
                intensity_cap=params.get("cap", 0.02),
                range_jitter=params.get("range_jitter", 0.05),
            )
        if name == "attenuation":
            return Attenuation(
                keep_fraction=params["keep"],
                intensity_scale=params.get("intensity_scale", 0.5),
            )
    except KeyError as missing:
        raise ParseError(f"noise {name!r} needs parameter {missing.args[0]}", line_no) from None
    raise ParseError(f"unknown noise variant {name!r}", line_no)


def parse_scenario_script(text: str, profiles: dict[str, SensorProfile] | None = None) -> ScenarioScript:
    """Parse the scenario script text format.

    Lines are ``profile=NAME``, ``rate=HZ``, comments starting with ``#``, or
    ``segment`` lines of space-separated key=value pairs::

        profile=lidar2
        rate=10
        segment duration=10 scene=wall seed=101
        segment duration=10 scene=wall noise=scattered noise.count=5000 seed=102

    Scene parameters use the ``scene.`` prefix, noise parameters ``noise.``.
    """
    if profiles is None:
        profiles = BUILTIN_PROFILES
    profile: SensorProfile | None = None
    rate = 10.0
    segments: list[Segment] = []

    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("segment"):
            if profile is None:
                raise ParseError("profile must be set before the first segment", line_no)
            duration = None
            scene_name = None
            noise_name = None
            seed = len(segments)
            scene_params: dict[str, float] = {}
            noise_params: dict[str, float] = {}
            for token in line.split()[1:]:
                if "=" not in token:
                    raise ParseError(f"expected key=value, got {token!r}", line_no)
                key, _, value = token.partition("=")
                try:
                    if key == "duration":
                        duration = float(value)
                    elif key == "scene":
                        scene_name = value
                    elif key == "noise":
                        noise_name = value
                    elif key == "seed":
                        seed = int(value)
                    elif key.startswith("scene."):
                        scene_params[key[6:]] = float(value)
                    elif key.startswith("noise."):
                        noise_params[key[6:]] = float(value)
                    else:
                        raise ParseError(f"unknown segment key {key!r}", line_no)
                except ValueError:
                    raise ParseError(f"bad value {value!r} for {key!r}", line_no) from None
            if duration is None or scene_name is None:
                raise ParseError("segment needs duration= and scene=", line_no)
            try:
                scene = build_scene(scene_name, profile, **scene_params)
            except ValueError as exc:
                raise ParseError(str(exc), line_no) from None
            noise = None
            if noise_name and noise_name != "none":
                noise = _build_noise(noise_name, noise_params, line_no)
            elif noise_params:
                raise ParseError("noise parameters given without noise=", line_no)
            segments.append(Segment(duration, scene, noise, seed))
        elif "=" in line:
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key == "profile":
                if value not in profiles:
                    raise ParseError(
                        f"unknown profile {value!r} (have {', '.join(sorted(profiles))})", line_no
                    )
                profile = profiles[value]
            elif key == "rate":
                try:
                    rate = float(value)
                except ValueError:
                    raise ParseError(f"bad rate value {value!r}", line_no) from None
                if rate <= 0:
                    raise ParseError("rate must be positive", line_no)
            else:
                raise ParseError(f"unknown script key {key!r}", line_no)
        else:
            raise ParseError(f"cannot parse line {raw_line!r}", line_no)

    if profile is None:
        raise ParseError("script sets no profile")
    if not segments:
        raise ParseError("script has no segments")
    return ScenarioScript(profile=profile, rate_hz=rate, segments=tuple(segments))


def generate_dataset(
    script: ScenarioScript,
    out_dir,
    master_seed: int = 0,
    fmt: str = "pcq",
) -> DatasetManifest:
    """Render a scenario script to a dataset folder and return its manifest.

    Per-frame seeds are derived from (master_seed, segment seed, frame index),
    so a fixed master seed reproduces the dataset byte for byte. Binary frames
    use a compact layout with the profile's native row count.
    """
    if fmt not in ("pcq", "csv"):
        raise ValueError("fmt must be 'pcq' or 'csv'")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    profile = script.profile
    filenames: list[str] = []
    fid = 0
    for segment in script.segments:
        n_frames = int(round(segment.duration_s * script.rate_hz))
        for _ in range(n_frames):
            ts = int(round(fid * 1_000_000 / script.rate_hz))
            frame = generate_scene(
                segment.scene,
                np.random.SeedSequence((master_seed, segment.seed, fid, 0)),
                frame_id=fid,
                timestamp_us=ts,
            )
            if segment.noise_variant is not None:
                noise = NoiseSpec(
                    segment.noise_variant,
                    seed=np.random.SeedSequence((master_seed, segment.seed, fid, 1)),
                )
                frame = inject_noise(frame, noise, profile)
            name = f"frame_{fid:06d}.{fmt}"
            if fmt == "pcq":
                save_frame(frame, out_dir / name, m=min(profile.rows, max(1, len(frame.points))))
            else:
                save_frame(frame, out_dir / name)
            filenames.append(name)
            fid += 1
    write_manifest(out_dir, profile.name, script.rate_hz, filenames)
    return scan_dataset(out_dir)
