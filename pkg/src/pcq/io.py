"""Frame storage: text and binary formats, dataset folders.

Text frames are CSV with a fixed header and ``#`` comment lines; a
``# scale=S`` pragma gives the raw intensity full-scale (default 255).
Binary frames are little-endian: a 16-byte header (magic ``PCQ1``, u16
version, u16 reserved, u32 m, u32 n) followed by m*n records of four
float32 values (range_m, azimuth_deg, elevation_deg, intensity). Intensity
is stored already normalized to [0, 1]. A record with range 0 is a
no-return sentinel and has all fields zeroed.

A dataset is a flat folder of ``frame_<id>.pcq`` / ``frame_<id>.csv`` files
plus an optional ``manifest`` file naming the profile, the frame rate and
the file list in time order.
"""

from __future__ import annotations

import math
import re
import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import (
    DuplicateFrameIdError,
    EmptyDatasetError,
    FormatError,
    ParseError,
    RangeError,
    TruncationError,
)
from .metric import PointSet

__all__ = [
    "FrameRecord",
    "DatasetManifest",
    "TEXT_HEADER",
    "MAGIC",
    "VERSION",
    "read_frame_text",
    "write_frame_text",
    "read_frame_binary",
    "write_frame_binary",
    "load_frame",
    "save_frame",
    "scan_dataset",
    "write_manifest",
]

TEXT_HEADER = "range_m,azimuth_deg,elevation_deg,intensity_raw"
MAGIC = b"PCQ1"
VERSION = 1
_HEADER_STRUCT = struct.Struct("<4sHHII")
_RECORD_BYTES = 16
_FRAME_FILE_RE = re.compile(r"^frame_(\d+)\.(csv|pcq)$")


@dataclass(frozen=True)
class FrameRecord:
    """One frame: identity, capture time and its returns.

    ``points`` may include range-0 sentinel rows; ``points.valid()`` strips
    them. ``timestamp_us`` is microseconds since the epoch (0 if unknown).
    """

    frame_id: int
    timestamp_us: int
    points: PointSet


def _wrap_azimuth_f32(az: np.ndarray) -> np.ndarray:
    # float32 rounding can land exactly on 360.0; fold that back to 0
    out = np.mod(az, 360.0).astype(np.float32)
    out[out >= 360.0] = 0.0
    return out


def read_frame_text(data: str | bytes) -> FrameRecord:
    """Parse a text frame.

    Raises ParseError (with line number) on malformed rows, RangeError on a
    negative range or an intensity outside [0, scale].
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    scale = 255.0
    frame_id = 0
    timestamp_us = 0
    header_seen = False
    rows_seen = False
    ranges: list[float] = []
    azimuths: list[float] = []
    elevations: list[float] = []
    intensities: list[float] = []

    for line_no, raw_line in enumerate(data.splitlines(), start=1):
        line = raw_line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                key = key.strip()
                value = value.strip()
                if key == "scale":
                    if rows_seen:
                        raise ParseError("scale pragma must precede data rows", line_no)
                    try:
                        scale = float(value)
                    except ValueError:
                        raise ParseError(f"bad scale value {value!r}", line_no) from None
                    if not (scale > 0 and math.isfinite(scale)):
                        raise ParseError(f"scale must be positive and finite, got {value}", line_no)
                elif key == "frame_id":
                    try:
                        frame_id = int(value)
                    except ValueError:
                        raise ParseError(f"bad frame_id value {value!r}", line_no) from None
                elif key == "timestamp_us":
                    try:
                        timestamp_us = int(value)
                    except ValueError:
                        raise ParseError(f"bad timestamp_us value {value!r}", line_no) from None
                # unknown keys are plain comments
            continue
        if not header_seen:
            if line != TEXT_HEADER:
                raise ParseError(f"expected header {TEXT_HEADER!r}, got {line!r}", line_no)
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise ParseError(f"expected 4 fields, got {len(parts)}", line_no)
        try:
            r, az, el, raw_int = (float(p) for p in parts)
        except ValueError:
            raise ParseError(f"non-numeric field in {line!r}", line_no) from None
        if not (math.isfinite(r) and math.isfinite(az) and math.isfinite(el) and math.isfinite(raw_int)):
            raise ParseError(f"non-finite field in {line!r}", line_no)
        if r < 0:
            raise RangeError(f"line {line_no}: range must be >= 0, got {r}")
        if not 0.0 <= raw_int <= scale:
            raise RangeError(f"line {line_no}: intensity {raw_int} outside [0, {scale}]")
        rows_seen = True
        ranges.append(r)
        azimuths.append(az)
        elevations.append(el)
        intensities.append(raw_int / scale)

    if not header_seen:
        raise ParseError("missing header line")
    points = PointSet(ranges, azimuths, elevations, intensities)
    return FrameRecord(frame_id=frame_id, timestamp_us=timestamp_us, points=points)


def write_frame_text(frame: FrameRecord) -> str:
    """Serialize a frame to canonical text.

    Writes intensities normalized under a ``# scale=1`` pragma with repr
    floats, so write -> read -> write is byte-identical.
    """
    pts = frame.points
    lines = [
        "# scale=1",
        f"# frame_id={frame.frame_id}",
        f"# timestamp_us={frame.timestamp_us}",
        TEXT_HEADER,
    ]
    for k in range(len(pts)):
        lines.append(
            f"{float(pts.range_m[k])!r},{float(pts.azimuth_deg[k])!r},"
            f"{float(pts.elevation_deg[k])!r},{float(pts.intensity[k])!r}"
        )
    return "\n".join(lines) + "\n"


def read_frame_binary(data: bytes) -> FrameRecord:
    """Parse a binary frame.

    The returned points include one row per m*n slot, sentinels included, so
    writing them back with the same (m, n) reproduces the input bytes.
    """
    if len(data) < _HEADER_STRUCT.size:
        raise TruncationError(
            f"header needs {_HEADER_STRUCT.size} bytes, got {len(data)}"
        )
    magic, version, _reserved, m, n = _HEADER_STRUCT.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}, expected {VERSION}")
    expected = _HEADER_STRUCT.size + m * n * _RECORD_BYTES
    if len(data) != expected:
        raise TruncationError(f"expected {expected} bytes for {m} x {n} records, got {len(data)}")
    arr = np.frombuffer(data, dtype="<f4", offset=_HEADER_STRUCT.size).reshape(m * n, 4).astype(
        np.float64
    )
    r, az, el, inten = arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]
    if not np.isfinite(arr).all():
        raise RangeError("non-finite field in binary frame")
    if r.size and float(r.min()) < 0:
        raise RangeError("negative range in binary frame")
    if r.size and (float(inten.min()) < 0 or float(inten.max()) > 1):
        raise RangeError("intensity outside [0, 1] in binary frame")
    return FrameRecord(frame_id=0, timestamp_us=0, points=PointSet(r, az, el, inten))


def write_frame_binary(frame: FrameRecord, m: int | None = None, n: int | None = None) -> bytes:
    """Serialize a frame to binary with an m x n slot layout.

    Defaults to a compact single-row layout. Points fill the leading slots in
    order; remaining slots are zeroed sentinels. Values are cast to float32,
    so frames intended for byte-exact storage should carry float32-exact
    fields (the synthetic generator does).
    """
    pts = frame.points
    k = len(pts)
    if m is None and n is None:
        m, n = 1, k
    elif n is None:
        m = int(m)
        n = -(-k // m) if k else 0
    m = int(m)
    n = int(n)
    if m < 0 or n < 0:
        raise ValueError("m and n must be >= 0")
    if m * n < k:
        raise ValueError(f"{m} x {n} slots cannot hold {k} points")
    arr = np.zeros((m * n, 4), dtype=np.float32)
    arr[:k, 0] = pts.range_m.astype(np.float32)
    arr[:k, 1] = _wrap_azimuth_f32(pts.azimuth_deg)
    arr[:k, 2] = pts.elevation_deg.astype(np.float32)
    arr[:k, 3] = pts.intensity.astype(np.float32)
    arr[:k][pts.range_m == 0.0] = 0.0  # sentinel rows carry zeroed fields
    header = _HEADER_STRUCT.pack(MAGIC, VERSION, 0, m, n)
    return header + arr.tobytes()


def load_frame(path) -> FrameRecord:
    """Read a frame file, picking the format from the suffix (.csv or .pcq)."""
    path = Path(path)
    if path.suffix == ".csv":
        return read_frame_text(path.read_bytes())
    if path.suffix == ".pcq":
        return read_frame_binary(path.read_bytes())
    raise FormatError(f"unknown frame suffix {path.suffix!r} (expected .csv or .pcq)")


def save_frame(frame: FrameRecord, path, m: int | None = None, n: int | None = None) -> None:
    """Write a frame file, picking the format from the suffix."""
    path = Path(path)
    if path.suffix == ".csv":
        path.write_text(write_frame_text(frame))
    elif path.suffix == ".pcq":
        path.write_bytes(write_frame_binary(frame, m, n))
    else:
        raise FormatError(f"unknown frame suffix {path.suffix!r} (expected .csv or .pcq)")


@dataclass(frozen=True)
class DatasetManifest:
    """Validated index of a dataset folder."""

    directory: Path
    profile_name: str | None
    rate_hz: float
    entries: tuple[tuple[int, Path], ...]

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def frame_ids(self) -> list[int]:
        return [fid for fid, _ in self.entries]

    def iter_frames(self) -> Iterator[FrameRecord]:
        """Load frames in time order.

        The filename id is authoritative for frame_id. Frames without an
        embedded timestamp get one derived from the frame rate.
        """
        for fid, path in self.entries:
            fr = load_frame(path)
            ts = fr.timestamp_us or int(round(fid * 1_000_000 / self.rate_hz))
            yield replace(fr, frame_id=fid, timestamp_us=ts)


def _parse_manifest_file(path: Path) -> tuple[str | None, float, list[str] | None]:
    profile_name = None
    rate = 10.0
    listed: list[str] = []
    for line_no, raw_line in enumerate(path.read_text().splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" in line:
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key == "profile":
                profile_name = value
            elif key == "rate":
                try:
                    rate = float(value)
                except ValueError:
                    raise ParseError(f"bad rate value {value!r}", line_no) from None
                if not (rate > 0 and math.isfinite(rate)):
                    raise ParseError(f"rate must be positive, got {value}", line_no)
            else:
                raise ParseError(f"unknown manifest key {key!r}", line_no)
        else:
            listed.append(line)
    return profile_name, rate, listed or None


def scan_dataset(directory) -> DatasetManifest:
    """Index a dataset folder.

    Uses the ``manifest`` file when present (all listed files must exist),
    otherwise globs ``frame_*.csv`` / ``frame_*.pcq``. Raises
    EmptyDatasetError when no frames are found and DuplicateFrameIdError when
    two files claim one id.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise EmptyDatasetError(f"dataset directory {directory} does not exist")

    profile_name = None
    rate = 10.0
    manifest_path = directory / "manifest"
    if manifest_path.is_file():
        profile_name, rate, listed = _parse_manifest_file(manifest_path)
    else:
        listed = None

    if listed is None:
        names = sorted(p.name for p in directory.iterdir() if _FRAME_FILE_RE.match(p.name))
    else:
        names = listed

    entries: list[tuple[int, Path]] = []
    seen: dict[int, str] = {}
    for name in names:
        match = _FRAME_FILE_RE.match(name)
        if not match:
            raise ParseError(f"manifest entry {name!r} is not a frame filename")
        path = directory / name
        if not path.is_file():
            raise ParseError(f"manifest lists missing file {name!r}")
        fid = int(match.group(1))
        if fid in seen:
            raise DuplicateFrameIdError(f"frame id {fid} claimed by {seen[fid]!r} and {name!r}")
        seen[fid] = name
        entries.append((fid, path))

    if not entries:
        raise EmptyDatasetError(f"no frame files in {directory}")
    entries.sort(key=lambda e: e[0])
    return DatasetManifest(
        directory=directory,
        profile_name=profile_name,
        rate_hz=rate,
        entries=tuple(entries),
    )


def write_manifest(directory, profile_name: str, rate_hz: float, filenames) -> Path:
    """Write a dataset ``manifest`` file listing ``filenames`` in time order."""
    directory = Path(directory)
    lines = [f"profile={profile_name}", f"rate={rate_hz:g}"]
    lines.extend(filenames)
    path = directory / "manifest"
    path.write_text("\n".join(lines) + "\n")
    return path
