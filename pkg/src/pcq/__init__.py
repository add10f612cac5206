"""Pointcloud quality scoring for LiDAR frames.

Scores each frame of a LiDAR stream by gridding its returns into angular
cells, measuring the spatial autocorrelation of range within each cell, and
weighting cells of suspiciously low mean intensity more heavily. Coherent
scenes score near +1; interference pushes scores toward 0 and below.
"""

from .errors import (
    DuplicateFrameIdError,
    EmptyDatasetError,
    EmptySetError,
    FormatError,
    NonFiniteInputError,
    ParseError,
    PcqError,
    RangeError,
    TruncationError,
)
from .grid import (
    BUILTIN_PROFILES,
    FrameGrid,
    FrameScore,
    GridConfig,
    SensorProfile,
    default_grid,
    frame_score,
    mean_range_variance,
    project_frame,
    unweighted_frame_score,
)
from .io import (
    DatasetManifest,
    FrameRecord,
    load_frame,
    read_frame_binary,
    read_frame_text,
    save_frame,
    scan_dataset,
    write_frame_binary,
    write_frame_text,
    write_manifest,
)
from .metric import (
    INV_ANGULAR,
    UNIFORM,
    CellScore,
    IntensityParams,
    PointSet,
    PolarPoint,
    WeightScheme,
    intensity_multiplier,
    pairwise_weight,
    range_variance,
    spatial_autocorrelation,
    weighted_cell_score,
)
from .parallel import WORKERS_ENV_VAR, ExecPolicy, StreamError, map_cells, score_stream
from .report import (
    ScoreRow,
    ThresholdReport,
    ThresholdRow,
    build_threshold_report,
    default_thresholds,
    read_labels_csv,
    read_score_csv,
    score_cdf,
    write_cdf_csv,
    write_score_csv,
    write_threshold_csv,
)
from .synth import (
    Attenuation,
    BoxSpec,
    ClusteredLowIntensity,
    NoiseSpec,
    ScenarioScript,
    Scattered,
    SceneSpec,
    Segment,
    build_scene,
    generate_dataset,
    generate_scene,
    inject_noise,
    parse_scenario_script,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "PcqError", "EmptySetError", "NonFiniteInputError", "ParseError", "RangeError",
    "FormatError", "TruncationError", "EmptyDatasetError", "DuplicateFrameIdError",
    # metric
    "PolarPoint", "PointSet", "WeightScheme", "IntensityParams", "CellScore",
    "UNIFORM", "INV_ANGULAR", "spatial_autocorrelation", "pairwise_weight",
    "intensity_multiplier", "weighted_cell_score", "range_variance",
    # grid
    "SensorProfile", "GridConfig", "FrameGrid", "FrameScore", "BUILTIN_PROFILES",
    "default_grid", "project_frame", "frame_score", "unweighted_frame_score",
    "mean_range_variance",
    # parallel
    "ExecPolicy", "StreamError", "map_cells", "score_stream", "WORKERS_ENV_VAR",
    # io
    "FrameRecord", "DatasetManifest", "read_frame_text", "write_frame_text",
    "read_frame_binary", "write_frame_binary", "load_frame", "save_frame",
    "scan_dataset", "write_manifest",
    # synth
    "BoxSpec", "SceneSpec", "Scattered", "ClusteredLowIntensity", "Attenuation",
    "NoiseSpec", "Segment", "ScenarioScript", "build_scene", "generate_scene",
    "inject_noise", "generate_dataset", "parse_scenario_script",
    # report
    "ScoreRow", "ThresholdRow", "ThresholdReport", "write_score_csv", "read_score_csv",
    "read_labels_csv", "default_thresholds", "build_threshold_report",
    "write_threshold_csv", "score_cdf", "write_cdf_csv",
]
