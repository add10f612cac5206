import math

import numpy as np
import pytest

from pcq import (
    BUILTIN_PROFILES,
    ExecPolicy,
    FrameRecord,
    GridConfig,
    IntensityParams,
    PointSet,
    SensorProfile,
    WeightScheme,
    default_grid,
    frame_score,
    generate_scene,
    build_scene,
    mean_range_variance,
    project_frame,
    unweighted_frame_score,
)

from conftest import random_pointset, rel_diff
from oracles import bin_frame_py, bin_point_py, frame_score_py

SERIAL = ExecPolicy(workers=1)


def _project_cols(profile, az_values, h=16, el=0.0):
    # distinct ranges tag each point so its landing column can be recovered
    ranges = [5.0 + k for k in range(len(az_values))]
    ps = PointSet(ranges, az_values, np.full(len(az_values), el),
                  np.full(len(az_values), 0.5))
    grid = project_frame(ps, profile, GridConfig(8, h))
    cols = []
    for r_k in ranges:
        for (i, j), cell in grid.nonempty_cells():
            if np.any(cell.range_m == r_k):
                cols.append(j)
                break
    return cols


# --- profiles and config -------------------------------------------------------

def test_profile_validation():
    with pytest.raises(ValueError):
        SensorProfile("bad", (0.0, 400.0), (-10.0, 10.0), 8, 8)
    with pytest.raises(ValueError):
        SensorProfile("bad", (0.0, 90.0), (10.0, 10.0), 8, 8)
    with pytest.raises(ValueError):
        SensorProfile("bad", (0.0, 90.0), (-10.0, 10.0), 0, 8)


def test_builtin_profiles():
    p1 = BUILTIN_PROFILES["lidar1"]
    assert p1.full_circle and p1.az_span == 360.0 and p1.el_span == 40.0
    assert (p1.rows, p1.cols) == (64, 1024)
    p2 = BUILTIN_PROFILES["lidar2"]
    assert not p2.full_circle and p2.az_span == 120.0 and p2.el_span == 25.0
    assert (p2.rows, p2.cols) == (128, 512)
    assert p1.gamma_ref == p2.gamma_ref == 0.15


def test_default_grid_by_fov():
    assert default_grid(BUILTIN_PROFILES["lidar1"]) == GridConfig(8, 32)
    assert default_grid(BUILTIN_PROFILES["lidar2"]) == GridConfig(8, 16)


def test_grid_config_validation():
    with pytest.raises(ValueError):
        GridConfig(0, 4)
    assert GridConfig(8, 16).n_cells == 128


# --- binning ---------------------------------------------------------------------

def test_fov_corner_lands_in_first_cell():
    p2 = BUILTIN_PROFILES["lidar2"]
    ps = PointSet([5.0], [-60.0], [-12.5], [0.5])
    grid = project_frame(ps, p2, GridConfig(8, 16))
    assert len(grid.cell(0, 0)) == 1


def test_fov_top_edges_are_closed():
    p2 = BUILTIN_PROFILES["lidar2"]
    ps = PointSet([5.0], [60.0], [12.5], [0.5])
    grid = project_frame(ps, p2, GridConfig(8, 16))
    assert len(grid.cell(7, 15)) == 1


def test_full_circle_azimuth_wraps():
    p1 = BUILTIN_PROFILES["lidar1"]
    ps = PointSet([5.0, 6.0], [360.0, -1.0], [0.0, 0.0], [0.5, 0.5])
    grid = project_frame(ps, p1, GridConfig(8, 32))
    # 360 wraps onto 0 -> column 0; -1 wraps to 359 -> last column
    row = 4  # el 0 in [-20, 20) with 8 rows
    assert 5.0 in grid.cell(row, 0).range_m
    assert 6.0 in grid.cell(row, 31).range_m


def test_out_of_fov_azimuth_clamps_to_nearer_edge():
    p2 = BUILTIN_PROFILES["lidar2"]
    cols = _project_cols(p2, [61.0, -61.0, 170.0, 190.0])
    assert cols == [15, 0, 15, 0]


def test_out_of_fov_azimuth_tie_goes_low():
    # 180 is exactly 120 degrees from both FOV edges of lidar2
    p2 = BUILTIN_PROFILES["lidar2"]
    assert _project_cols(p2, [180.0]) == [0]


def test_out_of_fov_elevation_clamps():
    p2 = BUILTIN_PROFILES["lidar2"]
    ps = PointSet([5.0, 6.0], [0.0, 0.0], [13.0, -13.0], [0.5, 0.5])
    grid = project_frame(ps, p2, GridConfig(8, 16))
    assert 5.0 in grid.cell(7, 8).range_m
    assert 6.0 in grid.cell(0, 8).range_m


def test_binning_matches_scalar_rederivation():
    rng = np.random.default_rng(20)
    for profile in BUILTIN_PROFILES.values():
        # spill beyond the FOV on purpose to exercise the clamp path
        az = rng.uniform(-90.0, 420.0, 400)
        el = rng.uniform(-25.0, 25.0, 400)
        ps = PointSet(rng.uniform(1, 50, 400), az, el, rng.uniform(0, 1, 400))
        v, h = 8, 16
        grid = project_frame(ps, profile, GridConfig(v, h))
        want, dropped = bin_frame_py(ps.range_m, ps.azimuth_deg, ps.elevation_deg,
                                     profile, v, h)
        assert dropped == grid.dropped_invalid == 0
        got = {key: list(cell.range_m) for key, cell in grid.nonempty_cells()}
        want_r = {key: [float(ps.range_m[i]) for i in idx] for key, idx in want.items()}
        assert got == want_r


def test_point_conservation_and_counts():
    rng = np.random.default_rng(21)
    p1 = BUILTIN_PROFILES["lidar1"]
    ps = random_pointset(rng, 5000)
    grid = project_frame(ps, p1, GridConfig(8, 32))
    assert grid.counts.shape == (8, 32)
    assert int(grid.counts.sum()) == grid.n_points == 5000
    assert sum(len(c) for _, c in grid.nonempty_cells()) == 5000


def test_zero_range_rows_are_dropped():
    p1 = BUILTIN_PROFILES["lidar1"]
    ps = PointSet([0.0, 5.0, 0.0, 7.0], [0.0, 10.0, 20.0, 30.0],
                  [0.0, 0.0, 0.0, 0.0], [0.0, 0.5, 0.0, 0.5])
    grid = project_frame(ps, p1)
    assert grid.dropped_invalid == 2
    assert grid.n_points == 2


def test_binning_is_uniform_for_uniform_input():
    scipy_stats = pytest.importorskip("scipy.stats")
    rng = np.random.default_rng(22)
    p2 = BUILTIN_PROFILES["lidar2"]
    n = 10_000
    ps = PointSet(
        rng.uniform(1, 50, n),
        rng.uniform(p2.az_fov[0], p2.az_fov[1], n),
        rng.uniform(p2.el_fov[0], p2.el_fov[1], n),
        rng.uniform(0, 1, n),
    )
    grid = project_frame(ps, p2, GridConfig(8, 16))
    counts = grid.counts.ravel()
    assert int(counts.sum()) == n
    result = scipy_stats.chisquare(counts)
    assert result.pvalue >= 0.001


def test_cell_index_bounds():
    p1 = BUILTIN_PROFILES["lidar1"]
    grid = project_frame(PointSet.empty(), p1, GridConfig(4, 4))
    with pytest.raises(IndexError):
        grid.cell(4, 0)
    with pytest.raises(IndexError):
        grid.cell(0, -1)


def test_frame_record_metadata_carries_through():
    p1 = BUILTIN_PROFILES["lidar1"]
    rec = FrameRecord(frame_id=42, timestamp_us=123456,
                      points=PointSet([5.0], [0.0], [0.0], [0.5]))
    grid = project_frame(rec, p1)
    assert (grid.frame_id, grid.timestamp_us) == (42, 123456)
    fs = frame_score(grid, policy=SERIAL)
    assert (fs.frame_id, fs.timestamp_us) == (42, 123456)


# --- frame score -------------------------------------------------------------------

def test_empty_frame_scores_zero():
    p1 = BUILTIN_PROFILES["lidar1"]
    grid = project_frame(PointSet.empty(), p1)
    fs = frame_score(grid, policy=SERIAL)
    assert fs.score == 0.0
    assert fs.unweighted_score == 0.0
    assert fs.mean_range_variance == 0.0
    assert mean_range_variance(grid) == 0.0


def test_single_point_frame_score_exact():
    # one point, intensity at the reference: one cell contributes -1,
    # the other 31 cells contribute 0, divisor is the full 32
    p1 = BUILTIN_PROFILES["lidar1"]
    ps = PointSet([5.0], [10.0], [0.0], [0.15])
    grid = project_frame(ps, p1, GridConfig(4, 8))
    fs = frame_score(grid, policy=SERIAL)
    assert fs.score == -1.0 / 32.0
    assert fs.unweighted_score == -1.0 / 32.0


def test_single_dark_point_frame_score_exact():
    p1 = BUILTIN_PROFILES["lidar1"]
    ps = PointSet([5.0], [10.0], [0.0], [0.0])
    grid = project_frame(ps, p1, GridConfig(4, 8))
    fs = frame_score(grid, IntensityParams(gamma_ref=0.15, k=1.0), policy=SERIAL)
    assert fs.score == -math.e / 32.0
    assert fs.unweighted_score == -1.0 / 32.0


def test_divisor_counts_empty_cells():
    # identical triple of cells scores -1/2 each under uniform weights
    # ([1,2,3] has exact binary mean 2); doubling the filled-cell count on
    # the same 2x8 grid exactly doubles the score
    p1 = BUILTIN_PROFILES["lidar1"]

    def triple_frame(n_cells_filled):
        r, az, el, it = [], [], [], []
        for c in range(n_cells_filled):
            center = 360.0 * (c % 8 + 0.5) / 8.0
            r += [1.0, 2.0, 3.0]
            az += [center - 0.5, center, center + 0.5]
            el += [-10.0 if c < 8 else 10.0] * 3
            it += [0.5, 0.5, 0.5]
        return PointSet(r, az, el, it)

    cfg = GridConfig(2, 8)
    scheme = WeightScheme.uniform()
    fs8 = frame_score(project_frame(triple_frame(8), p1, cfg), scheme, policy=SERIAL)
    fs16 = frame_score(project_frame(triple_frame(16), p1, cfg), scheme, policy=SERIAL)
    assert fs16.score == -0.5
    assert fs8.score == -0.25
    assert fs8.score == fs16.score / 2.0


def test_matches_serial_oracle_on_random_frames():
    rng = np.random.default_rng(23)
    for profile in BUILTIN_PROFILES.values():
        for _ in range(8):
            n = int(rng.integers(50, 3000))
            ps = PointSet(
                rng.uniform(1, 60, n),
                rng.uniform(profile.az_fov[0], profile.az_fov[1], n),
                rng.uniform(profile.el_fov[0], profile.el_fov[1], n),
                rng.uniform(0, 0.4, n),
            )
            v, h = 8, 16
            grid = project_frame(ps, profile, GridConfig(v, h))
            fs = frame_score(grid, WeightScheme(), policy=SERIAL)
            want_w, want_u, want_var = frame_score_py(
                ps.range_m, ps.azimuth_deg, ps.elevation_deg, ps.intensity,
                profile, v, h, gamma_ref=profile.gamma_ref,
            )
            assert rel_diff(fs.score, want_w) < 1e-9
            assert rel_diff(fs.unweighted_score, want_u) < 1e-9
            assert rel_diff(fs.mean_range_variance, want_var) < 1e-9


def test_matches_serial_oracle_on_synthetic_scene():
    profile = BUILTIN_PROFILES["lidar2"]
    frame = generate_scene(build_scene("wall_sky", profile), seed=404,
                           frame_id=0, timestamp_us=0)
    ps = frame.points
    grid = project_frame(frame, profile, GridConfig(8, 16))
    fs = frame_score(grid, WeightScheme(), policy=SERIAL)
    want_w, want_u, want_var = frame_score_py(
        ps.range_m, ps.azimuth_deg, ps.elevation_deg, ps.intensity,
        profile, 8, 16, gamma_ref=profile.gamma_ref,
    )
    assert rel_diff(fs.score, want_w) < 1e-9
    assert rel_diff(fs.unweighted_score, want_u) < 1e-9
    assert rel_diff(fs.mean_range_variance, want_var) < 1e-9


def test_unweighted_paths_agree():
    rng = np.random.default_rng(24)
    p1 = BUILTIN_PROFILES["lidar1"]
    ps = random_pointset(rng, 800)
    grid = project_frame(ps, p1, GridConfig(8, 16))
    fs = frame_score(grid, policy=SERIAL)
    assert unweighted_frame_score(grid, policy=SERIAL) == fs.unweighted_score


def test_bright_frame_weighted_equals_unweighted():
    # every cell mean intensity at or above the reference -> all multipliers 1
    rng = np.random.default_rng(25)
    p1 = BUILTIN_PROFILES["lidar1"]
    ps = random_pointset(rng, 600, i_span=(0.2, 1.0))
    grid = project_frame(ps, p1)
    fs = frame_score(grid, policy=SERIAL)
    assert fs.score == fs.unweighted_score
    for row in fs.cells:
        for c in row:
            if c is not None:
                assert c.multiplier == 1.0


def test_cells_layout_matches_counts():
    rng = np.random.default_rng(26)
    p1 = BUILTIN_PROFILES["lidar1"]
    ps = random_pointset(rng, 300)
    grid = project_frame(ps, p1, GridConfig(4, 8))
    fs = frame_score(grid, policy=SERIAL)
    assert len(fs.cells) == 4 and all(len(row) == 8 for row in fs.cells)
    for i in range(4):
        for j in range(8):
            c = fs.cells[i][j]
            if grid.counts[i, j] == 0:
                assert c is None
            else:
                assert c.n_points == grid.counts[i, j]


def test_score_bounded_by_multiplier_cap():
    rng = np.random.default_rng(27)
    p1 = BUILTIN_PROFILES["lidar1"]
    for k in (1.0, 2.0):
        params = IntensityParams(gamma_ref=0.15, k=k)
        for _ in range(10):
            ps = random_pointset(rng, int(rng.integers(10, 2000)))
            fs = frame_score(project_frame(ps, p1), WeightScheme(), params, SERIAL)
            assert abs(fs.score) <= math.exp(k)


def test_frame_score_deterministic():
    rng = np.random.default_rng(28)
    p1 = BUILTIN_PROFILES["lidar1"]
    ps = random_pointset(rng, 2000)
    grid = project_frame(ps, p1)
    a = frame_score(grid, policy=SERIAL)
    b = frame_score(grid, policy=SERIAL)
    assert a.score == b.score
    assert a.mean_range_variance == b.mean_range_variance


def test_compute_time_recorded():
    rng = np.random.default_rng(29)
    p1 = BUILTIN_PROFILES["lidar1"]
    grid = project_frame(random_pointset(rng, 100), p1)
    fs = frame_score(grid, policy=SERIAL)
    assert fs.compute_time_s > 0.0
