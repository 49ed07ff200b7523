import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from laneforge.errors import OutOfGrid
from laneforge.geometry import Anchor
from laneforge.targets import (
    TargetConfig,
    decode_anchors,
    make_heatmap,
    make_targets,
    make_theta_map,
    start_cell,
)

GRID = (40, 100)


def at_cell(row, col, theta=0.5, grid=GRID):
    return Anchor((col + 0.5) / grid[1], (row + 0.5) / grid[0], theta)


def per_lane_gaussian(row, col, sigma, grid=GRID):
    # plain loop oracle
    out = np.zeros(grid)
    for y in range(grid[0]):
        for x in range(grid[1]):
            out[y, x] = math.exp(-((x - col) ** 2 + (y - row) ** 2) / (2 * sigma**2))
    return out


def test_peak_and_sigma_distance():
    cfg = TargetConfig(sigma=2, t_theta=0.2)
    hm = make_heatmap([at_cell(10, 10)], cfg, GRID)
    assert hm[10, 10] == 1.0
    assert abs(hm[10, 12] - math.exp(-0.5)) < 1e-12
    assert abs(hm[10, 12] - 0.60653) < 1e-5


def test_overlap_is_elementwise_max():
    cfg = TargetConfig(sigma=2, t_theta=0.2)
    hm = make_heatmap([at_cell(10, 10), at_cell(10, 11)], cfg, GRID)
    expect = np.maximum(per_lane_gaussian(10, 10, 2), per_lane_gaussian(10, 11, 2))
    np.testing.assert_allclose(hm, expect, atol=1e-15)
    assert hm[10, 10] == hm[10, 11] == 1.0


def test_out_of_grid():
    cfg = TargetConfig(sigma=2, t_theta=0.2)
    with pytest.raises(OutOfGrid):
        make_heatmap([Anchor(1.2, 0.5, 0.5)], cfg, GRID)
    # s = 1.0 exactly is the last cell
    assert start_cell(Anchor(1.0, 1.0, 0.5), GRID) == (39, 99)


def test_theta_disk_radius():
    cfg = TargetConfig(sigma=2, t_theta=0.2)
    starts = [at_cell(20, 50, theta=0.6)]
    hm = make_heatmap(starts, cfg, GRID)
    theta, valid = make_theta_map(starts, hm, cfg)
    radius = math.sqrt(-8 * math.log(0.2))      # ~3.59 cells
    yy, xx = np.mgrid[: GRID[0], : GRID[1]]
    disk = (xx - 50) ** 2 + (yy - 20) ** 2 < radius**2
    np.testing.assert_array_equal(valid, disk)
    assert np.all(theta[disk] == 0.6) and np.all(theta[~disk] == 0)


def test_theta_threshold_limit():
    cfg = TargetConfig(sigma=2, t_theta=0.999999)
    starts = [at_cell(5, 5, theta=0.3)]
    theta, valid = make_theta_map(starts, make_heatmap(starts, cfg, GRID), cfg)
    assert valid.sum() == 1 and theta[5, 5] == 0.3


def test_contested_cells_go_to_nearest_start():
    cfg = TargetConfig(sigma=3, t_theta=0.1)
    starts = [at_cell(20, 40, 0.3), at_cell(20, 46, 0.7)]
    theta, valid = make_theta_map(starts, make_heatmap(starts, cfg, GRID), cfg)
    assert theta[20, 42] == 0.3
    assert theta[20, 44] == 0.7
    ga, gb = per_lane_gaussian(20, 40, 3), per_lane_gaussian(20, 46, 3)
    expect = np.where(ga >= gb, 0.3, 0.7)
    np.testing.assert_array_equal(theta[valid], expect[valid])


def test_target_maps_invariants():
    cfg = TargetConfig(sigma=4, t_theta=0.5)
    maps = make_targets([at_cell(3, 3, 0.4), at_cell(30, 80, 0.6)], cfg, GRID)
    assert maps.hm.min() >= 0 and maps.hm.max() <= 1
    np.testing.assert_array_equal(maps.valid_mask, maps.hm > 0.5)
    assert np.all(maps.theta_map[~maps.valid_mask] == 0)


def test_empty_start_list():
    cfg = TargetConfig(sigma=2, t_theta=0.2)
    maps = make_targets([], cfg, GRID)
    assert not maps.hm.any() and not maps.valid_mask.any()


def test_decode_single_round_trip():
    cfg = TargetConfig(sigma=2, t_theta=0.2, downsample=8)
    a = at_cell(12, 33, 0.37)
    maps = make_targets([a], cfg, GRID)
    [(got, score)] = decode_anchors(maps.hm, maps.theta_map, 1, 8, (800, 320))
    assert start_cell(got, GRID) == (12, 33)
    assert got.theta == 0.37 and score == 1.0
    assert abs(got.s_x - a.s_x) < 1e-12 and abs(got.s_y - a.s_y) < 1e-12


def test_decode_orders_by_score():
    cfg = TargetConfig(sigma=2, t_theta=0.2)
    hm = make_heatmap([at_cell(10, 10)], cfg, GRID) + 0.8 * make_heatmap([at_cell(30, 70)], cfg, GRID)
    out = decode_anchors(hm, np.full(GRID, 0.5), 5, 8)
    scores = [s for _, s in out[:2]]
    assert scores[0] == pytest.approx(1.0, abs=1e-9) and scores[1] == pytest.approx(0.8, abs=1e-9)
    assert start_cell(out[0][0], GRID) == (10, 10)


def test_decode_plateau_tie_break():
    out = decode_anchors(np.full((4, 5), 0.3), np.full((4, 5), 0.5), 3, 2)
    cells = [start_cell(a, (4, 5)) for a, _ in out]
    assert cells == [(0, 0), (0, 1), (0, 2)]


@settings(max_examples=100, deadline=None)
@given(st.floats(0.5, 8.0), st.floats(0.05, 0.9), st.floats(0.05, 0.9))
def test_valid_area_monotone(sigma, t1, t2):
    starts = [at_cell(20, 50, 0.5)]
    lo, hi = sorted((t1, t2))
    a_lo = make_targets(starts, TargetConfig(sigma, lo), GRID).valid_mask.sum()
    a_hi = make_targets(starts, TargetConfig(sigma, hi), GRID).valid_mask.sum()
    assert a_lo >= a_hi
    bigger = make_targets(starts, TargetConfig(sigma * 1.5, lo), GRID).valid_mask.sum()
    assert bigger >= a_lo


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 39), st.integers(0, 99)), min_size=1, max_size=6), st.randoms())
def test_heatmap_permutation_invariant(cells, rnd):
    cfg = TargetConfig(sigma=3, t_theta=0.3)
    starts = [at_cell(r, c) for r, c in cells]
    shuffled = list(starts)
    rnd.shuffle(shuffled)
    np.testing.assert_array_equal(make_heatmap(starts, cfg, GRID), make_heatmap(shuffled, cfg, GRID))
