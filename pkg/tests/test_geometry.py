import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from laneforge.errors import DegenerateAnchor, TooFewPoints
from laneforge.geometry import (
    Anchor,
    Lane,
    SliceScheme,
    anchor_to_lane,
    lane_start_and_theta,
    resample_polyline,
)


def test_slice_scheme_defaults():
    s = SliceScheme(4, 800, 320)
    np.testing.assert_array_equal(s.ys, [319, 213, 106, 0])
    assert s.ys[0] == s.image_h - 1
    assert np.all(np.diff(s.ys) < 0)


@pytest.mark.parametrize("kw", [dict(k=1, image_w=10, image_h=10), dict(k=20, image_w=10, image_h=10)])
def test_slice_scheme_rejects(kw):
    with pytest.raises(ValueError):
        SliceScheme(**kw)


def test_slice_scheme_explicit_ys_must_decrease():
    with pytest.raises(ValueError):
        SliceScheme(3, 100, 100, ys=[0, 50, 99])
    s = SliceScheme.from_ys([0, 50, 99], 100, 100)
    np.testing.assert_array_equal(s.ys, [99, 50, 0])


def test_anchor_validation():
    with pytest.raises(ValueError):
        Anchor(0.5, 0.5, 0.0)
    with pytest.raises(ValueError):
        Anchor(0.5, 0.5, 1.0)
    with pytest.raises(ValueError):
        Anchor(float("nan"), 0.5, 0.5)


def test_vertical_anchor():
    lane = anchor_to_lane(Anchor(0.5, 1.0, 0.5), SliceScheme(4, 800, 320))
    np.testing.assert_array_equal(lane.xs, [400, 400, 400, 400])


def test_diagonal_anchor_by_hand():
    s = SliceScheme(3, 100, 90, ys=[89, 44, 0])
    lane = anchor_to_lane(Anchor(0.0, 1.0, 0.75), s)
    # tan(0.25 pi) = 1 so x = y - 90
    np.testing.assert_allclose(lane.xs, [-1, -46, -90], atol=1e-12)


def test_start_point_gating():
    s = SliceScheme(4, 800, 320, ys=[319, 213, 106, 0])
    lane = anchor_to_lane(Anchor(0.5, 0.5, 0.5), s)
    assert np.isnan(lane.xs[:2]).all()
    np.testing.assert_array_equal(lane.xs[2:], [400, 400])


def test_near_horizontal_anchor_is_degenerate():
    with pytest.raises(DegenerateAnchor):
        anchor_to_lane(Anchor(0.5, 0.5, 1e-12), SliceScheme(4, 800, 320))


def test_theta_continuity_above_start():
    s = SliceScheme(10, 800, 320)
    thetas = np.linspace(0.2, 0.8, 601)
    xs = np.array([anchor_to_lane(Anchor(0.5, 1.0, t), s).xs[5] for t in thetas])
    # continuous and monotone: slice above start moves left as theta grows
    assert np.all(np.diff(xs) < 0)
    assert np.max(np.abs(np.diff(xs))) < 2.0


def test_resample_linear_segment():
    s = SliceScheme(3, 101, 101, ys=[100, 50, 0])
    lane = resample_polyline([(0, 100), (100, 0)], s)
    np.testing.assert_allclose(lane.xs, [0, 50, 100])


def test_resample_clips_to_extent():
    s = SliceScheme(3, 101, 101, ys=[100, 50, 0])
    lane = resample_polyline([(10, 90), (10, 10)], s)
    assert np.isnan(lane.xs[0]) and np.isnan(lane.xs[2])
    assert lane.xs[1] == 10


def test_resample_too_few_points():
    s = SliceScheme(3, 101, 101)
    with pytest.raises(TooFewPoints):
        resample_polyline([(1, 2)], s)
    with pytest.raises(TooFewPoints):
        resample_polyline([(1, 2), (5, 2)], s)


@settings(max_examples=200, deadline=None)
@given(st.floats(-500, 500), st.floats(-3, 3), st.integers(3, 60))
def test_resample_exact_on_lines(x0, slope, k):
    s = SliceScheme(k, 800, 320)
    pts = [(x0 + slope * y, y) for y in (319.0, 200.0, 57.5, 0.0)]
    lane = resample_polyline(pts[::-1], s)
    assert lane.present.all()
    np.testing.assert_allclose(lane.xs, x0 + slope * s.ys, atol=1e-9, rtol=0)


def test_start_theta_vertical():
    s = SliceScheme(3, 800, 320)
    sx, sy, theta = lane_start_and_theta(Lane([400, 400, 400]), s)
    assert theta == 0.5
    assert sx == 0.5 and sy == 319 / 320


def test_start_theta_needs_two_points():
    s = SliceScheme(3, 800, 320)
    with pytest.raises(TooFewPoints):
        lane_start_and_theta(Lane.from_optional([None, 10.0, None]), s)


@settings(max_examples=300, deadline=None)
@given(st.floats(0.05, 0.95), st.integers(0, 40), st.floats(0.2, 0.8))
def test_round_trip_on_slice_aligned_start(s_x, start_idx, theta):
    # start placed exactly on a slice row: recovery is exact up to fp
    s = SliceScheme(72, 800, 320)
    a = Anchor(s_x, s.ys[start_idx] / s.image_h, theta)
    got = lane_start_and_theta(anchor_to_lane(a, s), s)
    assert abs(got[2] - theta) <= 1e-3
    assert abs(got[0] - s_x) * s.image_w <= 1.0
    assert abs(got[1] - a.s_y) * s.image_h <= 1.0


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.3, 1.0), st.floats(0.2, 0.8))
def test_round_trip_general_start_lies_on_ray(s_x, s_y, theta):
    s = SliceScheme(320, 800, 320)       # one slice per pixel row
    a = Anchor(s_x, s_y, theta)
    lane = anchor_to_lane(a, s)
    rx, ry, rt = lane_start_and_theta(lane, s)
    assert abs(rt - theta) <= 1e-3
    assert 0 <= (a.s_y - ry) * s.image_h <= 1.0 + 1e-9
    # recovered start sits on the original ray
    x_on_ray = s_x * 800 + (ry * 320 - s_y * 320) / math.tan((1 - theta) * math.pi)
    assert abs(rx * 800 - x_on_ray) < 1e-6


def test_lane_contiguous_fill():
    lane = Lane.from_optional([None, 1.0, None, 3.0, None])
    assert not lane.is_contiguous()
    np.testing.assert_array_equal(lane.contiguous().xs[1:4], [1, 2, 3])
