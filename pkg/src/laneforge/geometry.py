"""Lane and anchor representations.

Image frame: origin top-left, y grows downward. A lane is a vector of
x-coordinates on a fixed set of horizontal slices ordered bottom-to-top,
with NaN marking slices where the lane does not exist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import DegenerateAnchor, TooFewPoints

# slices used for the start-direction fit
THETA_FIT_POINTS = 5


@dataclass(frozen=True)
class SliceScheme:
    """k equidistant slice rows from the bottom image row up to row 0.

    Default rows are ``rint(linspace(h - 1, 0, k))`` so they land on pixel
    rows; pass ``ys`` explicitly to use another sampling (e.g. TuSimple
    h_samples).
    """

    k: int
    image_w: int
    image_h: int
    ys: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"need at least 2 slices, got k={self.k}")
        if self.image_w <= 0 or self.image_h <= 0:
            raise ValueError("image size must be positive")
        if self.ys is None:
            if self.k > self.image_h:
                raise ValueError("more slices than pixel rows")
            ys = np.rint(np.linspace(self.image_h - 1, 0, self.k))
        else:
            ys = np.asarray(self.ys, dtype=np.float64)
            if ys.shape != (self.k,):
                raise ValueError(f"ys must have length {self.k}")
            if np.any(np.diff(ys) >= 0):
                raise ValueError("ys must be strictly decreasing (bottom-to-top)")
            if ys.min() < 0 or ys.max() > self.image_h - 1:
                raise ValueError("ys must lie inside the image")
        ys = ys.astype(np.float64)
        ys.setflags(write=False)
        object.__setattr__(self, "ys", ys)

    @classmethod
    def from_ys(cls, ys, image_w, image_h):
        ys = np.asarray(ys, dtype=np.float64)
        if ys.ndim == 1 and ys.size >= 2 and ys[0] < ys[-1]:
            ys = ys[::-1]
        return cls(len(ys), int(image_w), int(image_h), ys=ys)

    def __eq__(self, other):
        if not isinstance(other, SliceScheme):
            return NotImplemented
        return (self.k, self.image_w, self.image_h) == (
            other.k, other.image_w, other.image_h
        ) and np.array_equal(self.ys, other.ys)

    def __hash__(self):
        return hash((self.k, self.image_w, self.image_h, self.ys.tobytes()))


@dataclass(frozen=True)
class Lane:
    """x-coordinates per slice; NaN where the lane is absent."""

    xs: np.ndarray

    def __post_init__(self):
        xs = np.array(self.xs, dtype=np.float64)
        if xs.ndim != 1:
            raise ValueError("lane xs must be one-dimensional")
        if np.any(np.isinf(xs)):
            raise ValueError("lane xs must be finite or NaN (absent)")
        xs.setflags(write=False)
        object.__setattr__(self, "xs", xs)

    @classmethod
    def from_optional(cls, xs: Sequence[Optional[float]]) -> "Lane":
        return cls(np.array([np.nan if x is None else x for x in xs], dtype=np.float64))

    @property
    def present(self) -> np.ndarray:
        return ~np.isnan(self.xs)

    @property
    def n_present(self) -> int:
        return int(self.present.sum())

    def points(self, scheme: SliceScheme) -> np.ndarray:
        """Present (x, y) pairs, bottom-to-top."""
        m = self.present
        return np.stack([self.xs[m], scheme.ys[m]], axis=1)

    def is_contiguous(self) -> bool:
        idx = np.flatnonzero(self.present)
        return idx.size == 0 or idx[-1] - idx[0] + 1 == idx.size

    def contiguous(self) -> "Lane":
        """Fill interior gaps by linear interpolation in slice index."""
        idx = np.flatnonzero(self.present)
        if idx.size == 0 or self.is_contiguous():
            return self
        xs = self.xs.copy()
        run = np.arange(idx[0], idx[-1] + 1)
        xs[run] = np.interp(run, idx, self.xs[idx])
        return Lane(xs)

    def __eq__(self, other):
        if not isinstance(other, Lane):
            return NotImplemented
        return np.array_equal(self.xs, other.xs, equal_nan=True)

    def __hash__(self):
        return hash(self.xs.tobytes())


@dataclass(frozen=True)
class Anchor:
    """Start point (normalized image coords) and normalized direction.

    theta = 0.5 points straight up; theta > 0.5 leans left going up the
    image, theta < 0.5 leans right.
    """

    s_x: float
    s_y: float
    theta: float

    def __post_init__(self):
        for name in ("s_x", "s_y", "theta"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"anchor {name} must be finite")
        if not 0.0 < self.theta < 1.0:
            raise ValueError(f"theta must be strictly inside (0, 1), got {self.theta}")


def _cot_of_theta(theta: float) -> float:
    if theta == 0.5:
        return 0.0
    t = math.tan((1.0 - theta) * math.pi)
    if abs(t) < 1e-9:
        raise DegenerateAnchor(f"near-horizontal ray for theta={theta}")
    return 1.0 / t


def anchor_to_lane(a: Anchor, s: SliceScheme) -> Lane:
    """Rasterize an anchor ray onto the slices at or above its start point.

    x_i = s_x * w + (y_i - s_y * h) / tan((1 - theta) * pi)
    """
    cot = _cot_of_theta(a.theta)
    y0 = a.s_y * s.image_h
    xs = a.s_x * s.image_w + (s.ys - y0) * cot
    xs = np.where(s.ys <= y0, xs, np.nan)
    return Lane(xs)


def resample_polyline(points, s: SliceScheme) -> Lane:
    """Linearly interpolate a y-monotone polyline at each slice row.

    Slices outside the polyline's y-extent are absent. Points sharing a y
    are merged to their mean x.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(pts) < 2:
        raise TooFewPoints(f"polyline needs at least 2 points, got {len(pts)}")
    uy, inverse = np.unique(pts[:, 1], return_inverse=True)
    if len(uy) < 2:
        raise TooFewPoints("polyline has fewer than 2 distinct rows")
    ux = np.bincount(inverse, weights=pts[:, 0]) / np.bincount(inverse)
    inside = (s.ys >= uy[0]) & (s.ys <= uy[-1])
    xs = np.full(s.k, np.nan)
    xs[inside] = np.interp(s.ys[inside], uy, ux)
    return Lane(xs)


def lane_start_and_theta(l: Lane, s: SliceScheme) -> Tuple[float, float, float]:
    """Recover (s_x, s_y, theta) from an annotated lane.

    The start is the lowest present slice. Direction comes from a
    least-squares fit x = a + b*y over the first few present points, so
    b is the cotangent of the ray angle.
    """
    idx = np.flatnonzero(l.present)
    if idx.size < 2:
        raise TooFewPoints(f"lane needs at least 2 present slices, got {idx.size}")
    start = idx[0]
    fit = idx[:THETA_FIT_POINTS]
    ys = s.ys[fit]
    xs = l.xs[fit]
    yc = ys - ys.mean()
    slope = float(np.dot(yc, xs - xs.mean()) / np.dot(yc, yc))
    angle = math.pi / 2 - math.atan(slope)
    theta = 1.0 - angle / math.pi
    return float(l.xs[start]) / s.image_w, float(s.ys[start]) / s.image_h, theta
