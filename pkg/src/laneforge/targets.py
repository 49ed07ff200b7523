"""Start-point heat map / theta map supervision and anchor decoding."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.ndimage import maximum_filter

from .errors import OutOfGrid
from .geometry import Anchor


@dataclass(frozen=True)
class TargetConfig:
    sigma: float
    t_theta: float
    downsample: int = 8

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not 0.0 < self.t_theta < 1.0:
            raise ValueError("t_theta must lie in (0, 1)")
        if int(self.downsample) != self.downsample or self.downsample < 1:
            raise ValueError("downsample must be an integer >= 1")


@dataclass(frozen=True)
class TargetMaps:
    hm: np.ndarray
    theta_map: np.ndarray
    valid_mask: np.ndarray


def grid_shape(image_w: int, image_h: int, downsample: int) -> Tuple[int, int]:
    """(H', W') of the heat-map grid for an image of the given size."""
    return image_h // downsample, image_w // downsample


def start_cell(a: Anchor, grid: Tuple[int, int]) -> Tuple[int, int]:
    """Grid cell (row, col) containing the anchor's start point.

    Uses floor so that cell-centre decoding maps back to the same cell;
    a coordinate of exactly 1.0 belongs to the last cell.
    """
    h, w = grid
    cells = []
    for v, n in ((a.s_y, h), (a.s_x, w)):
        if not 0.0 <= v <= 1.0:
            raise OutOfGrid(f"start point {(a.s_x, a.s_y)} lies outside the grid")
        cells.append(min(int(math.floor(v * n)), n - 1))
    return cells[0], cells[1]


def _per_lane_gaussians(starts: Sequence[Anchor], sigma: float, grid) -> np.ndarray:
    h, w = grid
    yy = np.arange(h, dtype=np.float64)[:, None]
    xx = np.arange(w, dtype=np.float64)[None, :]
    maps = np.empty((len(starts), h, w))
    for i, a in enumerate(starts):
        cy, cx = start_cell(a, grid)
        maps[i] = np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2.0 * sigma**2))
    return maps


def make_heatmap(starts: Sequence[Anchor], cfg: TargetConfig, grid: Tuple[int, int]) -> np.ndarray:
    """Non-normalised Gaussian per start point, overlaps combined by max."""
    maps = _per_lane_gaussians(starts, cfg.sigma, grid)
    if len(starts) == 0:
        return np.zeros(grid)
    return maps.max(axis=0)


def make_theta_map(starts: Sequence[Anchor], hm: np.ndarray, cfg: TargetConfig):
    """Theta supervision over the region where ``hm > t_theta``.

    A cell covered by several lanes takes the theta of the lane whose own
    Gaussian is largest there (first lane on exact ties).
    """
    valid = hm > cfg.t_theta
    theta_map = np.zeros_like(hm, dtype=np.float64)
    if len(starts):
        owner = _per_lane_gaussians(starts, cfg.sigma, hm.shape).argmax(axis=0)
        thetas = np.array([a.theta for a in starts])
        theta_map[valid] = thetas[owner[valid]]
    return theta_map, valid


def make_targets(starts: Sequence[Anchor], cfg: TargetConfig, grid: Tuple[int, int]) -> TargetMaps:
    hm = make_heatmap(starts, cfg, grid)
    theta_map, valid = make_theta_map(starts, hm, cfg)
    return TargetMaps(hm, theta_map, valid)


def decode_anchors(
    hm_pred: np.ndarray,
    theta_pred: np.ndarray,
    n_anchors: int,
    downsample: int,
    image_size: Optional[Tuple[int, int]] = None,
) -> List[Tuple[Anchor, float]]:
    """Top-scoring 3x3 local maxima of a heat map, turned into anchors.

    ``image_size`` is (w, h); it defaults to the grid size times the
    downsample stride. Ties in score keep row-major cell order.
    """
    hm_pred = np.asarray(hm_pred, dtype=np.float64)
    theta_pred = np.asarray(theta_pred, dtype=np.float64)
    if hm_pred.shape != theta_pred.shape or hm_pred.ndim != 2:
        raise ValueError("heat map and theta map must be matching 2-D grids")
    if n_anchors < 1:
        raise ValueError("n_anchors must be >= 1")
    gh, gw = hm_pred.shape
    w, h = image_size if image_size is not None else (gw * downsample, gh * downsample)

    peaks = hm_pred >= maximum_filter(hm_pred, size=3, mode="constant", cval=-np.inf)
    flat = np.flatnonzero(peaks)
    order = np.argsort(-hm_pred.ravel()[flat], kind="stable")[:n_anchors]
    out = []
    for i in flat[order]:
        y, x = divmod(int(i), gw)
        theta = float(theta_pred[y, x])
        # untrained theta maps may sit on the boundary; keep anchors valid
        theta = min(max(theta, 1e-6), 1.0 - 1e-6)
        a = Anchor((x + 0.5) * downsample / w, (y + 0.5) * downsample / h, theta)
        out.append((a, float(hm_pred[y, x])))
    return out
