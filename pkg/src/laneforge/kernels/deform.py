"""Deformable 3x3 sampling and the guidance-driven offset unit built on it.

Offset tensors have 2 * 9 * groups channels. Channel ``(g * 9 + k) * 2``
holds the x offset and ``+ 1`` the y offset of tap ``k`` for deform group
``g``; taps run over dy in (-1, 0, 1) then dx in (-1, 0, 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatch
from .conv import as_tensor, conv2d

KERNEL_GRID = tuple((dx, dy) for dy in (-1, 0, 1) for dx in (-1, 0, 1))


@dataclass(frozen=True)
class DeformParams:
    weight: np.ndarray          # (C_out, C_in, 3, 3)
    deform_groups: int = 2

    def validate(self, c_in: int) -> None:
        w = np.asarray(self.weight)
        if w.ndim != 4 or w.shape[1:] != (c_in, 3, 3):
            raise ShapeMismatch(f"deform weight must be (out, {c_in}, 3, 3), got {w.shape}")
        if self.deform_groups < 1 or c_in % self.deform_groups:
            raise ShapeMismatch(f"deform_groups={self.deform_groups} must divide {c_in} channels")


def bilinear_sample(img: np.ndarray, py: np.ndarray, px: np.ndarray) -> np.ndarray:
    """Sample (C, H, W) ``img`` at fractional (py, px); outside reads 0."""
    c, h, w = img.shape
    y0 = np.floor(py)
    x0 = np.floor(px)
    ly = py - y0
    lx = px - x0
    y0 = y0.astype(np.int64)
    x0 = x0.astype(np.int64)
    out = np.zeros((c,) + py.shape)
    for dy, wy in ((0, 1.0 - ly), (1, ly)):
        for dx, wx in ((0, 1.0 - lx), (1, lx)):
            yi = y0 + dy
            xi = x0 + dx
            ok = (yi >= 0) & (yi < h) & (xi >= 0) & (xi < w)
            vals = img[:, np.clip(yi, 0, h - 1), np.clip(xi, 0, w - 1)]
            out += np.where(ok, wy * wx, 0.0) * vals
    return out


def deform_columns(feat: np.ndarray, offsets: np.ndarray, groups: int) -> np.ndarray:
    """(C, 9, H, W) deformed sampling columns."""
    c, h, w = feat.shape
    cg = c // groups
    yy, xx = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    cols = np.empty((c, 9, h, w))
    for g in range(groups):
        sl = slice(g * cg, (g + 1) * cg)
        for k, (dx, dy) in enumerate(KERNEL_GRID):
            ch = (g * 9 + k) * 2
            px = xx + dx + offsets[ch]
            py = yy + dy + offsets[ch + 1]
            cols[sl, k] = bilinear_sample(feat[sl], py, px)
    return cols


def deformable_sample(feat, offsets, d: DeformParams) -> np.ndarray:
    """Deformable 3x3 convolution of ``feat`` with per-cell tap offsets."""
    feat = as_tensor(feat, "feature")
    offsets = as_tensor(offsets, "offsets")
    c, h, w = feat.shape
    d.validate(c)
    expected = (2 * 9 * d.deform_groups, h, w)
    if offsets.shape != expected:
        raise ShapeMismatch(f"offsets must have shape {expected}, got {offsets.shape}")
    weight = np.asarray(d.weight, dtype=np.float64)
    cols = deform_columns(feat, offsets, d.deform_groups)
    return np.einsum("ock,ckhw->ohw", weight.reshape(weight.shape[0], c, 9), cols, optimize=False)


@dataclass(frozen=True)
class OffsetNet:
    """Single 3x3 conv mapping the 2-channel guidance map to tap offsets."""

    weight: np.ndarray          # (2 * 9 * groups, 2, 3, 3)
    bias: np.ndarray            # (2 * 9 * groups,)

    @classmethod
    def zeros(cls, groups: int = 2) -> "OffsetNet":
        n = 2 * 9 * groups
        return cls(np.zeros((n, 2, 3, 3)), np.zeros(n))

    @classmethod
    def constant_shift(cls, dx: float, dy: float, groups: int = 2) -> "OffsetNet":
        net = cls.zeros(groups)
        bias = net.bias.copy()
        bias[0::2] = dx
        bias[1::2] = dy
        return cls(net.weight, bias)

    @classmethod
    def random(cls, rng: np.random.Generator, groups: int = 2, scale: float = 0.5) -> "OffsetNet":
        n = 2 * 9 * groups
        return cls(rng.normal(0, scale, (n, 2, 3, 3)), rng.normal(0, scale, n))

    def __call__(self, guidance) -> np.ndarray:
        return conv2d(guidance, self.weight, self.bias)


def alau_forward(feat, guidance, d: DeformParams, offset_net: OffsetNet) -> np.ndarray:
    """Deformable sampling with offsets predicted from (heat map, theta map)."""
    feat = as_tensor(feat, "feature")
    guidance = as_tensor(guidance, "guidance")
    if guidance.shape[1:] != feat.shape[1:]:
        raise ShapeMismatch(f"guidance spatial shape {guidance.shape[1:]} != feature {feat.shape[1:]}")
    if guidance.shape[0] != 2:
        raise ShapeMismatch("guidance must stack exactly (heat map, theta map)")
    return deformable_sample(feat, offset_net(guidance), d)
