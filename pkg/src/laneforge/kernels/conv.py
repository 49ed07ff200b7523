"""Dense convolution primitives on (C, H, W) float64 arrays.

All ops correlate (no kernel flip) with zero padding and keep the spatial
size. Accumulation order is fixed by the tap loop, so results are
bitwise reproducible.
"""

from __future__ import annotations

import numpy as np

from ..errors import NonFinite, ShapeMismatch


def as_tensor(x, name: str = "tensor") -> np.ndarray:
    """Validate and return a C-contiguous float64 (C, H, W) array."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ShapeMismatch(f"{name} must be (C, H, W), got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFinite(f"{name} contains non-finite values")
    return x


def _pad(x: np.ndarray, ph: int, pw: int) -> np.ndarray:
    return np.pad(x, ((0, 0), (ph, ph), (pw, pw)))


def depthwise_conv(x, kernel) -> np.ndarray:
    """Per-channel 2-D correlation with a (C, kh, kw) kernel, odd kh/kw."""
    x = as_tensor(x, "input")
    kernel = np.asarray(kernel, dtype=np.float64)
    c, h, w = x.shape
    if kernel.ndim != 3 or kernel.shape[0] != c:
        raise ShapeMismatch(f"depthwise kernel must be ({c}, kh, kw), got {kernel.shape}")
    kh, kw = kernel.shape[1:]
    if kh % 2 == 0 or kw % 2 == 0:
        raise ShapeMismatch("kernel dims must be odd")
    xp = _pad(x, kh // 2, kw // 2)
    out = np.zeros_like(x)
    for i in range(kh):
        for j in range(kw):
            out += kernel[:, i, j, None, None] * xp[:, i : i + h, j : j + w]
    return out


def pointwise(x, weight, bias=None) -> np.ndarray:
    """1x1 convolution: out[o] = sum_c weight[o, c] * x[c] (+ bias[o])."""
    x = as_tensor(x, "input")
    weight = np.asarray(weight, dtype=np.float64)
    if weight.ndim != 2 or weight.shape[1] != x.shape[0]:
        raise ShapeMismatch(f"1x1 weight must be (out, {x.shape[0]}), got {weight.shape}")
    out = np.einsum("oc,chw->ohw", weight, x, optimize=False)
    if bias is not None:
        out = out + np.asarray(bias, dtype=np.float64)[:, None, None]
    return out


def im2col(x: np.ndarray, kh: int, kw: int) -> np.ndarray:
    """(C, kh*kw, H, W) stack of shifted inputs, taps in row-major order."""
    c, h, w = x.shape
    xp = _pad(x, kh // 2, kw // 2)
    cols = np.empty((c, kh * kw, h, w))
    for i in range(kh):
        for j in range(kw):
            cols[:, i * kw + j] = xp[:, i : i + h, j : j + w]
    return cols


def conv2d(x, weight, bias=None) -> np.ndarray:
    """Dense correlation with weight (C_out, C_in, kh, kw), same padding."""
    x = as_tensor(x, "input")
    weight = np.asarray(weight, dtype=np.float64)
    if weight.ndim != 4 or weight.shape[1] != x.shape[0]:
        raise ShapeMismatch(f"conv weight must be (out, {x.shape[0]}, kh, kw), got {weight.shape}")
    co, ci, kh, kw = weight.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise ShapeMismatch("kernel dims must be odd")
    cols = im2col(x, kh, kw)
    out = np.einsum("ock,ckhw->ohw", weight.reshape(co, ci, kh * kw), cols, optimize=False)
    if bias is not None:
        out = out + np.asarray(bias, dtype=np.float64)[:, None, None]
    return out
