"""Naive nested-loop versions of every kernel.

Deliberately written scalar-by-scalar on Python lists, sharing no code
with the vectorized kernels, so they can serve as an independent check.
Slow; keep inputs small.
"""

from __future__ import annotations

import math

import numpy as np


def _zeros(c, h, w):
    return [[[0.0] * w for _ in range(h)] for _ in range(c)]


def naive_depthwise(x, kernel):
    x = np.asarray(x, dtype=float).tolist()
    kernel = np.asarray(kernel, dtype=float).tolist()
    c, h, w = len(x), len(x[0]), len(x[0][0])
    kh, kw = len(kernel[0]), len(kernel[0][0])
    out = _zeros(c, h, w)
    for ch in range(c):
        xc, kc = x[ch], kernel[ch]
        for i in range(h):
            for j in range(w):
                acc = 0.0
                for a in range(kh):
                    yi = i + a - kh // 2
                    if yi < 0 or yi >= h:
                        continue
                    row, krow = xc[yi], kc[a]
                    for b in range(kw):
                        xj = j + b - kw // 2
                        if 0 <= xj < w:
                            acc += krow[b] * row[xj]
                out[ch][i][j] = acc
    return np.array(out)


def naive_pointwise(x, weight, bias=None):
    x = np.asarray(x, dtype=float).tolist()
    weight = np.asarray(weight, dtype=float).tolist()
    c, h, w = len(x), len(x[0]), len(x[0][0])
    out = _zeros(len(weight), h, w)
    for o in range(len(weight)):
        b = 0.0 if bias is None else float(bias[o])
        for i in range(h):
            for j in range(w):
                acc = b
                for ch in range(c):
                    acc += weight[o][ch] * x[ch][i][j]
                out[o][i][j] = acc
    return np.array(out)


def naive_conv2d(x, weight, bias=None):
    x = np.asarray(x, dtype=float).tolist()
    weight = np.asarray(weight, dtype=float).tolist()
    c, h, w = len(x), len(x[0]), len(x[0][0])
    kh, kw = len(weight[0][0]), len(weight[0][0][0])
    out = _zeros(len(weight), h, w)
    for o in range(len(weight)):
        for i in range(h):
            for j in range(w):
                acc = 0.0 if bias is None else float(bias[o])
                for ch in range(c):
                    for a in range(kh):
                        yi = i + a - kh // 2
                        for b in range(kw):
                            xj = j + b - kw // 2
                            if 0 <= yi < h and 0 <= xj < w:
                                acc += weight[o][ch][a][b] * x[ch][yi][xj]
                out[o][i][j] = acc
    return np.array(out)


def _gelu(v):
    return 0.5 * v * (1.0 + math.erf(v / math.sqrt(2.0)))


def naive_msa(x, w, variant="C"):
    x = np.asarray(x, dtype=float)
    if variant == "baseline":
        pre = x if w.lin is None else naive_pointwise(x, w.lin)
        return naive_pointwise(naive_depthwise(pre, w.dconv11), w.w1)
    if variant == "C":
        base = naive_depthwise(x, w.dconv5)
    else:
        base = x if w.lin is None else naive_pointwise(x, w.lin)
    total = base.copy() if variant in ("B", "C") else np.zeros_like(base)
    for row, col in w.strips:
        if w.parallel_strips:
            total = total + naive_depthwise(base, row) + naive_depthwise(base, col)
        else:
            total = total + naive_depthwise(naive_depthwise(base, row), col)
    return naive_pointwise(total, w.w1)


def naive_lka(x, w, variant="C"):
    x = np.asarray(x, dtype=float)
    att = naive_msa(x, w, variant)
    v = naive_pointwise(x, w.w2)
    c, h, wd = x.shape
    z1 = _zeros(c, h, wd)
    for ch in range(c):
        for i in range(h):
            for j in range(wd):
                z1[ch][i][j] = att[ch, i, j] * v[ch, i, j] + x[ch, i, j]
    z1 = np.array(z1)
    hid = naive_pointwise(z1, w.ffn_w1, w.ffn_b1)
    act = {"gelu": _gelu, "relu": lambda t: t if t > 0 else 0.0, "none": lambda t: t}[w.activation]
    hid = np.array([[[act(t) for t in row] for row in plane] for plane in hid.tolist()])
    return naive_pointwise(hid, w.ffn_w2, w.ffn_b2) + z1


def naive_bilinear(plane, py, px):
    h, w = len(plane), len(plane[0])
    y0, x0 = math.floor(py), math.floor(px)
    fy, fx = py - y0, px - x0
    total = 0.0
    for yy, wy in ((y0, 1.0 - fy), (y0 + 1, fy)):
        for xx, wx in ((x0, 1.0 - fx), (x0 + 1, fx)):
            if 0 <= yy < h and 0 <= xx < w:
                total += wy * wx * plane[yy][xx]
    return total


def naive_deformable(feat, offsets, weight, groups):
    feat = np.asarray(feat, dtype=float).tolist()
    offsets = np.asarray(offsets, dtype=float).tolist()
    weight = np.asarray(weight, dtype=float).tolist()
    c, h, w = len(feat), len(feat[0]), len(feat[0][0])
    per_group = c // groups
    out = _zeros(len(weight), h, w)
    for o in range(len(weight)):
        for i in range(h):
            for j in range(w):
                acc = 0.0
                for ch in range(c):
                    g = ch // per_group
                    tap = 0
                    for ky in (-1, 0, 1):
                        for kx in (-1, 0, 1):
                            base = (g * 9 + tap) * 2
                            sx = j + kx + offsets[base][i][j]
                            sy = i + ky + offsets[base + 1][i][j]
                            acc += weight[o][ch][ky + 1][kx + 1] * naive_bilinear(feat[ch], sy, sx)
                            tap += 1
                out[o][i][j] = acc
    return np.array(out)
