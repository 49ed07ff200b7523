"""Throughput measurement for the forward kernels."""

from __future__ import annotations

import time
from typing import Iterable, List, Tuple

import numpy as np

from .conv import depthwise_conv
from .deform import DeformParams, deformable_sample
from .lka import VARIANTS, LkaWeights, lka_forward, msa_forward


def parse_size(text: str) -> Tuple[int, int, int]:
    """'CxHxW' -> (C, H, W)."""
    parts = text.lower().split("x")
    if len(parts) != 3:
        raise ValueError(f"size must look like CxHxW, got {text!r}")
    c, h, w = (int(p) for p in parts)
    if min(c, h, w) < 1:
        raise ValueError(f"size components must be positive, got {text!r}")
    return c, h, w


def _msa_macs(c, h, w, weights: LkaWeights, variant):
    cells = h * w
    strips = sum(2 * row.shape[-1] for row, _ in weights.strips)
    lin = c * c * cells
    if variant == "baseline":
        return lin + c * cells * 121 + lin
    if variant == "C":
        return c * cells * 25 + c * cells * strips + lin
    return lin + c * cells * strips + lin


def op_counts(size, weights: LkaWeights, variant: str, groups: int = 2):
    """Multiply-accumulate counts per kernel; independent of timing."""
    c, h, w = size
    cells = h * w
    hidden = weights.ffn_w1.shape[0]
    msa = _msa_macs(c, h, w, weights, variant)
    return {
        "dconv5": c * cells * 25,
        f"msa-{variant}": msa,
        "lka": msa + c * c * cells + c * cells + 2 * c * hidden * cells,
        "deform": c * cells * 9 * 4 + c * c * cells * 9,
    }


def kernel_bench(sizes: Iterable[Tuple[int, int, int]], variant: str = "C", seed: int = 0,
                 repeats: int = 3) -> List[dict]:
    """One row per (kernel, size): best-of-``repeats`` ns/cell and MAC count."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown MSA variant {variant!r}")
    rows = []
    for size in sizes:
        c, h, w = size
        rng = np.random.default_rng(seed)
        x = rng.normal(size=size)
        weights = LkaWeights.random(c, rng)
        groups = 2 if c % 2 == 0 else 1
        dparams = DeformParams(rng.normal(size=(c, c, 3, 3)), groups)
        offsets = rng.normal(0, 1.0, size=(18 * groups, h, w))
        jobs = {
            "dconv5": lambda: depthwise_conv(x, weights.dconv5),
            f"msa-{variant}": lambda: msa_forward(x, weights, variant),
            "lka": lambda: lka_forward(x, weights, variant),
            "deform": lambda: deformable_sample(x, offsets, dparams),
        }
        ops = op_counts(size, weights, variant, groups)
        for name, fn in jobs.items():
            best = float("inf")
            for _ in range(max(1, repeats)):
                t0 = time.perf_counter_ns()
                fn()
                best = min(best, time.perf_counter_ns() - t0)
            rows.append({
                "kernel": name,
                "size": f"{c}x{h}x{w}",
                "ns_per_cell": best / (c * h * w),
                "ops": ops[name],
            })
    return rows
