"""Self-check suites driven by the CLI (``loss-check``, ``kernel-bench --oracle-check``)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from .geometry import Lane
from .kernels import DeformParams, LkaWeights, VARIANTS, conv2d, deformable_sample, lka_forward, msa_forward
from .kernels import reference as ref
from .losses import GliouParams, gliou, gliou_loss_and_grad, liou

FD_STEP = 1e-4
FD_TOL = 1e-5
KINK_MARGIN = 1e-3      # in units of e


@dataclass
class CheckRow:
    name: str
    value: float
    tol: float
    ok: bool

    def line(self) -> str:
        return f"{self.name:<28} {self.value:.3e}  tol {self.tol:.0e}  {'PASS' if self.ok else 'FAIL'}"


def central_difference(f: Callable[[np.ndarray], float], xs: np.ndarray, idx, h: float = FD_STEP):
    out = np.zeros_like(xs)
    for i in idx:
        up = xs.copy()
        dn = xs.copy()
        up[i] += h
        dn[i] -= h
        out[i] = (f(up) - f(dn)) / (2.0 * h)
    return out


def random_lane_pair(rng: np.random.Generator, e: float, k: int = 18, spread: float = 8.0,
                     avoid_kinks: bool = True):
    """Random (pred, gt) lanes with a jointly present run and no slice near a kink."""
    gt = rng.uniform(0.0, 800.0, size=k)
    d = rng.normal(0.0, spread * e, size=k) * rng.uniform(0.05, 1.0)
    if avoid_kinks:
        for _ in range(100):
            ad = np.abs(d)
            bad = (ad < KINK_MARGIN * e) | (np.abs(ad - 2 * e) < KINK_MARGIN * e)
            if not bad.any():
                break
            d[bad] = rng.normal(0.0, spread * e, size=int(bad.sum()))
    pred = gt + d
    lo = int(rng.integers(0, k // 3))
    hi = int(rng.integers(2 * k // 3, k + 1))
    pred[:lo] = np.nan
    gt[hi:] = np.nan
    return Lane(pred), Lane(gt)


def gradient_rel_error(grad: np.ndarray, fd: np.ndarray) -> float:
    """Max abs deviation relative to the largest FD component."""
    scale = max(float(np.max(np.abs(fd))), 1e-300)
    return float(np.max(np.abs(grad - fd)) / scale)


def loss_check(seed: int = 0, trials: int = 1000, grad_fn: Optional[Callable] = None) -> List[CheckRow]:
    if trials <= 0:
        return []
    grad_fn = grad_fn or gliou_loss_and_grad
    rng = np.random.default_rng(seed)
    p = GliouParams(15.0)
    e = p.e

    worst_grad = 0.0
    for _ in range(trials):
        pred, gt = random_lane_pair(rng, e)
        _, g = grad_fn(pred, gt, p)
        idx = np.flatnonzero(pred.present & gt.present)
        fd = central_difference(lambda xs: 1.0 - gliou(Lane(xs), gt, p), pred.xs.copy(), idx)
        worst_grad = max(worst_grad, gradient_rel_error(g[idx], fd[idx]))

    worst_degen = 0.0
    out_of_range = 0
    for _ in range(trials):
        gt = rng.uniform(0, 800, size=12)
        close = Lane(gt + rng.uniform(-2 * e, 2 * e, size=12))
        worst_degen = max(worst_degen, abs(gliou(close, Lane(gt), p) - liou(close, Lane(gt), p)))
        far = Lane(gt + rng.normal(0, 50 * e, size=12))
        v = gliou(far, Lane(gt), p)
        out_of_range += not (-2.0 < v <= 1.0)

    return [
        CheckRow("gliou_grad_fd_rel_err", worst_grad, FD_TOL, worst_grad < FD_TOL),
        CheckRow("gliou_liou_degeneration", worst_degen, 0.0, worst_degen == 0.0),
        CheckRow("gliou_out_of_range_count", float(out_of_range), 0.0, out_of_range == 0),
    ]


def random_kernel_instance(rng: np.random.Generator, max_c: int = 8, max_hw: int = 16):
    c = int(rng.integers(1, max_c + 1))
    h = int(rng.integers(1, max_hw + 1))
    w = int(rng.integers(1, max_hw + 1))
    return c, h, w


def kernel_oracle_check(seed: int = 0, instances: int = 5, max_c: int = 4, max_hw: int = 8) -> List[CheckRow]:
    """Vectorized kernels vs the nested-loop reference on small random inputs."""
    rng = np.random.default_rng(seed)
    worst = {f"msa-{v}": 0.0 for v in VARIANTS}
    worst.update({"lka": 0.0, "deform": 0.0, "deform_zero_offset": 0.0})
    for _ in range(instances):
        c, h, w = random_kernel_instance(rng, max_c, max_hw)
        x = rng.normal(size=(c, h, w))
        weights = LkaWeights.random(c, rng)
        for v in VARIANTS:
            diff = np.max(np.abs(msa_forward(x, weights, v) - ref.naive_msa(x, weights, v)))
            worst[f"msa-{v}"] = max(worst[f"msa-{v}"], float(diff))
        worst["lka"] = max(worst["lka"], float(np.max(np.abs(lka_forward(x, weights) - ref.naive_lka(x, weights)))))
        groups = 2 if c % 2 == 0 else 1
        dp = DeformParams(rng.normal(size=(c, c, 3, 3)), groups)
        off = rng.normal(0, 1.5, size=(18 * groups, h, w))
        got = deformable_sample(x, off, dp)
        worst["deform"] = max(worst["deform"], float(np.max(np.abs(got - ref.naive_deformable(x, off, dp.weight, groups)))))
        zero = deformable_sample(x, np.zeros_like(off), dp)
        worst["deform_zero_offset"] = max(worst["deform_zero_offset"], float(np.max(np.abs(zero - conv2d(x, dp.weight)))))
    rows = []
    for name, val in worst.items():
        tol = 1e-12 if name == "deform_zero_offset" else 1e-6
        rows.append(CheckRow(name, val, tol, val <= tol))
    return rows
