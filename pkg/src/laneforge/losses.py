"""Training losses: heat-map focal, masked theta L1, LIoU/GLIoU, cls focal, total."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import NoOverlapSlices, NonFinite, ShapeMismatch
from .geometry import Lane
from .targets import TargetMaps


@dataclass(frozen=True)
class FocalParams:
    alpha: float = 2.0
    beta: float = 4.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("focal exponents must be non-negative")


@dataclass(frozen=True)
class GliouParams:
    e: float = 15.0

    def __post_init__(self):
        if not self.e > 0:
            raise ValueError("extension radius e must be positive")


@dataclass(frozen=True)
class LossWeights:
    w_reg: float
    w_cls: float
    w_hm: float
    w_theta: float

    def __post_init__(self):
        for v in (self.w_reg, self.w_cls, self.w_hm, self.w_theta):
            if not (math.isfinite(v) and v >= 0):
                raise ValueError("loss weights must be finite and non-negative")


@dataclass(frozen=True)
class LossParts:
    reg: float
    cls: float
    hm: float
    theta: float


def _same_shape(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    return a, b


def heatmap_focal_loss(pred, gt, p: FocalParams = FocalParams()) -> float:
    """Penalty-reduced focal loss over a start-point heat map.

    ``pred`` must already be clamped into (0, 1). Cells with gt == 1 are
    positives; elsewhere the loss is damped by (1 - gt)^beta.
    """
    pred, gt = _same_shape(pred, gt)
    pos = gt == 1.0
    pos_term = (1.0 - pred[pos]) ** p.alpha * np.log(pred[pos])
    neg = ~pos
    neg_term = (1.0 - gt[neg]) ** p.beta * pred[neg] ** p.alpha * np.log1p(-pred[neg])
    return float(-(pos_term.sum() + neg_term.sum()) / gt.size)


def theta_l1_loss(pred, gt: TargetMaps, normalize: str = "masked") -> float:
    """L1 between predicted and target theta maps inside the valid region.

    ``normalize="masked"`` averages over valid cells only; ``"full"``
    averages the error over every cell of the grid instead.
    """
    pred, theta = _same_shape(pred, gt.theta_map)
    mask = np.asarray(gt.valid_mask, dtype=bool)
    if mask.shape != theta.shape:
        raise ShapeMismatch("valid_mask shape differs from theta map")
    if normalize == "masked":
        n = int(mask.sum())
        return float(np.abs(pred[mask] - theta[mask]).sum() / n) if n else 0.0
    if normalize == "full":
        return float(np.abs(pred - theta).sum() / theta.size)
    raise ValueError(f"unknown normalization {normalize!r}")


def _offsets(pred: Lane, gt: Lane) -> np.ndarray:
    if pred.xs.shape != gt.xs.shape:
        raise ShapeMismatch("lanes are on different slice schemes")
    both = pred.present & gt.present
    if not both.any():
        raise NoOverlapSlices("prediction and ground truth share no slice")
    return pred.xs[both] - gt.xs[both]


def liou(pred: Lane, gt: Lane, p: GliouParams = GliouParams()) -> float:
    """Line IoU with each point widened to the segment [x - e, x + e]."""
    ad = np.abs(_offsets(pred, gt))
    overlap = 2.0 * p.e - ad
    union = 2.0 * p.e + ad
    return float(overlap.sum() / union.sum())


def gliou_terms(d, e: float):
    """Per-slice (numerator, union) for signed offsets ``d``.

    Works on any array shape; the caller reduces over slices.
    """
    ad = np.abs(d)
    union = 2.0 * e + ad
    overlap = 2.0 * e - ad
    gap = np.maximum(union - 4.0 * e, 0.0)
    return overlap - gap, union


def gliou(pred: Lane, gt: Lane, p: GliouParams = GliouParams()) -> float:
    """LIoU minus the summed gap distance over the summed union.

    Equals :func:`liou` whenever every slice overlaps (|d| <= 2e).
    """
    num, union = gliou_terms(_offsets(pred, gt), p.e)
    return float(num.sum() / union.sum())


def gliou_batch(pred_xs, gt_xs, e: float) -> np.ndarray:
    """GLIoU for stacked lanes of shape (..., k); NaN marks absent slices.

    Rows without any jointly present slice give NaN.
    """
    pred_xs, gt_xs = np.broadcast_arrays(np.asarray(pred_xs, float), np.asarray(gt_xs, float))
    both = ~(np.isnan(pred_xs) | np.isnan(gt_xs))
    d = np.where(both, pred_xs - gt_xs, 0.0)
    num, union = gliou_terms(d, e)
    den = np.where(both, union, 0.0).sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, np.where(both, num, 0.0).sum(axis=-1) / np.where(den > 0, den, 1.0), np.nan)


def gliou_loss_and_grad(pred: Lane, gt: Lane, p: GliouParams = GliouParams()) -> Tuple[float, np.ndarray]:
    """1 - GLIoU and its derivative with respect to every predicted x.

    The gradient has one entry per slice; slices not jointly present get
    0. At d = 0 the zero subgradient is used; at |d| = 2e the gap branch
    is taken (right-continuous in |d|).
    """
    if pred.xs.shape != gt.xs.shape:
        raise ShapeMismatch("lanes are on different slice schemes")
    both = pred.present & gt.present
    if not both.any():
        raise NoOverlapSlices("prediction and ground truth share no slice")
    d = pred.xs[both] - gt.xs[both]
    e = p.e
    num, union = gliou_terms(d, e)
    n = num.sum()
    u = union.sum()

    s = np.sign(d)
    gap_active = np.abs(d) >= 2.0 * e
    dnum = -s * np.where(gap_active, 2.0, 1.0)
    dunion = s
    grad = np.zeros(pred.xs.shape)
    # L = 1 - n/u  =>  dL = -(dn*u - n*du)/u^2
    grad[both] = -(dnum * u - n * dunion) / (u * u)
    return float(1.0 - n / u), grad


def cls_focal_loss(pred_scores, labels, gamma: float = 2.0, alpha_bal: float = 0.25) -> float:
    """Binary focal loss, averaged over proposals."""
    p, y = _same_shape(pred_scores, labels)
    if p.size == 0:
        return 0.0
    pos = y > 0.5
    p_t = np.where(pos, p, 1.0 - p)
    a_t = np.where(pos, alpha_bal, 1.0 - alpha_bal)
    return float(np.mean(-a_t * (1.0 - p_t) ** gamma * np.log(p_t)))


def total_loss(parts, w: LossWeights) -> float:
    """Weighted sum of (GLIoU, classification, heat map, theta) losses."""
    if not isinstance(parts, LossParts):
        parts = LossParts(*parts)
    vals = (parts.reg, parts.cls, parts.hm, parts.theta)
    if not all(math.isfinite(v) for v in vals):
        raise NonFinite(f"loss components must be finite, got {vals}")
    return w.w_reg * parts.reg + w.w_cls * parts.cls + w.w_hm * parts.hm + w.w_theta * parts.theta
