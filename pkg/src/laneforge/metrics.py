"""CULane-style F1 and TuSimple-style Acc/FPR/FNR."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import EmptyLane, ShapeMismatch
from .geometry import Lane, SliceScheme

CULANE_WIDTH = 30
CULANE_IOU_THRESH = 0.5
TUSIMPLE_PT_TOL = 20.0
TUSIMPLE_LANE_TOL = 0.85


@dataclass
class EvalReport:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    precision: float = 1.0
    recall: float = 1.0
    f1: float = 1.0
    acc: Optional[float] = None
    fpr: Optional[float] = None
    fnr: Optional[float] = None

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


def prf(tp: int, fp: int, fn: int):
    """Precision, recall, F1; all three are 1 when every count is 0."""
    if tp == fp == fn == 0:
        return 1.0, 1.0, 1.0
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f1


def lane_rows(lane: Lane, canvas: SliceScheme, width_px: float = CULANE_WIDTH):
    """Per-row covered column spans [lo, hi] of a thick lane.

    Between consecutive slices the lane centre is linearly interpolated
    on every pixel row; a row covers columns j with
    ``x - width/2 <= j < x + width/2``, clipped to the canvas.
    Returns (rows, lo, hi) integer arrays; rows with nothing left after
    clipping have lo > hi.
    """
    m = lane.present
    if not m.any():
        raise EmptyLane("lane has no present slice")
    ys = canvas.ys[m][::-1]
    xs = lane.xs[m][::-1]
    rows = np.arange(math.ceil(ys[0]), math.floor(ys[-1]) + 1)
    if rows.size == 0:
        rows = np.array([int(round(ys[0]))])
    xc = np.interp(rows, ys, xs)
    half = width_px / 2.0
    lo = np.maximum(np.ceil(xc - half), 0).astype(np.int64)
    hi = np.minimum(np.ceil(xc + half) - 1, canvas.image_w - 1).astype(np.int64)
    keep = (rows >= 0) & (rows < canvas.image_h)
    return rows[keep].astype(np.int64), lo[keep], hi[keep]


def rasterize_lane(lane: Lane, canvas: SliceScheme, width_px: float = CULANE_WIDTH) -> np.ndarray:
    """Binary (h, w) mask of the thick lane."""
    mask = np.zeros((canvas.image_h, canvas.image_w), dtype=bool)
    for r, a, b in zip(*lane_rows(lane, canvas, width_px)):
        if a <= b:
            mask[r, a : b + 1] = True
    return mask


def lane_iou_raster(a: Lane, b: Lane, width_px: float = CULANE_WIDTH,
                    canvas: SliceScheme = None) -> float:
    """IoU of two thick lanes on the pixel canvas, computed row by row."""
    if canvas is None:
        raise ValueError("a canvas slice scheme is required")
    if a.xs.shape != b.xs.shape:
        raise ShapeMismatch("lanes are on different slice schemes")
    ra, la, ha = lane_rows(a, canvas, width_px)
    rb, lb, hb = lane_rows(b, canvas, width_px)
    len_a = np.maximum(ha - la + 1, 0).sum()
    len_b = np.maximum(hb - lb + 1, 0).sum()
    common, ia, ib = np.intersect1d(ra, rb, assume_unique=True, return_indices=True)
    inter = np.maximum(np.minimum(ha[ia], hb[ib]) - np.maximum(la[ia], lb[ib]) + 1, 0).sum()
    union = len_a + len_b - inter
    return float(inter / union) if union > 0 else 0.0


def iou_matrix(preds: Sequence[Lane], gts: Sequence[Lane], canvas: SliceScheme,
               width_px: float = CULANE_WIDTH) -> np.ndarray:
    out = np.zeros((len(preds), len(gts)))
    for i, p in enumerate(preds):
        for j, g in enumerate(gts):
            out[i, j] = lane_iou_raster(p, g, width_px, canvas)
    return out


def match_lanes(iou: np.ndarray, thresh: float) -> List[tuple]:
    """Maximum-cardinality matching over pairs with IoU > thresh.

    Among maximum matchings the one with the largest summed IoU wins.
    """
    if iou.size == 0:
        return []
    ok = iou > thresh
    bonus = iou.shape[0] + iou.shape[1] + 1.0
    cost = np.where(ok, -(bonus + iou), 0.0)
    rows, cols = linear_sum_assignment(cost)
    return [(int(r), int(c)) for r, c in zip(rows, cols) if ok[r, c]]


def culane_image_counts(preds, gts, canvas, iou_thresh=CULANE_IOU_THRESH, width_px=CULANE_WIDTH):
    iou = iou_matrix(preds, gts, canvas, width_px)
    tp = len(match_lanes(iou, iou_thresh))
    return tp, len(preds) - tp, len(gts) - tp


def culane_f1(preds: Sequence[Sequence[Lane]], gts: Sequence[Sequence[Lane]],
              canvas: SliceScheme, iou_thresh: float = CULANE_IOU_THRESH,
              width_px: float = CULANE_WIDTH) -> EvalReport:
    if len(preds) != len(gts):
        raise ShapeMismatch("prediction and ground-truth image lists differ in length")
    tp = fp = fn = 0
    for p, g in zip(preds, gts):
        a, b, c = culane_image_counts(p, g, canvas, iou_thresh, width_px)
        tp, fp, fn = tp + a, fp + b, fn + c
    return EvalReport(tp, fp, fn, *prf(tp, fp, fn))


@dataclass
class TusimpleImageCounts:
    correct_points: int
    total_points: int
    false_preds: int
    n_pred: int
    missed_gts: int
    n_gt: int


def _correct_points(pred_xs, gt_xs, pt_tol):
    gm = ~np.isnan(gt_xs)
    d = np.abs(pred_xs[gm] - gt_xs[gm])
    return int(np.sum(d < pt_tol)), int(gm.sum())     # NaN pred compares False


def tusimple_image_counts(preds, gts, pt_tol=TUSIMPLE_PT_TOL, lane_tol=TUSIMPLE_LANE_TOL,
                          best_match=True) -> TusimpleImageCounts:
    """Point and lane counts for one image.

    With ``best_match`` each lane is compared with the counterpart giving
    the most correct points; otherwise lanes are compared by index.
    """
    n_p, n_g = len(preds), len(gts)
    hits = np.zeros((n_p, n_g), dtype=np.int64)
    for i, p in enumerate(preds):
        for j, g in enumerate(gts):
            if p.xs.shape != g.xs.shape:
                raise ShapeMismatch("lanes use different h_samples")
            hits[i, j], _ = _correct_points(p.xs, g.xs, pt_tol)
    sizes = np.array([g.n_present for g in gts], dtype=np.int64)
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(sizes[None, :] > 0, hits / np.maximum(sizes, 1)[None, :], 0.0)

    if best_match:
        gt_hits = hits.max(axis=0) if n_p else np.zeros(n_g, dtype=np.int64)
        gt_ok = frac.max(axis=0) > lane_tol if n_p else np.zeros(n_g, dtype=bool)
        pred_ok = frac.max(axis=1) > lane_tol if n_g else np.zeros(n_p, dtype=bool)
    else:
        n = min(n_p, n_g)
        diag = np.arange(n)
        gt_hits = np.zeros(n_g, dtype=np.int64)
        gt_hits[:n] = hits[diag, diag]
        gt_ok = np.zeros(n_g, dtype=bool)
        gt_ok[:n] = frac[diag, diag] > lane_tol
        pred_ok = np.zeros(n_p, dtype=bool)
        pred_ok[:n] = frac[diag, diag] > lane_tol
    return TusimpleImageCounts(
        correct_points=int(gt_hits.sum()),
        total_points=int(sizes.sum()),
        false_preds=int((~pred_ok).sum()),
        n_pred=n_p,
        missed_gts=int((~gt_ok).sum()),
        n_gt=n_g,
    )


def tusimple_eval(preds: Sequence[Sequence[Lane]], gts: Sequence[Sequence[Lane]],
                  pt_tol: float = TUSIMPLE_PT_TOL, lane_tol: float = TUSIMPLE_LANE_TOL,
                  best_match: bool = True) -> EvalReport:
    """Acc = correct points / gt points; FPR = false preds / preds; FNR = missed gts / gts."""
    if len(preds) != len(gts):
        raise ShapeMismatch("prediction and ground-truth image lists differ in length")
    tot = TusimpleImageCounts(0, 0, 0, 0, 0, 0)
    for p, g in zip(preds, gts):
        c = tusimple_image_counts(p, g, pt_tol, lane_tol, best_match)
        for k in vars(tot):
            setattr(tot, k, getattr(tot, k) + getattr(c, k))
    return tusimple_report(tot)


def tusimple_report(tot: TusimpleImageCounts) -> EvalReport:
    tp = tot.n_pred - tot.false_preds
    rep = EvalReport(tp, tot.false_preds, tot.missed_gts, *prf(tp, tot.false_preds, tot.missed_gts))
    rep.acc = tot.correct_points / tot.total_points if tot.total_points else 1.0
    rep.fpr = tot.false_preds / tot.n_pred if tot.n_pred else 0.0
    rep.fnr = tot.missed_gts / tot.n_gt if tot.n_gt else 0.0
    return rep
