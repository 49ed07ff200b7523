"""Dynamic label assignment of proposal lanes to ground-truth lanes.

Each gt lane gets a quota ``k_g = clamp(round(sum of its top-k_max
positive GLIoUs), 1, k_max)``. Proposals are then distributed by solving
one assignment problem over the gt "slots", lexicographically:

1. cover as many gts as possible with at least one proposal,
2. fill as many quota slots as possible,
3. minimise the summed cost ``(1 - score) + (1 - GLIoU)``.

A proposal goes to at most one gt, so a proposal wanted by two gts ends
up with the one where it is cheaper overall. Pairs without a jointly
present slice are never matched.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import EmptyProposals
from .geometry import Lane
from .losses import GliouParams, gliou_batch

# upper bound of a single cost: (1 - score) <= 1, (1 - gliou) < 3
MAX_PAIR_COST = 4.0


@dataclass(frozen=True)
class AssignResult:
    matches: Tuple[Tuple[int, int], ...]     # (proposal, gt), sorted by proposal
    n_proposals: int

    @property
    def positive(self) -> np.ndarray:
        mask = np.zeros(self.n_proposals, dtype=bool)
        for p, _ in self.matches:
            mask[p] = True
        return mask

    @property
    def negatives(self) -> List[int]:
        return [int(i) for i in np.flatnonzero(~self.positive)]

    def gt_of(self) -> np.ndarray:
        """Assigned gt index per proposal, -1 for negatives."""
        out = np.full(self.n_proposals, -1, dtype=np.int64)
        for p, g in self.matches:
            out[p] = g
        return out


def cost_matrix(proposals: Sequence[Tuple[Lane, float]], gts: Sequence[Lane], p: GliouParams):
    """(cost, gliou) matrices of shape (n_proposals, n_gts); inf/NaN where undefined."""
    pred = np.stack([lane.xs for lane, _ in proposals])
    gt = np.stack([lane.xs for lane in gts])
    iou = gliou_batch(pred[:, None, :], gt[None, :, :], p.e)
    scores = np.array([float(s) for _, s in proposals])
    cost = (1.0 - scores)[:, None] + (1.0 - iou)
    cost = np.where(np.isnan(iou), np.inf, cost)
    return cost, iou


def dynamic_k(iou: np.ndarray, k_max: int) -> np.ndarray:
    """Per-gt quota from the summed top-k_max positive GLIoUs."""
    pos = np.where(np.isnan(iou), 0.0, np.maximum(iou, 0.0))
    top = -np.sort(-pos, axis=0)[:k_max]
    return np.clip(np.round(top.sum(axis=0)), 1, k_max).astype(int)


def dynamic_assign(
    proposals: Sequence[Tuple[Lane, float]],
    gts: Sequence[Lane],
    p: GliouParams = GliouParams(),
    k_max: int = 4,
) -> AssignResult:
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if len(proposals) == 0:
        raise EmptyProposals("no proposals to assign")
    n = len(proposals)
    if len(gts) == 0:
        return AssignResult((), n)

    cost, iou = cost_matrix(proposals, gts, p)
    quota = dynamic_k(iou, k_max)

    # slot rows: one per quota unit; real columns are proposals, plus a
    # private "leave empty" column per slot priced by slot rank
    slot_gt = np.repeat(np.arange(len(gts)), quota)
    first = np.r_[True, slot_gt[1:] != slot_gt[:-1]]
    n_slots = len(slot_gt)
    fill_bonus = MAX_PAIR_COST * n_slots + 10.0
    cover_bonus = (fill_bonus + MAX_PAIR_COST) * n_slots * 2 + 10.0
    empty_cost = np.where(first, cover_bonus + fill_bonus, fill_bonus)

    big = np.full((n_slots, n + n_slots), np.inf)
    big[:, :n] = cost.T[slot_gt]
    big[np.arange(n_slots), n + np.arange(n_slots)] = empty_cost
    rows, cols = linear_sum_assignment(big)
    matches = sorted(
        (int(c), int(slot_gt[r])) for r, c in zip(rows, cols) if c < n and np.isfinite(big[r, c])
    )
    return AssignResult(tuple(matches), n)
