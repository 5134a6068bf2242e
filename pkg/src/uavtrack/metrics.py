"""Challenge metrics: SOT accuracy with the empty-prediction penalty, and
CLEAR-MOT matching with MOTA."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .assoc import FORBIDDEN, solve_assignment
from .geometry import BoundingBox, iou

PENALTY_WEIGHT = 0.2
PENALTY_EXPONENT = 0.3


@dataclass(frozen=True)
class SotFrameRecord:
    pred: Optional[BoundingBox]
    gt: Optional[BoundingBox]
    v: float = 1.0

    def __post_init__(self):
        if self.v > 0 and self.gt is None:
            raise ValueError("a visible frame needs a ground-truth box")

    @property
    def p(self) -> int:
        return 1 if self.pred is None else 0

    @property
    def visible(self) -> bool:
        return self.v > 0


@dataclass(frozen=True)
class SotScore:
    acc: float
    T: int
    T_star: int
    mean_iou_term: float
    penalty_term: float


def sot_accuracy(records: Sequence[SotFrameRecord]) -> SotScore:
    """Per-frame IoU on visible frames, credit for empty predictions on
    invisible frames, minus ``0.2 * (missed-visible fraction) ** 0.3``.

    A sequence without visible frames has no penalty.
    """
    T = len(records)
    if T == 0:
        raise ValueError("sot_accuracy needs at least one frame")
    total = 0.0
    t_star = 0
    empty_on_visible = 0
    for r in records:
        if r.visible:
            t_star += 1
            if r.pred is None:
                empty_on_visible += 1
            else:
                total += iou(r.pred, r.gt)
        else:
            total += r.p
    first = total / T
    penalty = PENALTY_WEIGHT * (empty_on_visible / t_star) ** PENALTY_EXPONENT if t_star else 0.0
    return SotScore(first - penalty, T, t_star, first, penalty)


def sot_records(preds: Sequence[Optional[BoundingBox]], gts: Sequence[Optional[BoundingBox]],
                visibility: Sequence[float]) -> List[SotFrameRecord]:
    """Zip per-frame predictions with ground truth; missing predictions are empty."""
    T = max(len(preds), len(gts))
    out = []
    for t in range(T):
        pred = preds[t] if t < len(preds) else None
        gt = gts[t] if t < len(gts) else None
        v = visibility[t] if t < len(visibility) else 0.0
        out.append(SotFrameRecord(pred, gt, v if gt is not None else 0.0))
    return out


# -- CLEAR-MOT ------------------------------------------------------------

FrameBoxes = Mapping[int, Sequence[Tuple[int, BoundingBox]]]


@dataclass
class ClearResult:
    FP: int = 0
    FN: int = 0
    IDS: int = 0
    GT: int = 0
    matches: Dict[int, List[Tuple[int, int]]] = field(default_factory=dict)

    @property
    def mota(self) -> float:
        return mota(self.FP, self.FN, self.IDS, self.GT)


def _check_unique(frames: FrameBoxes, what: str) -> None:
    for f, objs in frames.items():
        ids = [i for i, _ in objs]
        if len(ids) != len(set(ids)):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"{what}: duplicate id(s) {dup} in frame {f}")


def clear_match(gt_frames: FrameBoxes, pred_frames: FrameBoxes, iou_thresh: float = 0.5) -> ClearResult:
    """Frame-by-frame CLEAR-MOT correspondence.

    Correspondences from earlier frames are kept while their IoU stays at or
    above ``iou_thresh``; the rest are assigned by minimum ``1 - IoU`` among
    pairs reaching the threshold. A ground-truth object whose matched
    prediction id differs from its last matched id counts one switch.
    """
    _check_unique(gt_frames, "ground truth")
    _check_unique(pred_frames, "predictions")
    res = ClearResult()
    last_match: Dict[int, int] = {}
    for f in sorted(set(gt_frames) | set(pred_frames)):
        gts = list(gt_frames.get(f, []))
        preds = list(pred_frames.get(f, []))
        res.GT += len(gts)
        if not gts:
            res.FP += len(preds)
            res.matches[f] = []
            continue
        ious = kernels.iou_matrix([b.to_list() for _, b in gts], [b.to_list() for _, b in preds]) \
            if preds else np.zeros((len(gts), 0))
        pred_index = {pid: j for j, (pid, _) in enumerate(preds)}
        pairs: List[Tuple[int, int]] = []
        used_g, used_p = set(), set()
        for i, (gid, _) in enumerate(gts):
            pid = last_match.get(gid)
            j = pred_index.get(pid) if pid is not None else None
            if j is not None and j not in used_p and ious[i, j] >= iou_thresh:
                pairs.append((i, j))
                used_g.add(i)
                used_p.add(j)
        free_g = [i for i in range(len(gts)) if i not in used_g]
        free_p = [j for j in range(len(preds)) if j not in used_p]
        if free_g and free_p:
            sub = ious[np.ix_(free_g, free_p)]
            cost = np.where(sub >= iou_thresh, 1.0 - sub, FORBIDDEN)
            for a, b in solve_assignment(cost):
                if sub[a, b] >= iou_thresh:
                    i, j = free_g[a], free_p[b]
                    pairs.append((i, j))
                    gid, pid = gts[i][0], preds[j][0]
                    if gid in last_match and last_match[gid] != pid:
                        res.IDS += 1
        for i, j in pairs:
            last_match[gts[i][0]] = preds[j][0]
        res.FN += len(gts) - len(pairs)
        res.FP += len(preds) - len(pairs)
        res.matches[f] = sorted((gts[i][0], preds[j][0]) for i, j in pairs)
    return res


def mota(FP: int, FN: int, IDS: int, GT: int) -> float:
    if GT <= 0:
        raise ValueError("MOTA is undefined without ground-truth objects")
    return 1.0 - (FP + FN + IDS) / GT


def average_mota(per_sequence: Sequence[float]) -> float:
    if len(per_sequence) == 0:
        raise ValueError("average_mota needs at least one sequence")
    return math.fsum(per_sequence) / len(per_sequence)
