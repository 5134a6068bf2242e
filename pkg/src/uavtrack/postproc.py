"""Linear gap filling for tracklets (offline post-processing)."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Tuple

from .geometry import BoundingBox


@dataclass
class Tracklet:
    id: int
    frames: List[int] = field(default_factory=list)
    boxes: List[BoundingBox] = field(default_factory=list)
    scores: List[float] = field(default_factory=list)

    def __post_init__(self):
        if not self.scores:
            self.scores = [1.0] * len(self.frames)
        if not (len(self.frames) == len(self.boxes) == len(self.scores)):
            raise ValueError(f"tracklet {self.id}: frames/boxes/scores lengths differ")
        if any(b <= a for a, b in zip(self.frames, self.frames[1:])):
            raise ValueError(f"tracklet {self.id}: frames must be strictly increasing")


def _lerp(a: float, b: float, k: int, f0: int, gap: int) -> float:
    # multiply before dividing so integer-valued endpoints stay exact
    return a + (b - a) * (k - f0) / gap


def interpolate_tracklet(t: Tracklet, max_gap: int = 20) -> Tracklet:
    frames, boxes, scores = [], [], []
    for idx, f0 in enumerate(t.frames):
        frames.append(f0)
        boxes.append(t.boxes[idx])
        scores.append(t.scores[idx])
        if idx + 1 == len(t.frames):
            break
        f1 = t.frames[idx + 1]
        gap = f1 - f0
        if gap < 2 or gap > max_gap:
            continue
        b0, b1 = t.boxes[idx], t.boxes[idx + 1]
        s = (t.scores[idx] + t.scores[idx + 1]) / 2.0
        for k in range(f0 + 1, f1):
            frames.append(k)
            boxes.append(BoundingBox(
                _lerp(b0.x, b1.x, k, f0, gap),
                _lerp(b0.y, b1.y, k, f0, gap),
                _lerp(b0.w, b1.w, k, f0, gap),
                _lerp(b0.h, b1.h, k, f0, gap),
            ))
            scores.append(s)
    return Tracklet(t.id, frames, boxes, scores)


def interpolate(tracklets: Iterable[Tracklet], max_gap: int = 20) -> List[Tracklet]:
    """Fill every internal gap of 2..max_gap frames with linearly interpolated boxes.

    Filled frames carry the mean score of the two bracketing observations.
    Larger gaps and the track ends are left alone.
    """
    return [interpolate_tracklet(t, max_gap) for t in tracklets]


def rows_to_tracklets(rows: Iterable[Tuple[int, int, BoundingBox, float]]) -> List[Tracklet]:
    by_id: Dict[int, List[Tuple[int, BoundingBox, float]]] = {}
    for frame, tid, box, score in rows:
        by_id.setdefault(tid, []).append((frame, box, score))
    out = []
    for tid in sorted(by_id):
        obs = sorted(by_id[tid], key=lambda r: r[0])
        out.append(Tracklet(tid, [o[0] for o in obs], [o[1] for o in obs], [o[2] for o in obs]))
    return out


def tracklets_to_rows(tracklets: Iterable[Tracklet]) -> List[Tuple[int, int, BoundingBox, float]]:
    rows = [(f, t.id, b, s) for t in tracklets for f, b, s in zip(t.frames, t.boxes, t.scores)]
    rows.sort(key=lambda r: (r[0], r[1]))
    return rows
