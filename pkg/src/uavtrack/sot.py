"""Single-object reporting on top of the multi-object tracker.

Exactly one box is reported per frame, chosen in priority order:

1. the online target with the highest confidence (ties: lower id);
2. the previously reported id while it is lost and within the buffer,
   at its Kalman-predicted box;
3. the last reported location (initially the given initial box, or a
   1x1 box at the frame center).
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

from .geometry import BoundingBox, Detection
from .tracker import Tracker, TrackOutput, run_sequence


class Source(enum.Enum):
    Online = "Online"
    LostPrediction = "LostPrediction"
    LastKnown = "LastKnown"


@dataclass(frozen=True)
class SotRecord:
    frame: int
    box: Optional[BoundingBox]
    source: Source
    reported_id: Optional[int]
    score: Optional[float] = None


def default_box(frame_size: Optional[Tuple[float, float]]) -> BoundingBox:
    if frame_size is None:
        return BoundingBox(0.0, 0.0, 1.0, 1.0)
    w, h = frame_size
    return BoundingBox(w / 2.0 - 0.5, h / 2.0 - 0.5, 1.0, 1.0)


def sot_select(
    frame_outputs: Iterable[Tuple[int, Sequence[TrackOutput], Sequence[TrackOutput]]],
    track_buffer: int,
    initial_box: Optional[BoundingBox] = None,
    frame_size: Optional[Tuple[float, float]] = None,
    abstain_when_lost: bool = False,
) -> List[SotRecord]:
    """Reduce per-frame ``(frame, online, lost)`` tracker outputs to one box per frame.

    With ``abstain_when_lost`` the last-known fallback reports an empty box
    (``box=None``) instead of repeating the previous location.
    """
    last_box = initial_box if initial_box is not None else default_box(frame_size)
    prev_id: Optional[int] = None
    records = []
    for frame, online, lost in frame_outputs:
        if online:
            best = min(online, key=lambda t: (-t.score, t.id))
            prev_id = best.id
            last_box = best.box
            records.append(SotRecord(frame, best.box, Source.Online, best.id, best.score))
            continue
        match = None
        if prev_id is not None:
            for t in lost:
                if t.id == prev_id and frame - t.last_frame <= track_buffer:
                    match = t
                    break
        if match is not None:
            last_box = match.box
            records.append(SotRecord(frame, match.box, Source.LostPrediction, match.id, match.score))
        else:
            box = None if abstain_when_lost else last_box
            records.append(SotRecord(frame, box, Source.LastKnown, prev_id))
    return records


def track_sot(
    tracker: Tracker,
    frames,
    n_frames: int,
    initial_box: Optional[BoundingBox] = None,
    frame_size: Optional[Tuple[float, float]] = None,
    embeddings=None,
    gmc=None,
    abstain_when_lost: bool = False,
) -> List[SotRecord]:
    """Run ``tracker`` over a sequence and apply :func:`sot_select`.

    A known initial box enters frame 1 as an extra detection with score 1.0
    placed ahead of the detector's own boxes, and is reported verbatim for
    frame 1.
    """
    if initial_box is not None and n_frames >= 1:
        frames = dict(frames)
        frames[1] = [Detection(initial_box, 1.0, None)] + list(frames.get(1, []))
    results = run_sequence(tracker, frames, n_frames, embeddings, gmc)
    records = sot_select(results, tracker.config.track_buffer, initial_box, frame_size, abstain_when_lost)
    if initial_box is not None and records:
        # the given location is exact; avoid reporting its Kalman round-trip
        first = records[0]
        records[0] = SotRecord(first.frame, initial_box, first.source, first.reported_id, first.score)
    return records


def write_sot_json(path, records: Sequence[SotRecord]) -> None:
    res = [r.box.to_list() if r.box is not None else [] for r in records]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump({"res": res}, fh)
        fh.write("\n")


def read_sot_json(path) -> List[Optional[BoundingBox]]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict) or "res" not in data:
        raise ValueError(f"{path}: expected an object with a 'res' list")
    out = []
    for i, row in enumerate(data["res"]):
        if row is None or len(row) == 0:
            out.append(None)
        elif len(row) != 4:
            raise ValueError(f"{path}: res[{i}] must have 4 numbers, got {row!r}")
        else:
            out.append(BoundingBox(*(float(v) for v in row)))
    return out
