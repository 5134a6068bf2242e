"""Readers and writers for the on-disk formats.

Detections and ground truth use MOT-style CSV rows
``frame,id,x,y,w,h,score,class,visibility`` (``id = -1`` for raw
detections). Track output rows are ``frame,id,x,y,w,h,score,-1,-1,-1``.
Embeddings are ``frame,det_index,v1,...,v_dim``. Numbers are written with
``repr`` so every file round-trips exactly.

A sequence directory holds ``seqinfo.json`` plus ``det.txt`` and optionally
``emb.txt``, ``gmc.txt``, ``gt.txt`` and ``corr.txt``.
"""
from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .cmc import AffineTransform, load_gmc, write_gmc
from .errors import ParseError
from .geometry import BoundingBox, Detection

log = logging.getLogger(__name__)

GtObject = Tuple[int, BoundingBox, float]  # (id, box, visibility)


def _rows(path):
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if line and not line.startswith("#"):
                yield line_no, line.split(",")


def _num(path, line_no, text, kind=float):
    try:
        val = kind(text)
    except ValueError:
        raise ParseError(path, line_no, f"not a number: {text!r}") from None
    if kind is float and not math.isfinite(val):
        raise ParseError(path, line_no, f"non-finite value {text!r}")
    return val


def _frame(path, line_no, text) -> int:
    f = _num(path, line_no, text, int)
    if f < 1:
        raise ParseError(path, line_no, f"frame index must be >= 1, got {f}")
    return f


def _box_fields(path, line_no, fields) -> Tuple[float, float, float, float]:
    x, y, w, h = (_num(path, line_no, v) for v in fields)
    if w < 0 or h < 0:
        raise ParseError(path, line_no, f"negative box size w={w} h={h}")
    return x, y, w, h


def _keep_box(w, h, frame_size, drop_full_frame) -> bool:
    if w == 0 or h == 0:
        return False
    if drop_full_frame and frame_size is not None and w * h >= frame_size[0] * frame_size[1]:
        return False
    return True


def parse_detections(
    path,
    frame_size: Optional[Tuple[float, float]] = None,
    drop_full_frame: bool = True,
) -> Dict[int, List[Detection]]:
    """Group detection rows by frame, keeping file order.

    ``embedding_ref`` is the 0-based position of the row among its frame's
    rows (before any dropping), matching the ``det_index`` of the embedding
    file. Zero-sized boxes and, when ``frame_size`` is known, boxes covering
    the whole frame are dropped and counted in the log.
    """
    out: Dict[int, List[Detection]] = {}
    seen: Dict[int, int] = {}
    dropped = 0
    for line_no, f in _rows(path):
        if len(f) < 7:
            raise ParseError(path, line_no, f"expected at least 7 fields, got {len(f)}")
        frame = _frame(path, line_no, f[0])
        x, y, w, h = _box_fields(path, line_no, f[2:6])
        score = _num(path, line_no, f[6])
        if not 0.0 <= score <= 1.0:
            raise ParseError(path, line_no, f"score {score} outside [0, 1]")
        idx = seen.get(frame, 0)
        seen[frame] = idx + 1
        if not _keep_box(w, h, frame_size, drop_full_frame):
            dropped += 1
            continue
        out.setdefault(frame, []).append(Detection(BoundingBox(x, y, w, h), score, idx))
    if dropped:
        log.info("%s: dropped %d empty or full-frame boxes", path, dropped)
    return out


def write_detections(path, frames: Dict[int, Sequence[Detection]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for frame in sorted(frames):
            for d in frames[frame]:
                b = d.box
                fh.write(f"{frame},-1,{b.x!r},{b.y!r},{b.w!r},{b.h!r},{d.score!r},-1,-1\n")


def parse_gt(
    path,
    frame_size: Optional[Tuple[float, float]] = None,
    drop_full_frame: bool = True,
) -> Dict[int, List[GtObject]]:
    """Ground-truth rows grouped by frame as ``(id, box, visibility)``.

    Rows with fewer than 9 fields are treated as fully visible.
    """
    out: Dict[int, List[GtObject]] = {}
    dropped = 0
    for line_no, f in _rows(path):
        if len(f) < 6:
            raise ParseError(path, line_no, f"expected at least 6 fields, got {len(f)}")
        frame = _frame(path, line_no, f[0])
        tid = _num(path, line_no, f[1], int)
        x, y, w, h = _box_fields(path, line_no, f[2:6])
        vis = _num(path, line_no, f[8]) if len(f) >= 9 else 1.0
        if not _keep_box(w, h, frame_size, drop_full_frame):
            dropped += 1
            continue
        objs = out.setdefault(frame, [])
        if any(o[0] == tid for o in objs):
            raise ParseError(path, line_no, f"duplicate id {tid} in frame {frame}")
        objs.append((tid, BoundingBox(x, y, w, h), vis))
    if dropped:
        log.info("%s: dropped %d empty or full-frame boxes", path, dropped)
    return out


def write_gt(path, frames: Dict[int, Sequence[GtObject]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for frame in sorted(frames):
            for tid, b, vis in sorted(frames[frame], key=lambda o: o[0]):
                fh.write(f"{frame},{tid},{b.x!r},{b.y!r},{b.w!r},{b.h!r},1,1,{float(vis)!r}\n")


TrackRow = Tuple[int, int, BoundingBox, float]


def write_tracks(path, rows: Iterable[TrackRow]) -> None:
    """Write track rows sorted by (frame, id)."""
    rows = sorted(rows, key=lambda r: (r[0], r[1]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for frame, tid, b, score in rows:
            fh.write(f"{frame},{tid},{b.x!r},{b.y!r},{b.w!r},{b.h!r},{float(score)!r},-1,-1,-1\n")


def parse_tracks(path) -> List[TrackRow]:
    rows = []
    seen = set()
    for line_no, f in _rows(path):
        if len(f) < 7:
            raise ParseError(path, line_no, f"expected at least 7 fields, got {len(f)}")
        frame = _frame(path, line_no, f[0])
        tid = _num(path, line_no, f[1], int)
        if (frame, tid) in seen:
            raise ParseError(path, line_no, f"duplicate id {tid} in frame {frame}")
        seen.add((frame, tid))
        x, y, w, h = _box_fields(path, line_no, f[2:6])
        rows.append((frame, tid, BoundingBox(x, y, w, h), _num(path, line_no, f[6])))
    return rows


def tracks_by_frame(rows: Iterable[TrackRow]) -> Dict[int, List[Tuple[int, BoundingBox]]]:
    out: Dict[int, List[Tuple[int, BoundingBox]]] = {}
    for frame, tid, box, _ in rows:
        out.setdefault(frame, []).append((tid, box))
    return out


def parse_embeddings(path, dim: int) -> Dict[Tuple[int, int], np.ndarray]:
    """Embedding table keyed by ``(frame, det_index)``; vectors are L2-normalized."""
    table: Dict[Tuple[int, int], np.ndarray] = {}
    for line_no, f in _rows(path):
        if len(f) != dim + 2:
            raise ParseError(path, line_no, f"expected {dim + 2} fields for dim={dim}, got {len(f)}")
        frame = _frame(path, line_no, f[0])
        idx = _num(path, line_no, f[1], int)
        key = (frame, idx)
        if key in table:
            raise ParseError(path, line_no, f"duplicate embedding key (frame={frame}, det_index={idx})")
        vec = np.array([_num(path, line_no, v) for v in f[2:]], dtype=np.float64)
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise ParseError(path, line_no, f"zero embedding at (frame={frame}, det_index={idx})")
        # already-unit vectors are kept verbatim so write/parse round-trips exactly
        table[key] = vec if abs(norm - 1.0) <= 1e-12 else vec / norm
    return table


def write_embeddings(path, table: Dict[Tuple[int, int], np.ndarray]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for frame, idx in sorted(table):
            vals = ",".join(repr(float(v)) for v in table[(frame, idx)])
            fh.write(f"{frame},{idx},{vals}\n")


def embeddings_by_frame(table: Dict[Tuple[int, int], np.ndarray]) -> Dict[int, Dict[int, np.ndarray]]:
    out: Dict[int, Dict[int, np.ndarray]] = {}
    for (frame, idx), vec in table.items():
        out.setdefault(frame, {})[idx] = vec
    return out


# -- sequence bundles -------------------------------------------------------

@dataclass
class SequenceBundle:
    name: str
    n_frames: int
    detections: Dict[int, List[Detection]]
    frame_size: Tuple[float, float] = (640.0, 512.0)
    embeddings: Optional[Dict[Tuple[int, int], np.ndarray]] = None
    gmc: Optional[Dict[int, AffineTransform]] = None
    gt: Optional[Dict[int, List[GtObject]]] = None
    correspondences: Optional[Dict[int, np.ndarray]] = None
    init_box: Optional[BoundingBox] = None
    embedding_dim: int = 0


def write_bundle(bundle: SequenceBundle, directory) -> Path:
    from .cmc import write_correspondences

    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    info = {
        "name": bundle.name,
        "frames": bundle.n_frames,
        "width": bundle.frame_size[0],
        "height": bundle.frame_size[1],
        "embedding_dim": bundle.embedding_dim,
    }
    if bundle.init_box is not None:
        info["init_box"] = bundle.init_box.to_list()
    (d / "seqinfo.json").write_text(json.dumps(info, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    write_detections(d / "det.txt", bundle.detections)
    if bundle.embeddings is not None:
        write_embeddings(d / "emb.txt", bundle.embeddings)
    if bundle.gmc is not None:
        write_gmc(d / "gmc.txt", bundle.gmc)
    if bundle.gt is not None:
        write_gt(d / "gt.txt", bundle.gt)
    if bundle.correspondences is not None:
        write_correspondences(d / "corr.txt", bundle.correspondences)
    return d


def read_seqinfo(directory) -> dict:
    p = Path(directory) / "seqinfo.json"
    if not p.exists():
        return {}
    with open(p, encoding="utf-8") as fh:
        info = json.load(fh)
    if not isinstance(info, dict):
        raise ValueError(f"{p}: expected a JSON object")
    return info


def load_bundle(
    directory,
    with_embeddings: bool = False,
    with_gmc: bool = False,
    with_gt: bool = False,
    drop_full_frame: bool = True,
) -> SequenceBundle:
    d = Path(directory)
    det_path = d / "det.txt"
    if not det_path.exists():
        raise FileNotFoundError(f"missing detections file: {det_path}")
    info = read_seqinfo(d)
    frame_size = (float(info.get("width", 640)), float(info.get("height", 512)))
    dets = parse_detections(det_path, frame_size, drop_full_frame)
    n_frames = int(info.get("frames", max(dets, default=0)))
    emb = None
    dim = int(info.get("embedding_dim", 0))
    if with_embeddings:
        emb_path = d / "emb.txt"
        if not emb_path.exists():
            raise FileNotFoundError(f"with_reid needs an embeddings file: {emb_path}")
        if dim <= 0:
            dim = _sniff_dim(emb_path)
        emb = parse_embeddings(emb_path, dim)
    gmc = None
    if with_gmc and (d / "gmc.txt").exists():
        gmc = load_gmc(d / "gmc.txt")
    gt = parse_gt(d / "gt.txt", frame_size, drop_full_frame) if with_gt and (d / "gt.txt").exists() else None
    init = info.get("init_box")
    return SequenceBundle(
        name=str(info.get("name", d.name)),
        n_frames=n_frames,
        detections=dets,
        frame_size=frame_size,
        embeddings=emb,
        gmc=gmc,
        gt=gt,
        init_box=BoundingBox(*map(float, init)) if init else None,
        embedding_dim=dim,
    )


def _sniff_dim(path) -> int:
    for _, f in _rows(path):
        return len(f) - 2
    return 0


# -- dataset statistics -----------------------------------------------------

@dataclass(frozen=True)
class DimStats:
    min: float
    max: float
    mean: float
    std: float


@dataclass(frozen=True)
class AnnotationStats:
    width: DimStats
    height: DimStats
    area: DimStats
    n_sequences: int
    n_frames: int
    n_boxes: int

    def to_dict(self) -> dict:
        return {
            "sequences": self.n_sequences,
            "frames": self.n_frames,
            "boxes": self.n_boxes,
            "width": vars(self.width),
            "height": vars(self.height),
            "area": vars(self.area),
        }


def _dim_stats(values: List[float]) -> DimStats:
    if not values:
        nan = float("nan")
        return DimStats(nan, nan, nan, nan)
    n = len(values)
    # fsum makes the result independent of input order
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / n
    mean = min(max(mean, min(values)), max(values))
    return DimStats(min(values), max(values), mean, math.sqrt(var))


def summarize_annotations(gt_paths: Iterable) -> AnnotationStats:
    """Width/height/area range, mean and population std over all GT boxes."""
    widths, heights, areas = [], [], []
    n_seq = n_frames = 0
    for path in gt_paths:
        frames = parse_gt(path)
        n_seq += 1
        n_frames += max(frames, default=0)
        for objs in frames.values():
            for _, b, _ in objs:
                widths.append(b.w)
                heights.append(b.h)
                areas.append(b.w * b.h)
    return AnnotationStats(_dim_stats(widths), _dim_stats(heights), _dim_stats(areas), n_seq, n_frames, len(widths))


def find_sequences(paths: Iterable) -> List[Path]:
    """Expand inputs into sequence directories (those holding ``det.txt``)."""
    out = []
    for p in map(Path, paths):
        if not p.exists():
            raise FileNotFoundError(f"input path does not exist: {p}")
        if (p / "det.txt").exists():
            out.append(p)
        elif p.is_dir():
            subs = sorted(c for c in p.iterdir() if c.is_dir() and (c / "det.txt").exists())
            if not subs:
                raise FileNotFoundError(f"no sequence directories (with det.txt) under {p}")
            out.extend(subs)
        else:
            raise FileNotFoundError(f"not a sequence directory: {p}")
    return out


def atomic_write_text(path, text: str) -> None:
    tmp = Path(str(path) + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def parse_sot_gt(path, n_frames: Optional[int] = None):
    """Single-object ground truth as per-frame ``(boxes, visibility)`` lists.

    Accepts a JSON object with ``exist`` and ``gt_rect`` lists, or a MOT CSV
    where each frame has at most one row (absent frames are invisible).
    """
    path = Path(path)
    boxes: List[Optional[BoundingBox]] = []
    vis: List[float] = []
    if path.suffix == ".json":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        exist = data.get("exist")
        rects = data.get("gt_rect")
        if exist is None or rects is None or len(exist) != len(rects):
            raise ValueError(f"{path}: need equally long 'exist' and 'gt_rect' lists")
        for e, r in zip(exist, rects):
            if e and r is not None and len(r) == 4 and r[2] > 0 and r[3] > 0:
                boxes.append(BoundingBox(*(float(v) for v in r)))
                vis.append(1.0)
            else:
                boxes.append(None)
                vis.append(0.0)
    else:
        frames = parse_gt(path)
        last = max(frames, default=0)
        for f in range(1, last + 1):
            objs = frames.get(f, [])
            if len(objs) > 1:
                raise ValueError(f"{path}: frame {f} has {len(objs)} objects; single-object GT expected")
            if objs:
                boxes.append(objs[0][1])
                vis.append(float(objs[0][2]))
            else:
                boxes.append(None)
                vis.append(0.0)
    if n_frames is not None and len(boxes) < n_frames:
        boxes += [None] * (n_frames - len(boxes))
        vis += [0.0] * (n_frames - len(vis))
    return boxes, vis
