"""Seeded synthetic scenarios: ground truth, noisy detections, embeddings,
camera motion and background point correspondences.

Randomness comes from SplitMix64 streams derived from ``(seed, purpose,
index)`` so that a bundle depends only on its config, not on how many
numbers other streams consumed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .cmc import AffineTransform
from .geometry import BoundingBox, Detection
from .io import SequenceBundle

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# stream tags
_OBJECT, _FRAME, _FALSE_POS, _EMBED, _POINTS = 1, 2, 3, 4, 5


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


class SplitMix64:
    """SplitMix64 generator (64-bit state) with derived sub-streams."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    @classmethod
    def stream(cls, seed: int, *keys: int) -> "SplitMix64":
        h = _mix64((seed & _MASK) ^ _GOLDEN)
        for k in keys:
            h = _mix64((h + _GOLDEN * ((k & _MASK) + 1)) & _MASK)
        return cls(h)

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK
        return _mix64(self.state)

    def random(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def normal(self) -> float:
        # Box-Muller, one draw per call
        u1 = 1.0 - self.random()
        u2 = self.random()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def poisson(self, lam: float) -> int:
        if lam <= 0:
            return 0
        limit = math.exp(-lam)
        k, p = 0, self.random()
        while p > limit:
            k += 1
            p *= self.random()
        return k


@dataclass(frozen=True)
class ObjectSpec:
    """Scripted object: top-left start, size and per-frame velocity."""

    x: float
    y: float
    w: float
    h: float
    vx: float
    vy: float


@dataclass(frozen=True)
class ScenarioConfig:
    n_objects: int = 5
    n_frames: int = 300
    frame_size: Tuple[float, float] = (640.0, 512.0)
    speed_range: Tuple[float, float] = (0.5, 2.0)
    width_range: Tuple[float, float] = (2.0, 30.0)
    aspect_range: Tuple[float, float] = (0.6, 1.0)
    pos_jitter: float = 0.0
    size_jitter: float = 0.0
    miss_rate: float = 0.0
    fp_rate: float = 0.0
    occlusions: Tuple[Tuple[int, int, int], ...] = ()
    camera_drift: Optional[Tuple[float, float, float, float, float, float]] = None
    embedding_dim: int = 128
    embedding_noise: float = 0.1
    det_score_range: Tuple[float, float] = (0.75, 0.95)
    fp_score_range: Tuple[float, float] = (0.1, 0.8)
    n_background_points: int = 0
    background_outlier_rate: float = 0.2
    objects: Tuple[ObjectSpec, ...] = ()
    seed: int = 0
    name: str = "synth"

    def __post_init__(self):
        if self.n_frames < 1:
            raise ValueError("n_frames must be >= 1")
        if not 0.0 <= self.miss_rate <= 1.0:
            raise ValueError("miss_rate must lie in [0, 1]")
        if self.fp_rate < 0:
            raise ValueError("fp_rate must be >= 0")
        if not 0.0 <= self.background_outlier_rate <= 1.0:
            raise ValueError("background_outlier_rate must lie in [0, 1]")
        for obj, start, end in self.occlusions:
            if end < start:
                raise ValueError(f"occlusion window ({obj}, {start}, {end}) ends before it starts")

    @property
    def object_count(self) -> int:
        return len(self.objects) if self.objects else self.n_objects


def _reflect(pos: float, vel: float, size: float, limit: float) -> Tuple[float, float]:
    hi = limit - size
    if hi <= 0:
        return 0.0, 0.0
    while pos < 0 or pos > hi:
        if pos < 0:
            pos, vel = -pos, -vel
        else:
            pos, vel = 2 * hi - pos, -vel
    return pos, vel


def _trajectories(cfg: ScenarioConfig) -> List[List[BoundingBox]]:
    W, H = cfg.frame_size
    specs = list(cfg.objects)
    if not specs:
        for i in range(cfg.n_objects):
            rng = SplitMix64.stream(cfg.seed, _OBJECT, i)
            w = rng.uniform(*cfg.width_range)
            h = w * rng.uniform(*cfg.aspect_range)
            x = rng.uniform(0.0, max(W - w, 0.0))
            y = rng.uniform(0.0, max(H - h, 0.0))
            ang = rng.uniform(0.0, 2 * math.pi)
            speed = rng.uniform(*cfg.speed_range)
            specs.append(ObjectSpec(x, y, w, h, speed * math.cos(ang), speed * math.sin(ang)))
    out = []
    for s in specs:
        x, y, vx, vy = s.x, s.y, s.vx, s.vy
        boxes = []
        for t in range(cfg.n_frames):
            if t > 0:
                x, vx = _reflect(x + vx, vx, s.w, W)
                y, vy = _reflect(y + vy, vy, s.h, H)
            boxes.append(BoundingBox(x, y, s.w, s.h))
        out.append(boxes)
    return out


def _unit(rng: SplitMix64, dim: int) -> np.ndarray:
    v = np.array([rng.normal() for _ in range(dim)])
    n = np.linalg.norm(v)
    return v / n if n > 0 else np.eye(dim)[0]


def _warp_box(box: BoundingBox, C: AffineTransform) -> BoundingBox:
    if np.array_equal(C.linear, np.eye(2)):
        return BoundingBox(box.x + C.translation[0], box.y + C.translation[1], box.w, box.h)
    cx, cy = C.apply([box.center])[0]
    w, h = np.abs(C.linear @ np.array([box.w, box.h]))
    return BoundingBox.from_center(float(cx), float(cy), float(w), float(h))


def generate(cfg: ScenarioConfig) -> SequenceBundle:
    """Build a complete, deterministic sequence bundle for ``cfg``."""
    W, H = cfg.frame_size
    traj = _trajectories(cfg)
    n_obj = len(traj)
    dim = cfg.embedding_dim
    bases = [_unit(SplitMix64.stream(cfg.seed, _EMBED, i), dim) for i in range(n_obj)] if dim > 0 else []
    occluded = {(o, t) for o, s, e in cfg.occlusions for t in range(s, e + 1)}

    drift = AffineTransform.from_row(*cfg.camera_drift) if cfg.camera_drift is not None else None
    cam = AffineTransform.identity()

    gt: Dict[int, list] = {}
    dets: Dict[int, List[Detection]] = {}
    emb: Dict[Tuple[int, int], np.ndarray] = {}
    gmc: Dict[int, AffineTransform] = {}
    corr: Dict[int, np.ndarray] = {}

    for t in range(1, cfg.n_frames + 1):
        if drift is not None:
            if t > 1:
                cam = drift.compose(cam)
                gmc[t] = drift
            else:
                gmc[t] = AffineTransform.identity()
        rng = SplitMix64.stream(cfg.seed, _FRAME, t)
        frame_gt = []
        frame_dets: List[Detection] = []
        for o in range(n_obj):
            box = traj[o][t - 1]
            visible = (o + 1, t) not in occluded
            # fixed number of draws per object keeps streams aligned
            miss = rng.random() < cfg.miss_rate
            jit = [rng.normal() for _ in range(4)]
            score = rng.uniform(*cfg.det_score_range)
            noise = [rng.normal() for _ in range(dim)] if dim > 0 else []
            shown = box if drift is None else _warp_box(box, cam)
            frame_gt.append((o + 1, shown, 1.0 if visible else 0.0))
            if not visible or miss:
                continue
            det_box = BoundingBox(
                box.x + cfg.pos_jitter * jit[0],
                box.y + cfg.pos_jitter * jit[1],
                max(box.w + cfg.size_jitter * jit[2], 0.1),
                max(box.h + cfg.size_jitter * jit[3], 0.1),
            )
            if drift is not None:
                det_box = _warp_box(det_box, cam)
            idx = len(frame_dets)
            frame_dets.append(Detection(det_box, score, idx))
            if dim > 0:
                v = bases[o] + cfg.embedding_noise * np.array(noise)
                emb[(t, idx)] = v / np.linalg.norm(v)
        fp_rng = SplitMix64.stream(cfg.seed, _FALSE_POS, t)
        for _ in range(fp_rng.poisson(cfg.fp_rate)):
            w = fp_rng.uniform(*cfg.width_range)
            h = w * fp_rng.uniform(*cfg.aspect_range)
            box = BoundingBox(fp_rng.uniform(0.0, max(W - w, 0.0)), fp_rng.uniform(0.0, max(H - h, 0.0)), w, h)
            score = fp_rng.uniform(*cfg.fp_score_range)
            vec = _unit(fp_rng, dim) if dim > 0 else None
            if drift is not None:
                box = _warp_box(box, cam)
            idx = len(frame_dets)
            frame_dets.append(Detection(box, score, idx))
            if vec is not None:
                emb[(t, idx)] = vec
        gt[t] = frame_gt
        if frame_dets:
            dets[t] = frame_dets
        if cfg.n_background_points > 0 and t > 1:
            corr[t] = _background_points(cfg, t, drift if drift is not None else AffineTransform.identity())

    return SequenceBundle(
        name=cfg.name,
        n_frames=cfg.n_frames,
        detections=dets,
        frame_size=(float(W), float(H)),
        embeddings=emb if dim > 0 else None,
        gmc=gmc if drift is not None else None,
        gt=gt,
        correspondences=corr if cfg.n_background_points > 0 else None,
        embedding_dim=dim,
    )


def _background_points(cfg: ScenarioConfig, t: int, motion: AffineTransform) -> np.ndarray:
    W, H = cfg.frame_size
    rng = SplitMix64.stream(cfg.seed, _POINTS, t)
    rows = []
    for _ in range(cfg.n_background_points):
        p = np.array([rng.uniform(0.0, W), rng.uniform(0.0, H)])
        outlier = rng.random() < cfg.background_outlier_rate
        q = np.array([rng.uniform(0.0, W), rng.uniform(0.0, H)]) if outlier else motion.apply(p)[0]
        rows.append([p[0], p[1], q[0], q[1]])
    return np.array(rows)


def undrifted(cfg: ScenarioConfig) -> ScenarioConfig:
    """Same scenario with the camera held still."""
    from dataclasses import replace

    return replace(cfg, camera_drift=None)
