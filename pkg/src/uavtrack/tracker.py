"""Per-frame multi-object tracker: Kalman prediction, camera motion
compensation, two-stage association and buffer-based track retention."""
from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, fields
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import assoc
from .cmc import AffineTransform, warp_state
from .geometry import BoundingBox, Detection
from .kalman import CHI2_GATE_4DOF, KalmanFilter, KalmanState


class TrackState(enum.Enum):
    New = "New"
    Tracked = "Tracked"
    Lost = "Lost"
    Removed = "Removed"


_ALLOWED = {
    TrackState.New: {TrackState.Tracked, TrackState.Removed},
    TrackState.Tracked: {TrackState.Tracked, TrackState.Lost},
    TrackState.Lost: {TrackState.Tracked, TrackState.Removed},
    TrackState.Removed: set(),
}


@dataclass
class TrackerConfig:
    track_high_thresh: float = 0.6
    track_low_thresh: float = 0.1
    new_track_thresh: float = 0.7
    match_thresh: float = 0.8
    second_match_thresh: float = 0.5
    unconfirmed_match_thresh: float = 0.7
    track_buffer: int = 30
    min_box_area: float = 10.0
    proximity_thresh: float = 0.5
    appearance_thresh: float = 0.25
    ema_alpha: float = 0.9
    with_reid: bool = False
    with_cmc: bool = False
    gating: bool = False
    std_weight_position: float = 1.0 / 20
    std_weight_velocity: float = 1.0 / 160

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("track_high_thresh", "track_low_thresh", "new_track_thresh", "match_thresh",
                     "second_match_thresh", "unconfirmed_match_thresh", "proximity_thresh",
                     "appearance_thresh", "ema_alpha"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name}={val} must lie in [0, 1]")
        if int(self.track_buffer) != self.track_buffer or self.track_buffer < 1:
            raise ValueError(f"track_buffer={self.track_buffer} must be an integer >= 1")
        if self.min_box_area < 0:
            raise ValueError("min_box_area must be >= 0")

    @classmethod
    def from_dict(cls, data: Mapping) -> "TrackerConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown tracker config fields: {sorted(unknown)}")
        return cls(**dict(data))

    @classmethod
    def from_json(cls, path) -> "TrackerConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TrackOutput:
    """Immutable per-frame snapshot of a track."""

    id: int
    box: BoundingBox
    score: float
    state: TrackState
    start_frame: int
    last_frame: int


class Track:
    def __init__(self, track_id: int, det: Detection, kstate: KalmanState, frame: int,
                 feature: Optional[np.ndarray] = None):
        self.id = track_id
        self.state = TrackState.New
        self.kstate = kstate
        self.feature = feature
        self.score = det.score
        self.start_frame = frame
        self.last_frame = frame
        self.is_activated = False

    def transition(self, new: TrackState) -> None:
        if new not in _ALLOWED[self.state]:
            raise RuntimeError(f"track {self.id}: illegal transition {self.state.value} -> {new.value}")
        self.state = new

    def smooth_feature(self, feat: Optional[np.ndarray], alpha: float) -> None:
        if feat is None:
            return
        if self.feature is None:
            self.feature = feat
        else:
            f = alpha * self.feature + (1.0 - alpha) * feat
            self.feature = f / np.linalg.norm(f)

    def tlwh(self) -> np.ndarray:
        return self.kstate.tlwh()

    def snapshot(self) -> TrackOutput:
        return TrackOutput(self.id, self.kstate.to_box(), self.score, self.state, self.start_frame, self.last_frame)

    def __repr__(self):
        return f"Track(id={self.id}, state={self.state.value}, frames={self.start_frame}-{self.last_frame})"


class Tracker:
    """Two-stage tracking-by-detection engine for one sequence at a time.

    Call :meth:`step` once per frame with strictly increasing frame indices,
    and :meth:`reset` between sequences.
    """

    def __init__(self, config: Optional[TrackerConfig] = None):
        self.config = config or TrackerConfig()
        self.kf = KalmanFilter(self.config.std_weight_position, self.config.std_weight_velocity)
        self.reset()

    def reset(self) -> "Tracker":
        self._next_id = 1
        self.tracks: List[Track] = []
        self.frame: Optional[int] = None
        self._first_frame: Optional[int] = None
        return self

    # -- helpers -----------------------------------------------------------

    def _new_id(self) -> int:
        tid = self._next_id
        self._next_id += 1
        return tid

    def _with_state(self, *states: TrackState) -> List[Track]:
        return [t for t in self.tracks if t.state in states]

    def _det_feature(self, det: Detection, embeddings) -> Optional[np.ndarray]:
        if embeddings is None or det.embedding_ref is None:
            return None
        try:
            vec = embeddings[det.embedding_ref]
        except (KeyError, IndexError):
            return None
        vec = np.asarray(vec, dtype=np.float64)
        return vec / np.linalg.norm(vec)

    def _cost(self, tracks: Sequence[Track], dets: Sequence[Detection], feats, fuse: bool) -> np.ndarray:
        cfg = self.config
        tboxes = np.array([t.tlwh() for t in tracks]).reshape(-1, 4)
        dboxes = np.array([d.box.tlwh() for d in dets]).reshape(-1, 4)
        cost = assoc.iou_cost(tboxes, dboxes)
        if fuse and cost.size:
            emb = np.ones_like(cost)
            for i, t in enumerate(tracks):
                if t.feature is None:
                    continue
                for j, f in enumerate(feats):
                    if f is not None:
                        emb[i, j] = assoc.embedding_cost(t.feature[None], f[None])[0, 0]
            cost = assoc.fuse_costs(cost, emb, cfg.proximity_thresh, cfg.appearance_thresh)
        if cfg.gating and cost.size:
            cost = assoc.gate_cost(cost, self.kf, [t.kstate for t in tracks], [d.box for d in dets], CHI2_GATE_4DOF)
        return cost

    def _match(self, track: Track, det: Detection, feat, frame: int) -> None:
        track.kstate = self.kf.update(track.kstate, det.box)
        track.smooth_feature(feat, self.config.ema_alpha)
        track.score = det.score
        track.last_frame = frame
        track.transition(TrackState.Tracked)
        track.is_activated = True

    # -- main entry point --------------------------------------------------

    def step(
        self,
        frame: int,
        dets: Sequence[Detection],
        embeddings=None,
        affine: Optional[AffineTransform] = None,
    ) -> Tuple[List[TrackOutput], List[TrackOutput]]:
        """Advance one frame.

        Args:
            frame: frame index, strictly greater than the previous call's.
            dets: detections of this frame.
            embeddings: mapping from ``Detection.embedding_ref`` to a vector;
                required when ``with_reid`` is on.
            affine: camera motion from the previous frame to this one; used
                when ``with_cmc`` is on.

        Returns:
            ``(online, lost)`` snapshots. ``online`` holds confirmed tracks
            matched this frame whose box area exceeds ``min_box_area``;
            ``lost`` holds retained lost tracks at their predicted boxes.
        """
        cfg = self.config
        if self.frame is not None and frame <= self.frame:
            raise ValueError(f"frame {frame} does not follow frame {self.frame}")
        if cfg.with_reid and embeddings is None:
            raise ValueError(f"frame {frame}: with_reid is on but no embedding table was given")
        self.frame = frame
        if self._first_frame is None:
            self._first_frame = frame
        use_reid = cfg.with_reid

        # (1) split detections by confidence
        high = [d for d in dets if d.score >= cfg.track_high_thresh]
        low = [d for d in dets if cfg.track_low_thresh <= d.score < cfg.track_high_thresh]
        high_feats = [self._det_feature(d, embeddings) for d in high] if use_reid else [None] * len(high)

        # (2) predict confirmed and lost tracks
        confirmed = [t for t in self._with_state(TrackState.Tracked) if t.is_activated]
        unconfirmed = [t for t in self.tracks if t.state is TrackState.New]
        lost = self._with_state(TrackState.Lost)
        for t in confirmed + lost:
            if t.state is TrackState.Lost:
                t.kstate.mean[6:8] = 0.0
            t.kstate = self.kf.predict(t.kstate)

        # (3) camera motion compensation
        if cfg.with_cmc and affine is not None:
            for t in confirmed + lost + unconfirmed:
                t.kstate = warp_state(t.kstate, affine)

        # (4) first association: confirmed + lost vs high-score detections
        pool = confirmed + lost
        cost = self._cost(pool, high, high_feats, use_reid)
        matches, u_pool, u_high = assoc.linear_assignment(cost, cfg.match_thresh)
        for r, c in matches:
            self._match(pool[r], high[c], high_feats[c], frame)

        # (5) second association: still-unmatched tracked tracks vs low-score detections
        remaining = [pool[i] for i in u_pool if pool[i].state is TrackState.Tracked]
        cost = self._cost(remaining, low, [None] * len(low), False)
        matches, u_rem, _ = assoc.linear_assignment(cost, cfg.second_match_thresh)
        for r, c in matches:
            self._match(remaining[r], low[c], None, frame)

        # (6) unmatched tracked tracks become lost
        for i in u_rem:
            remaining[i].transition(TrackState.Lost)

        # unconfirmed tracks get one chance against the leftover high detections
        left = [high[j] for j in u_high]
        left_feats = [high_feats[j] for j in u_high]
        cost = self._cost(unconfirmed, left, left_feats, use_reid)
        matches, u_unc, u_left = assoc.linear_assignment(cost, cfg.unconfirmed_match_thresh)
        for r, c in matches:
            self._match(unconfirmed[r], left[c], left_feats[c], frame)
        for i in u_unc:
            unconfirmed[i].transition(TrackState.Removed)

        # (7) spawn new tracks from confident leftovers
        for j in u_left:
            det = left[j]
            if det.score < cfg.new_track_thresh or det.box.w <= 0 or det.box.h <= 0:
                continue
            track = Track(self._new_id(), det, self.kf.initiate(det.box), frame, left_feats[j])
            if frame == self._first_frame:
                track.transition(TrackState.Tracked)
                track.is_activated = True
            self.tracks.append(track)

        # (8) drop lost tracks past the buffer
        for t in self._with_state(TrackState.Lost):
            if frame - t.last_frame > cfg.track_buffer:
                t.transition(TrackState.Removed)
        self.tracks = [t for t in self.tracks if t.state is not TrackState.Removed]

        # (10) outputs
        online = [
            t.snapshot() for t in self.tracks
            if t.state is TrackState.Tracked and t.is_activated and t.last_frame == frame
            and t.kstate.mean[2] * t.kstate.mean[3] > cfg.min_box_area
        ]
        lost_out = [t.snapshot() for t in self.tracks if t.state is TrackState.Lost]
        return online, lost_out


def run_sequence(
    tracker: Tracker,
    frames: Mapping[int, Sequence[Detection]],
    n_frames: int,
    embeddings: Optional[Mapping[int, Mapping[int, np.ndarray]]] = None,
    gmc: Optional[Mapping[int, AffineTransform]] = None,
) -> List[Tuple[int, List[TrackOutput], List[TrackOutput]]]:
    """Reset ``tracker`` and run it over frames ``1..n_frames``.

    ``embeddings`` maps frame -> (detection index -> vector); ``gmc`` maps
    frame -> transform from the previous frame (absent frames: identity).
    """
    tracker.reset()
    out = []
    use_reid = tracker.config.with_reid
    for frame in range(1, n_frames + 1):
        table = None
        if use_reid:
            table = (embeddings or {}).get(frame, {})
        affine = gmc.get(frame) if gmc is not None else None
        online, lost = tracker.step(frame, frames.get(frame, []), table, affine)
        out.append((frame, online, lost))
    return out


def results_to_rows(results) -> List[Tuple[int, int, BoundingBox, float]]:
    """Flatten ``run_sequence`` output into ``(frame, id, box, score)`` rows."""
    return [(frame, t.id, t.box, t.score) for frame, online, _ in results for t in online]
