"""Camera motion compensation.

Inter-frame background motion is modelled as a 2x3 affine transform. It is
either estimated from point correspondences with RANSAC or read from a
precomputed GMC file, and is then applied to Kalman states.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from .errors import ParseError
from .kalman import KalmanState

log = logging.getLogger(__name__)


class DegenerateInputError(ValueError):
    """Correspondences cannot determine an affine transform (too few or collinear)."""


@dataclass(frozen=True)
class AffineTransform:
    linear: np.ndarray = field(default_factory=lambda: np.eye(2))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        object.__setattr__(self, "linear", np.asarray(self.linear, dtype=np.float64).reshape(2, 2))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=np.float64).reshape(2))

    @classmethod
    def identity(cls) -> "AffineTransform":
        return cls(np.eye(2), np.zeros(2))

    @classmethod
    def from_matrix(cls, m) -> "AffineTransform":
        m = np.asarray(m, dtype=np.float64).reshape(2, 3)
        return cls(m[:, :2].copy(), m[:, 2].copy())

    @classmethod
    def from_row(cls, a11, a12, tx, a21, a22, ty) -> "AffineTransform":
        return cls(np.array([[a11, a12], [a21, a22]], dtype=np.float64), np.array([tx, ty], dtype=np.float64))

    @property
    def matrix(self) -> np.ndarray:
        return np.hstack([self.linear, self.translation[:, None]])

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.linear, np.eye(2)) and not np.any(self.translation))

    def is_valid(self) -> bool:
        return bool(
            np.all(np.isfinite(self.linear))
            and np.all(np.isfinite(self.translation))
            and abs(np.linalg.det(self.linear)) > 1e-9
        )

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        return pts @ self.linear.T + self.translation

    def inverse(self) -> "AffineTransform":
        inv = np.linalg.inv(self.linear)
        return AffineTransform(inv, -inv @ self.translation)

    def compose(self, other: "AffineTransform") -> "AffineTransform":
        """``self ∘ other``: apply ``other`` first."""
        return AffineTransform(self.linear @ other.linear, self.linear @ other.translation + self.translation)


@dataclass(frozen=True)
class Correspondence:
    prev: Tuple[float, float]
    curr: Tuple[float, float]


def _as_point_arrays(pairs) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(pairs, np.ndarray):
        arr = np.asarray(pairs, dtype=np.float64).reshape(-1, 4)
    else:
        rows = [(*p.prev, *p.curr) if isinstance(p, Correspondence) else tuple(p) for p in pairs]
        arr = np.array(rows, dtype=np.float64).reshape(-1, 4)
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite correspondence coordinates")
    return arr[:, :2], arr[:, 2:]


def fit_affine_lstsq(prev: np.ndarray, curr: np.ndarray) -> AffineTransform:
    """Least-squares affine mapping ``prev`` onto ``curr`` (>= 3 points)."""
    design = np.hstack([prev, np.ones((len(prev), 1))])
    sol, *_ = np.linalg.lstsq(design, curr, rcond=None)
    return AffineTransform.from_matrix(sol.T)


def _exact_affine(p: np.ndarray, q: np.ndarray):
    design = np.hstack([p, np.ones((3, 1))])
    det = np.linalg.det(design)
    scale = max(1.0, float(np.max(np.abs(p)))) ** 2
    if abs(det) <= 1e-9 * scale:
        return None
    return np.linalg.solve(design, q).T


def _all_collinear(points: np.ndarray) -> bool:
    centered = points - points.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    return len(sv) < 2 or sv[1] <= 1e-9 * max(1.0, sv[0])


def estimate_affine_ransac(
    pairs,
    iterations: int = 100,
    inlier_thresh: float = 1.0,
    seed: int = 0,
) -> Tuple[AffineTransform, np.ndarray]:
    """Robust affine fit from point correspondences.

    Each iteration fits an exact affine to three random pairs and counts the
    pairs whose reprojection error is below ``inlier_thresh``. The best
    hypothesis (most inliers, then lowest mean inlier error, then earliest)
    is refit by least squares on its inlier set; the refit is repeated until
    the inlier set stops changing.

    Returns:
        The transform and a boolean inlier mask aligned with ``pairs``.

    Raises:
        DegenerateInputError: fewer than three pairs or all source points
            collinear. Callers are expected to fall back to identity.
    """
    prev, curr = _as_point_arrays(pairs)
    n = len(prev)
    if n < 3:
        raise DegenerateInputError(f"need at least 3 correspondences, got {n}")
    if _all_collinear(prev):
        raise DegenerateInputError("all source points are collinear")

    rng = np.random.default_rng(seed)
    best_count, best_err, best_mask = -1, math.inf, None
    for _ in range(iterations):
        idx = rng.choice(n, size=3, replace=False)
        model = _exact_affine(prev[idx], curr[idx])
        if model is None:
            continue
        err = np.linalg.norm(prev @ model[:, :2].T + model[:, 2] - curr, axis=1)
        mask = err < inlier_thresh
        count = int(mask.sum())
        if count < 3:
            continue
        mean_err = float(err[mask].mean())
        if count > best_count or (count == best_count and mean_err < best_err):
            best_count, best_err, best_mask = count, mean_err, mask

    if best_mask is None:
        # every sample was degenerate or below 3 inliers: plain least squares
        best_mask = np.ones(n, dtype=bool)

    mask = best_mask
    for _ in range(10):
        model = fit_affine_lstsq(prev[mask], curr[mask])
        err = np.linalg.norm(model.apply(prev) - curr, axis=1)
        new_mask = err < inlier_thresh
        if new_mask.sum() < 3 or np.array_equal(new_mask, mask):
            break
        if _all_collinear(prev[new_mask]):
            break
        mask = new_mask
    return model, mask.copy()


def _block_linear(linear: np.ndarray) -> np.ndarray:
    R8 = np.zeros((8, 8))
    for k in range(4):
        R8[2 * k:2 * k + 2, 2 * k:2 * k + 2] = linear
    return R8


def warp_state(state: KalmanState, A: AffineTransform) -> KalmanState:
    """Move a Kalman state into the next frame's camera coordinates.

    The linear part rotates/scales every (x, y)-like pair of the state
    (center, size, center velocity, size velocity); the translation shifts
    the center only.
    """
    if not A.is_valid():
        raise ValueError("invalid affine transform (non-finite or singular)")
    if A.is_identity():
        return state.copy()
    R8 = _block_linear(A.linear)
    mean = R8 @ state.mean
    mean[:2] += A.translation
    cov = R8 @ state.covariance @ R8.T
    return KalmanState(mean, cov)


def load_gmc(path) -> Dict[int, AffineTransform]:
    """Read ``frame,a11,a12,tx,a21,a22,ty`` rows. Absent frames mean identity."""
    out: Dict[int, AffineTransform] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split(",")
            if len(fields) != 7:
                raise ParseError(path, line_no, f"expected 7 fields, got {len(fields)}")
            try:
                frame = int(fields[0])
                vals = [float(v) for v in fields[1:]]
            except ValueError as exc:
                raise ParseError(path, line_no, str(exc)) from None
            if frame < 1:
                raise ParseError(path, line_no, f"frame index must be >= 1, got {frame}")
            if frame in out:
                raise ParseError(path, line_no, f"duplicate frame {frame}")
            if not all(math.isfinite(v) for v in vals):
                raise ParseError(path, line_no, "non-finite transform entry")
            out[frame] = AffineTransform.from_row(*vals)
    return out


def write_gmc(path, transforms: Dict[int, AffineTransform]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for frame in sorted(transforms):
            A = transforms[frame]
            vals = (A.linear[0, 0], A.linear[0, 1], A.translation[0], A.linear[1, 0], A.linear[1, 1], A.translation[1])
            fh.write(",".join([str(int(frame))] + [repr(float(v)) for v in vals]) + "\n")


def load_correspondences(path) -> Dict[int, np.ndarray]:
    """Read ``frame,px,py,cx,cy`` rows into per-frame (N, 4) arrays."""
    rows: Dict[int, list] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split(",")
            if len(fields) != 5:
                raise ParseError(path, line_no, f"expected 5 fields, got {len(fields)}")
            try:
                frame = int(fields[0])
                vals = [float(v) for v in fields[1:]]
            except ValueError as exc:
                raise ParseError(path, line_no, str(exc)) from None
            if not all(math.isfinite(v) for v in vals):
                raise ParseError(path, line_no, "non-finite coordinate")
            rows.setdefault(frame, []).append(vals)
    return {f: np.array(v, dtype=np.float64) for f, v in rows.items()}


def write_correspondences(path, per_frame: Dict[int, np.ndarray]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for frame in sorted(per_frame):
            for row in np.asarray(per_frame[frame]).reshape(-1, 4):
                fh.write(",".join([str(int(frame))] + [repr(float(v)) for v in row]) + "\n")


def estimate_gmc(
    per_frame: Dict[int, np.ndarray],
    iterations: int = 100,
    inlier_thresh: float = 1.0,
    seed: int = 0,
) -> Dict[int, AffineTransform]:
    """RANSAC per frame; degenerate frames fall back to identity (logged)."""
    out = {}
    for frame in sorted(per_frame):
        try:
            A, _ = estimate_affine_ransac(per_frame[frame], iterations, inlier_thresh, seed=seed + frame)
        except DegenerateInputError as exc:
            log.warning("frame %d: %s; using identity", frame, exc)
            A = AffineTransform.identity()
        out[frame] = A
    return out
