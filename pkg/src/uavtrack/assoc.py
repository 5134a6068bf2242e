"""Association costs and optimal linear assignment.

Cost matrices have tracks on rows and detections on columns. Entries are in
``[0, 1]``; ``FORBIDDEN`` (``inf``) marks pairs that may never be matched.
"""
from __future__ import annotations

from collections import deque
from typing import List, Sequence, Tuple

import numpy as np

from . import kernels
from .kalman import CHI2_GATE_4DOF, KalmanFilter, KalmanState

FORBIDDEN = np.inf

# reduced costs within this (relative) distance of zero count as tight
_TIGHT_RTOL = 1e-10


def iou_cost(track_boxes, det_boxes) -> np.ndarray:
    """``1 - IoU`` for every (track, detection) pair; inputs are (N, 4) tlwh."""
    return 1.0 - kernels.iou_matrix(track_boxes, det_boxes)


def normalize_rows(feats) -> np.ndarray:
    feats = np.asarray(feats, dtype=np.float64)
    norms = np.linalg.norm(feats, axis=-1, keepdims=True)
    if np.any(norms == 0):
        raise ValueError("cannot normalize a zero embedding")
    return feats / norms


def embedding_cost(track_feats, det_feats) -> np.ndarray:
    """Halved cosine distance ``(1 - cos) / 2``, clipped to ``[0, 1]``."""
    t = np.asarray(track_feats, dtype=np.float64)
    d = np.asarray(det_feats, dtype=np.float64)
    if t.size == 0 or d.size == 0:
        return np.zeros((len(t), len(d)))
    t = t.reshape(len(t), -1)
    d = d.reshape(len(d), -1)
    if t.shape[1] != d.shape[1]:
        raise ValueError(f"embedding dimension mismatch: tracks have {t.shape[1]}, detections have {d.shape[1]}")
    cos = normalize_rows(t) @ normalize_rows(d).T
    return np.clip((1.0 - cos) / 2.0, 0.0, 1.0)


def fuse_costs(iou_c, emb_c, proximity_thresh: float = 0.5, appearance_thresh: float = 0.25) -> np.ndarray:
    """Appearance cost gated by proximity and similarity, then min with the IoU cost."""
    iou_c = np.asarray(iou_c, dtype=np.float64)
    emb_c = np.asarray(emb_c, dtype=np.float64)
    if iou_c.shape != emb_c.shape:
        raise ValueError(f"cost shapes differ: {iou_c.shape} vs {emb_c.shape}")
    gated = emb_c.copy()
    gated[(iou_c > proximity_thresh) | (emb_c > appearance_thresh)] = 1.0
    return np.minimum(iou_c, gated)


def gate_cost(cost, kf: KalmanFilter, states: Sequence[KalmanState], det_boxes, threshold: float = CHI2_GATE_4DOF):
    """Set entries whose Mahalanobis distance exceeds ``threshold`` to FORBIDDEN."""
    cost = np.array(cost, dtype=np.float64, copy=True)
    if cost.size == 0:
        return cost
    for i, st in enumerate(states):
        d = kf.gating_distance(st, det_boxes)
        cost[i, d > threshold] = FORBIDDEN
    return cost


def _augment(row_match, col_match, tight, frozen_rows, frozen_cols, start_row, target_col, banned_row, banned_col):
    """BFS for an alternating path start_row -> ... -> target_col over tight edges."""
    n = len(row_match)
    parent = {}
    seen = np.zeros(n, dtype=bool)
    queue = deque([start_row])
    while queue:
        r = queue.popleft()
        for c in np.flatnonzero(tight[r]):
            if seen[c] or frozen_cols[c] or c == banned_col:
                continue
            seen[c] = True
            parent[c] = r
            if c == target_col:
                # walk back, re-pointing each row on the path
                while True:
                    pr = parent[c]
                    prev_c = row_match[pr]
                    row_match[pr] = c
                    col_match[c] = pr
                    if pr == start_row:
                        return True
                    c = prev_c
            nr = col_match[c]
            if nr != banned_row and not frozen_rows[nr]:
                queue.append(nr)
    return False


def solve_assignment(cost) -> List[Tuple[int, int]]:
    """Minimum-cost matching of ``min(rows, cols)`` pairs.

    FORBIDDEN entries are replaced by a penalty larger than any feasible
    total, so forbidden pairs are only used when unavoidable; callers drop
    them afterwards. Among equal-cost optima the lexicographically smallest
    ``(row, col)`` sequence is returned.
    """
    cost = np.asarray(cost, dtype=np.float64)
    nr, nc = cost.shape
    if nr == 0 or nc == 0:
        return []
    if np.any(np.isnan(cost)):
        raise ValueError("NaN in cost matrix")
    n = max(nr, nc)
    finite = np.isfinite(cost)
    abs_max = float(np.max(np.abs(cost[finite]))) if finite.any() else 0.0
    big = (abs_max + 1.0) * (n + 1) * 2.0
    sq = np.zeros((n, n))
    sq[:nr, :nc] = np.where(finite, cost, big)

    row_match, u, v = kernels.lsa_potentials(sq)
    row_match = np.asarray(row_match, dtype=np.intp).copy()
    col_match = np.empty(n, dtype=np.intp)
    col_match[row_match] = np.arange(n)

    reduced = sq - u[:, None] - v[None, :]
    tol = _TIGHT_RTOL * max(1.0, float(np.max(np.abs(sq))))
    tight = reduced <= tol
    tight[np.arange(n), row_match] = True

    frozen_rows = np.zeros(n, dtype=bool)
    frozen_cols = np.zeros(n, dtype=bool)
    for i in range(nr):
        for j in np.flatnonzero(tight[i]):
            if frozen_cols[j]:
                continue
            if row_match[i] == j:
                break
            # free row i's column and column j's row, then reconnect them
            r = col_match[j]
            c0 = row_match[i]
            saved = row_match.copy(), col_match.copy()
            if _augment(row_match, col_match, tight, frozen_rows | _onehot(n, i), frozen_cols | _onehot(n, j),
                        r, c0, i, j):
                row_match[i] = j
                col_match[j] = i
                break
            row_match, col_match = saved
        frozen_rows[i] = True
        frozen_cols[row_match[i]] = True

    return [(i, int(row_match[i])) for i in range(nr) if row_match[i] < nc]


def _onehot(n, k):
    m = np.zeros(n, dtype=bool)
    m[k] = True
    return m


def linear_assignment(cost, match_thresh: float):
    """Optimal one-to-one assignment, then drop pairs costing more than ``match_thresh``.

    Returns:
        ``(matches, unmatched_rows, unmatched_cols)`` where ``matches`` is an
        (K, 2) int array of ``(row, col)`` and the others are sorted int arrays.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2:
        raise ValueError("cost must be 2-D")
    nr, nc = cost.shape
    pairs = [(r, c) for r, c in solve_assignment(cost) if cost[r, c] <= match_thresh]
    matched_r = {r for r, _ in pairs}
    matched_c = {c for _, c in pairs}
    matches = np.array(pairs, dtype=np.intp).reshape(-1, 2)
    unmatched_rows = np.array([r for r in range(nr) if r not in matched_r], dtype=np.intp)
    unmatched_cols = np.array([c for c in range(nc) if c not in matched_c], dtype=np.intp)
    return matches, unmatched_rows, unmatched_cols
