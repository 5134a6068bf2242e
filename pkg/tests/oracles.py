"""Independent reference computations used by the tests.

Nothing here imports the code paths it is used to check.
"""
import itertools
import math

import numpy as np


def raster_iou(a, b):
    """IoU of integer tlwh boxes by counting unit cells."""
    def cells(box):
        x, y, w, h = (int(v) for v in box)
        return {(i, j) for i in range(x, x + w) for j in range(y, y + h)}

    ca, cb = cells(a), cells(b)
    union = len(ca | cb)
    return len(ca & cb) / union if union else 0.0


def brute_force_min_cost(cost):
    """Minimum total cost over all maximal one-to-one assignments."""
    cost = np.asarray(cost, dtype=float)
    n, m = cost.shape
    best = math.inf
    if n <= m:
        for perm in itertools.permutations(range(m), n):
            best = min(best, sum(cost[i, perm[i]] for i in range(n)))
    else:
        for perm in itertools.permutations(range(n), m):
            best = min(best, sum(cost[perm[j], j] for j in range(m)))
    return best


def direct_sot_acc(ious, p, v):
    """Challenge SOT score from per-frame IoU, empty flags and visibility lists."""
    T = len(ious)
    first = sum(ious[t] * (v[t] > 0) + p[t] * (1 - (v[t] > 0)) for t in range(T)) / T
    t_star = sum(1 for x in v if x > 0)
    if t_star == 0:
        return first
    return first - 0.2 * (sum(p[t] * (v[t] > 0) for t in range(T)) / t_star) ** 0.3


def _box_iou(a, b):
    ax2, ay2 = a[0] + a[2], a[1] + a[3]
    bx2, by2 = b[0] + b[2], b[1] + b[3]
    iw = max(0.0, min(ax2, bx2) - max(a[0], b[0]))
    ih = max(0.0, min(ay2, by2) - max(a[1], b[1]))
    inter = iw * ih
    union = a[2] * a[3] + b[2] * b[3] - inter
    return inter / union if union > 0 else 0.0


def brute_force_clear(gt_frames, pred_frames, thresh=0.5):
    """CLEAR-MOT counts by enumerating every partial matching per frame.

    Inputs map frame -> list of (id, (x, y, w, h)). Keeps still-valid previous
    correspondences, then picks the matching of the remaining objects with the
    most pairs and, among those, the lowest summed (1 - IoU).
    """
    fp = fn = ids = 0
    last = {}
    for f in sorted(set(gt_frames) | set(pred_frames)):
        gts = list(gt_frames.get(f, []))
        preds = list(pred_frames.get(f, []))
        pairs = []
        for gi, (gid, gb) in enumerate(gts):
            for pj, (pid, pb) in enumerate(preds):
                if last.get(gid) == pid and _box_iou(gb, pb) >= thresh and all(pj != q for _, q in pairs):
                    pairs.append((gi, pj))
        kept = list(pairs)
        free_g = [i for i in range(len(gts)) if i not in {a for a, _ in kept}]
        free_p = [j for j in range(len(preds)) if j not in {b for _, b in kept}]
        best, best_key = [], (0, 0.0)
        k_max = min(len(free_g), len(free_p))
        for k in range(k_max, 0, -1):
            for gsub in itertools.combinations(free_g, k):
                for psub in itertools.permutations(free_p, k):
                    cand = list(zip(gsub, psub))
                    ious = [_box_iou(gts[g][1], preds[p][1]) for g, p in cand]
                    if any(x < thresh for x in ious):
                        continue
                    key = (k, -sum(1 - x for x in ious))
                    if not best or key > best_key:
                        best, best_key = cand, key
            if best:
                break
        for g, p in best:
            gid, pid = gts[g][0], preds[p][0]
            if gid in last and last[gid] != pid:
                ids += 1
        for g, p in kept + best:
            last[gts[g][0]] = preds[p][0]
        n_match = len(kept) + len(best)
        fn += len(gts) - n_match
        fp += len(preds) - n_match
    return fp, fn, ids


def scalar_cv_kalman(z, r_std, q_pos_std, q_vel_std, p0_pos_std, p0_vel_std):
    """One coordinate of a constant-velocity Kalman filter, written with scalars.

    Returns the predicted positions for frames 2..len(z) (before each update).
    """
    x, v = z[0], 0.0
    pxx, pxv, pvv = p0_pos_std ** 2, 0.0, p0_vel_std ** 2
    preds = []
    for k in range(1, len(z)):
        x, v = x + v, v
        pxx, pxv, pvv = pxx + 2 * pxv + pvv + q_pos_std ** 2, pxv + pvv, pvv + q_vel_std ** 2
        preds.append(x)
        s = pxx + r_std ** 2
        kx, kv = pxx / s, pxv / s
        innov = z[k] - x
        x, v = x + kx * innov, v + kv * innov
        pxx, pxv, pvv = (1 - kx) * pxx, (1 - kx) * pxv, pvv - kv * pxv
    return preds


def batch_map_cv(z, r_var, q_pos_var, q_vel_var, p0_pos_var, p0_vel_var):
    """MAP estimate of the last (position, velocity) of a 1-D constant-velocity
    model, by solving the normal equations over the whole trajectory."""
    N = len(z)
    dim = 2 * N
    A_rows, b_rows, w = [], [], []

    def row(entries):
        r = np.zeros(dim)
        for idx, val in entries:
            r[idx] = val
        return r

    A_rows += [row([(0, 1.0)]), row([(1, 1.0)])]
    b_rows += [z[0], 0.0]
    w += [1 / p0_pos_var, 1 / p0_vel_var]
    for k in range(1, N):
        px, pv, cx, cv = 2 * (k - 1), 2 * (k - 1) + 1, 2 * k, 2 * k + 1
        A_rows.append(row([(cx, 1.0), (px, -1.0), (pv, -1.0)]))
        b_rows.append(0.0)
        w.append(1 / q_pos_var)
        A_rows.append(row([(cv, 1.0), (pv, -1.0)]))
        b_rows.append(0.0)
        w.append(1 / q_vel_var)
        A_rows.append(row([(cx, 1.0)]))
        b_rows.append(z[k])
        w.append(1 / r_var)
    A = np.array(A_rows)
    b = np.array(b_rows)
    W = np.diag(w)
    sol = np.linalg.solve(A.T @ W @ A, A.T @ W @ b)
    return sol[-2], sol[-1]
