# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: pairwise IoU and the shortest-augmenting-path
assignment solver.

Both functions mirror ``_core_py`` operation-for-operation so that the two
backends return bitwise-identical arrays.
"""
import numpy as np

from libc.math cimport INFINITY


def iou_matrix(const double[:, ::1] a, const double[:, ::1] b):
    """Pairwise IoU between two (N, 4) / (M, 4) arrays of tlwh boxes."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t m = b.shape[0]
    cdef Py_ssize_t i, j
    cdef double ax1, ay1, ax2, ay2, aa, bx1, by1, bx2, by2, ba
    cdef double lo, hi, iw, ih, inter, union
    out = np.zeros((n, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    for i in range(n):
        ax1 = a[i, 0]
        ay1 = a[i, 1]
        ax2 = ax1 + a[i, 2]
        ay2 = ay1 + a[i, 3]
        aa = a[i, 2] * a[i, 3]
        for j in range(m):
            bx1 = b[j, 0]
            by1 = b[j, 1]
            bx2 = bx1 + b[j, 2]
            by2 = by1 + b[j, 3]
            hi = ax2 if ax2 < bx2 else bx2
            lo = ax1 if ax1 > bx1 else bx1
            iw = hi - lo
            if not iw > 0.0:
                continue
            hi = ay2 if ay2 < by2 else by2
            lo = ay1 if ay1 > by1 else by1
            ih = hi - lo
            if not ih > 0.0:
                continue
            ba = b[j, 2] * b[j, 3]
            inter = iw * ih
            union = (aa + ba) - inter
            if union > 0.0:
                o[i, j] = min(inter / union, 1.0)
    return out


def lsa_potentials(const double[:, ::1] cost):
    """Solve a rectangular min-cost assignment with rows <= cols.

    Returns ``(col_of_row, u, v)`` where ``u``/``v`` are the optimal row and
    column potentials (``cost[i, j] - u[i] - v[j] >= 0`` everywhere, with
    equality on the returned matching).
    """
    cdef Py_ssize_t n = cost.shape[0]
    cdef Py_ssize_t m = cost.shape[1]
    if n > m:
        raise ValueError("lsa_potentials expects rows <= cols")
    u_arr = np.zeros(n + 1, dtype=np.float64)
    v_arr = np.zeros(m + 1, dtype=np.float64)
    p_arr = np.zeros(m + 1, dtype=np.intp)
    way_arr = np.zeros(m + 1, dtype=np.intp)
    minv_arr = np.empty(m + 1, dtype=np.float64)
    used_arr = np.empty(m + 1, dtype=np.uint8)
    cdef double[::1] u = u_arr
    cdef double[::1] v = v_arr
    cdef Py_ssize_t[::1] p = p_arr
    cdef Py_ssize_t[::1] way = way_arr
    cdef double[::1] minv = minv_arr
    cdef unsigned char[::1] used = used_arr
    cdef Py_ssize_t i, j, i0, j0, j1
    cdef double delta, cur, ui0

    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        for j in range(m + 1):
            minv[j] = INFINITY
            used[j] = 0
        while True:
            used[j0] = 1
            i0 = p[j0]
            ui0 = u[i0]
            delta = INFINITY
            j1 = 0
            for j in range(1, m + 1):
                if not used[j]:
                    cur = (cost[i0 - 1, j - 1] - ui0) - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break

    col_of_row = np.full(n, -1, dtype=np.intp)
    for j in range(1, m + 1):
        if p[j] != 0:
            col_of_row[p[j] - 1] = j - 1
    return col_of_row, u_arr[1:].copy(), v_arr[1:].copy()
