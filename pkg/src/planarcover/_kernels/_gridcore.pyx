# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled grid kernels: component labeling, seeded flood fill, k-th-root
branch propagation.  The pure-Python twins live in ``pyfallback.py``; both
must produce bit-identical output (same label numbering, same BFS order)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor as c_floor

cnp.import_array()

DEF TWO_PI = 6.283185307179586


def label4(cnp.uint8_t[:, ::1] mask):
    """Label 4-connected components of a boolean mask.

    Labels start at 1 and are assigned in row-major first-encounter order;
    background cells get 0.  Returns (labels, count).
    """
    cdef Py_ssize_t h = mask.shape[0]
    cdef Py_ssize_t w = mask.shape[1]
    labels_arr = np.zeros((h, w), dtype=np.int32)
    cdef cnp.int32_t[:, ::1] labels = labels_arr
    queue_arr = np.empty(h * w, dtype=np.int64)
    cdef cnp.int64_t[::1] queue = queue_arr
    cdef Py_ssize_t head, tail, r, c, rr, cc, cur
    cdef cnp.int32_t nlab = 0

    for r in range(h):
        for c in range(w):
            if mask[r, c] and labels[r, c] == 0:
                nlab += 1
                labels[r, c] = nlab
                head = 0
                tail = 0
                queue[tail] = r * w + c
                tail += 1
                while head < tail:
                    cur = queue[head]
                    head += 1
                    rr = cur // w
                    cc = cur % w
                    # neighbor order: right, up, left, down
                    if cc + 1 < w and mask[rr, cc + 1] and labels[rr, cc + 1] == 0:
                        labels[rr, cc + 1] = nlab
                        queue[tail] = rr * w + cc + 1
                        tail += 1
                    if rr + 1 < h and mask[rr + 1, cc] and labels[rr + 1, cc] == 0:
                        labels[rr + 1, cc] = nlab
                        queue[tail] = (rr + 1) * w + cc
                        tail += 1
                    if cc - 1 >= 0 and mask[rr, cc - 1] and labels[rr, cc - 1] == 0:
                        labels[rr, cc - 1] = nlab
                        queue[tail] = rr * w + cc - 1
                        tail += 1
                    if rr - 1 >= 0 and mask[rr - 1, cc] and labels[rr - 1, cc] == 0:
                        labels[rr - 1, cc] = nlab
                        queue[tail] = (rr - 1) * w + cc
                        tail += 1
    return labels_arr, int(nlab)


def component_from_seed(cnp.uint8_t[:, ::1] mask, Py_ssize_t sr, Py_ssize_t sc):
    """Return the member mask of the 4-connected component containing (sr, sc)."""
    cdef Py_ssize_t h = mask.shape[0]
    cdef Py_ssize_t w = mask.shape[1]
    out_arr = np.zeros((h, w), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] out = out_arr
    if not mask[sr, sc]:
        raise ValueError("seed cell not in mask")
    queue_arr = np.empty(h * w, dtype=np.int64)
    cdef cnp.int64_t[::1] queue = queue_arr
    cdef Py_ssize_t head = 0, tail = 0, rr, cc, cur
    out[sr, sc] = 1
    queue[tail] = sr * w + sc
    tail += 1
    while head < tail:
        cur = queue[head]
        head += 1
        rr = cur // w
        cc = cur % w
        if cc + 1 < w and mask[rr, cc + 1] and not out[rr, cc + 1]:
            out[rr, cc + 1] = 1
            queue[tail] = rr * w + cc + 1
            tail += 1
        if rr + 1 < h and mask[rr + 1, cc] and not out[rr + 1, cc]:
            out[rr + 1, cc] = 1
            queue[tail] = (rr + 1) * w + cc
            tail += 1
        if cc - 1 >= 0 and mask[rr, cc - 1] and not out[rr, cc - 1]:
            out[rr, cc - 1] = 1
            queue[tail] = rr * w + cc - 1
            tail += 1
        if rr - 1 >= 0 and mask[rr - 1, cc] and not out[rr - 1, cc]:
            out[rr - 1, cc] = 1
            queue[tail] = (rr - 1) * w + cc
            tail += 1
    return out_arr


def propagate_kth_root(cnp.uint8_t[:, ::1] valid,
                       cnp.float64_t[:, ::1] theta,
                       cnp.complex128_t[:, :, ::1] roots,
                       int k,
                       Py_ssize_t sr, Py_ssize_t sc,
                       int base_branch):
    """Continue a k-th-root branch over the valid cells by BFS.

    theta holds the argument of the value whose root is taken; roots holds,
    per cell, the k candidate root values roots[r, c, j] corresponding to
    argument (theta + 2*pi*j)/k.  The start cell uses branch ``base_branch``;
    every other cell picks the branch angularly nearest its BFS parent.  All
    root values come out of the precomputed table, so the loop itself only
    does exact float arithmetic.  Returns (psi complex array, assigned mask).
    """
    cdef Py_ssize_t h = valid.shape[0]
    cdef Py_ssize_t w = valid.shape[1]
    psi_arr = np.full((h, w), np.nan + 0j, dtype=np.complex128)
    assigned_arr = np.zeros((h, w), dtype=np.uint8)
    cdef cnp.complex128_t[:, ::1] psi = psi_arr
    cdef cnp.uint8_t[:, ::1] assigned = assigned_arr
    cdef cnp.float64_t[:, ::1] ang = np.zeros((h, w), dtype=np.float64)
    if not valid[sr, sc]:
        raise ValueError("start cell not in valid mask")
    queue_arr = np.empty(h * w, dtype=np.int64)
    cdef cnp.int64_t[::1] queue = queue_arr
    cdef Py_ssize_t head = 0, tail = 0, rr, cc, cur, nr, nc, side
    cdef double parent_ang, a, j
    cdef long ji

    psi[sr, sc] = roots[sr, sc, base_branch]
    ang[sr, sc] = (theta[sr, sc] + TWO_PI * base_branch) / k
    assigned[sr, sc] = 1
    queue[tail] = sr * w + sc
    tail += 1
    while head < tail:
        cur = queue[head]
        head += 1
        rr = cur // w
        cc = cur % w
        parent_ang = ang[rr, cc]
        for side in range(4):
            if side == 0:
                nr = rr
                nc = cc + 1
            elif side == 1:
                nr = rr + 1
                nc = cc
            elif side == 2:
                nr = rr
                nc = cc - 1
            else:
                nr = rr - 1
                nc = cc
            if nr < 0 or nr >= h or nc < 0 or nc >= w:
                continue
            if not valid[nr, nc] or assigned[nr, nc]:
                continue
            j = c_floor((k * parent_ang - theta[nr, nc]) / TWO_PI + 0.5)
            a = (theta[nr, nc] + TWO_PI * j) / k
            ang[nr, nc] = a
            ji = (<long> j) % k
            if ji < 0:
                ji += k
            psi[nr, nc] = roots[nr, nc, ji]
            assigned[nr, nc] = 1
            queue[tail] = nr * w + nc
            tail += 1
    return psi_arr, assigned_arr
