"""Pure-Python twins of the compiled grid kernels.

Selected automatically when the extension module is not built.  Output must
match the compiled kernels bit for bit: same label numbering (row-major first
encounter), same BFS neighbor order (right, up, left, down), same half-up
rounding in the branch choice.
"""

import math
from collections import deque

import numpy as np
from scipy import ndimage

_FOUR = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.int32)


def label4(mask):
    """Label 4-connected components; labels 1..count in row-major first-encounter order."""
    raw, n = ndimage.label(np.asarray(mask, dtype=bool), structure=_FOUR)
    if n == 0:
        return raw.astype(np.int32), 0
    # canonicalize numbering by first occurrence in the flattened scan
    flat = raw.ravel()
    nz = np.flatnonzero(flat)
    first = np.full(n + 1, flat.size, dtype=np.int64)
    # reversed so the earliest occurrence wins
    first[flat[nz[::-1]]] = nz[::-1]
    order = np.argsort(first[1:], kind="stable")
    remap = np.zeros(n + 1, dtype=np.int32)
    remap[1:][order] = np.arange(1, n + 1, dtype=np.int32)
    return remap[raw], n


def component_from_seed(mask, sr, sc):
    """Member mask of the 4-connected component containing (sr, sc)."""
    mask = np.asarray(mask, dtype=bool)
    if not mask[sr, sc]:
        raise ValueError("seed cell not in mask")
    raw, _ = ndimage.label(mask, structure=_FOUR)
    return (raw == raw[sr, sc]).astype(np.uint8)


def propagate_kth_root(valid, theta, roots, k, sr, sc, base_branch):
    """Continue a k-th-root branch over the valid cells by BFS.

    Same contract as the compiled kernel: roots[r, c, j] holds the k
    candidate root values per cell, the start cell uses branch base_branch,
    and every other cell picks the branch angularly nearest its BFS parent.
    Returns (psi, assigned).
    """
    valid = np.asarray(valid)
    h, w = valid.shape
    psi = np.full((h, w), np.nan + 0j, dtype=np.complex128)
    assigned = np.zeros((h, w), dtype=np.uint8)
    ang = np.zeros((h, w), dtype=np.float64)
    if not valid[sr, sc]:
        raise ValueError("start cell not in valid mask")
    two_pi = 6.283185307179586
    psi[sr, sc] = roots[sr, sc, base_branch]
    ang[sr, sc] = (float(theta[sr, sc]) + two_pi * base_branch) / k
    assigned[sr, sc] = 1
    queue = deque([(sr, sc)])
    while queue:
        rr, cc = queue.popleft()
        parent_ang = float(ang[rr, cc])
        for nr, nc in ((rr, cc + 1), (rr + 1, cc), (rr, cc - 1), (rr - 1, cc)):
            if nr < 0 or nr >= h or nc < 0 or nc >= w:
                continue
            if not valid[nr, nc] or assigned[nr, nc]:
                continue
            t = float(theta[nr, nc])
            j = math.floor((k * parent_ang - t) / two_pi + 0.5)
            a = (t + two_pi * j) / k
            ang[nr, nc] = a
            psi[nr, nc] = roots[nr, nc, j % k]
            assigned[nr, nc] = 1
            queue.append((nr, nc))
    return psi, assigned
