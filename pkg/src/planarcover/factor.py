"""Power-map normal form f = phi_inv o (w -> w^k) o psi on a normal
neighbourhood.

phi is the affine rescale of the image disk onto the unit disk.  psi is
the branch-continued k-th root of phi(f(.)) over the region's cells: the
modulus is forced algebraically, and the argument is propagated from a
base cell by always taking the root nearest the parent cell's value.  The
kernel works from a precomputed per-cell table of all k roots, so the
compiled and pure backends pick bit-identical values.

Monodromy is checked with integer arithmetic: every adjacent assigned
pair must agree on the branch index after removing the base-angle step,
and a cell ring around the center must wind exactly k times, with the
sign fixing the orientation and the deck generator.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import MonodromyMismatch, PreconditionFailed, ResidualExceeded
from .branch import local_degree
from .maps import eval_array, evaluate
from .normal import fiber_mask, normal_neighbourhood_at
from .region import connected_component, region_boundary, samples_for
from ._kernels import propagate_kth_root

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, eq=False)
class NormalFormChart:
    """Factorization data on a normal neighbourhood.

    psi_table holds psi at cell centers (NaN outside the region); queries
    go through nearest-cell lookup with a bilinear blend of valid
    neighbors.
    """

    map: object
    nd: object
    k: int
    orientation: int
    deck_generator: complex
    psi_table: np.ndarray = field(repr=False)
    residual: float
    base_cell: tuple
    injectivity_violations: int
    injectivity_threshold: float
    unassigned_cells: int

    @property
    def image_center(self):
        return self.nd.image_center

    @property
    def radius(self):
        return self.nd.radius

    def phi(self, w):
        return (np.asarray(w, dtype=complex) - self.nd.image_center) / self.nd.radius

    def phi_inv(self, u):
        return np.asarray(u, dtype=complex) * self.nd.radius + self.nd.image_center

    def psi(self, w):
        """psi at arbitrary points: bilinear over the four surrounding cell
        centers, renormalized over the valid ones; nearest-cell fallback."""
        w = np.asarray(w, dtype=complex)
        scalar = w.ndim == 0
        w = np.atleast_1d(w)
        grid = self.nd.grid
        h = grid.cell_size
        gx = (w.real - grid.bounds.x0) / h - 0.5
        gy = (w.imag - grid.bounds.y0) / h - 0.5
        c0 = np.clip(np.floor(gx).astype(np.int64), 0, grid.ncols - 2)
        r0 = np.clip(np.floor(gy).astype(np.int64), 0, grid.nrows - 2)
        tx = np.clip(gx - c0, 0.0, 1.0)
        ty = np.clip(gy - r0, 0.0, 1.0)
        out = np.zeros(w.shape, dtype=complex)
        wsum = np.zeros(w.shape)
        for dr, dc, wt in (
            (0, 0, (1 - tx) * (1 - ty)),
            (0, 1, tx * (1 - ty)),
            (1, 0, (1 - tx) * ty),
            (1, 1, tx * ty),
        ):
            vals = self.psi_table[r0 + dr, c0 + dc]
            good = ~np.isnan(vals.real)
            out[good] += wt[good] * vals[good]
            wsum[good] += wt[good]
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(wsum > 1e-12, out / np.where(wsum > 0, wsum, 1.0), np.nan)
        return complex(out[0]) if scalar else out


@dataclass(frozen=True)
class VerificationReport:
    max_residual: float
    min_separation_ratio: float
    boundary_max_deviation: float
    probes_used: int


def _principal_diff_angles(u, v):
    """Principal value of arg(u) - arg(v) via the quotient's argument."""
    return np.angle(u * np.conj(v))


def _unit_root(m, k):
    """exp(2*pi*i*m/k), exact on the four axis directions."""
    m %= k
    if 4 * m % k == 0:
        return (1 + 0j, 1j, -1 + 0j, -1j)[4 * m // k]
    a = 2.0 * math.pi * m / k
    return complex(math.cos(a), math.sin(a))


def build_normal_form(pmap, z, grid, tol, nd=None, samples=None, _force_k=None):
    """Construct the k-th-root chart at z.

    Raises MonodromyMismatch when branch propagation is inconsistent
    around the center (wrong k or a second branch point inside the
    region) and ResidualExceeded when the factorization misses by more
    than tol at some cell.
    """
    z = complex(z)
    tol = float(tol)
    if samples is None:
        samples = samples_for(pmap, grid)
    if nd is None:
        nd = normal_neighbourhood_at(pmap, z, grid, samples=samples)
    region = nd.region
    h = grid.cell_size
    fx = nd.image_center
    r = nd.radius

    bd = region_boundary(region)
    room = float(np.abs(bd - z).min())
    deg = local_degree(pmap, z, 0.4 * room)
    orientation = 1 if deg.degree >= 0 else -1
    k = abs(deg.degree) if _force_k is None else int(_force_k)
    if k < 1:
        raise PreconditionFailed("degree must be nonzero")

    v_full = (samples.f_center - fx) / r
    central = fiber_mask(region, samples, fx)
    cluster0 = connected_component(central, grid.point_to_cell(z), grid)
    valid = region.mask & ~cluster0.mask

    rmin, rmax, cmin, cmax = region.bbox
    rsl = slice(rmin, rmax + 1)
    csl = slice(cmin, cmax + 1)
    v = np.ascontiguousarray(v_full[rsl, csl])
    valid_w = np.ascontiguousarray(valid[rsl, csl].astype(np.uint8))
    theta = np.ascontiguousarray(np.angle(v))
    rootmod = np.abs(v) ** (1.0 / k)
    j = np.arange(k)
    roots = np.ascontiguousarray(
        rootmod[:, :, None] * np.exp(1j * (theta[:, :, None] + TWO_PI * j) / k)
    )

    flat_mod = np.where(valid_w.astype(bool), np.abs(v), -1.0)
    base_flat = int(np.argmax(flat_mod))
    br, bc = divmod(base_flat, v.shape[1])
    psi_w, assigned = propagate_kth_root(valid_w, theta, roots, k, br, bc, 0)

    assigned_b = assigned.astype(bool)
    unassigned = int(valid_w.sum() - assigned_b.sum())
    if unassigned and k > 1:
        warnings.warn(
            f"{unassigned} region cells are disconnected from the base cell "
            "and carry no branch; they are excluded from the residual",
            stacklevel=2,
        )

    units = np.where(np.abs(v) > 0, v / np.where(np.abs(v) > 0, np.abs(v), 1.0), 1.0)
    if k > 1:
        _check_seams(psi_w, assigned_b, units, k)
        _check_ring_winding(
            psi_w, assigned_b, units, k, orientation,
            (grid.point_to_cell(z)[0] - rmin, grid.point_to_cell(z)[1] - cmin),
            cluster0, (rmin, cmin),
        )

    psi_table = np.full(grid.shape, np.nan + 1j * np.nan, dtype=complex)
    psi_table[rsl, csl][assigned_b] = psi_w[assigned_b]
    _fill_central_cluster(psi_table, cluster0, v_full, k, grid.point_to_cell(z))

    defined = ~np.isnan(psi_table.real)
    resid = np.abs(v_full[defined] - psi_table[defined] ** k)
    residual = float(resid.max()) if resid.size else 0.0
    if residual > tol:
        raise ResidualExceeded(
            f"factorization residual {residual:.3g} exceeds tol {tol:g}"
        )

    r_dom = region.diameter / 2.0
    thr = min(h / r, 1.5 * h / r_dom)
    violations = _injectivity_violations(psi_table, defined, grid, thr)

    return NormalFormChart(
        map=pmap,
        nd=nd,
        k=k,
        orientation=orientation,
        deck_generator=_unit_root(orientation, k),
        psi_table=psi_table,
        residual=residual,
        base_cell=(int(br + rmin), int(bc + cmin)),
        injectivity_violations=violations,
        injectivity_threshold=thr,
        unassigned_cells=unassigned,
    )


def _check_seams(psi_w, assigned, units, k):
    """Every adjacent assigned pair must sit on the same propagated branch:
    the branch-index mismatch k*(d_arg(psi) - d_arg(v)/k)/2pi rounds to an
    exact integer, and any nonzero value is a seam."""
    for axis in (0, 1):
        a = assigned & np.roll(assigned, -1, axis=axis)
        if axis == 0:
            a[-1, :] = False
            pu, pv = psi_w[1:, :], psi_w[:-1, :]
            uu, uv = units[1:, :], units[:-1, :]
            pair = a[:-1, :]
        else:
            a[:, -1] = False
            pu, pv = psi_w[:, 1:], psi_w[:, :-1]
            uu, uv = units[:, 1:], units[:, :-1]
            pair = a[:, :-1]
        dpsi = _principal_diff_angles(pu[pair], pv[pair])
        dth = _principal_diff_angles(uu[pair], uv[pair])
        m = np.rint((dpsi - dth / k) * k / TWO_PI).astype(np.int64) % k
        bad = int(np.count_nonzero(m))
        if bad:
            raise MonodromyMismatch(
                f"{bad} adjacent cell pairs change branch by a nontrivial "
                f"deck transformation; k = {k} is inconsistent with the data"
            )


def _check_ring_winding(psi_w, assigned, units, k, orientation, center_rc, cluster0, offset):
    """The image argument must wind exactly +-k around a cell ring
    enclosing the center."""
    r0, c0 = center_rc
    rmin, cmin = offset
    idx = cluster0.indices
    cheb = int(np.abs(idx - np.array([[r0 + rmin, c0 + cmin]])).max()) if idx.size else 0
    nr, nc = psi_w.shape
    for m in range(cheb + 2, cheb + 9):
        ring = _square_ring(r0, c0, m, nr, nc)
        if ring is None:
            continue
        rows, cols = ring
        if not assigned[rows, cols].all():
            continue
        u = units[rows, cols]
        total = _principal_diff_angles(np.roll(u, -1), u).sum()
        w = int(round(total / TWO_PI))
        if abs(total / TWO_PI - w) > 0.01:
            continue
        if w != orientation * k:
            raise MonodromyMismatch(
                f"image winding around the center is {w}, expected "
                f"{orientation * k}; wrong k or another branch point inside"
            )
        return
    warnings.warn(
        "no complete cell ring around the center; winding left unchecked",
        stacklevel=3,
    )


def _square_ring(r0, c0, m, nr, nc):
    """Cells of the Chebyshev-radius-m square ring, counterclockwise from
    the right edge, or None when it leaves the window."""
    if r0 - m < 0 or c0 - m < 0 or r0 + m >= nr or c0 + m >= nc:
        return None
    rows, cols = [], []
    for dr in range(-m, m):  # right edge, going up
        rows.append(r0 + dr)
        cols.append(c0 + m)
    for dc in range(m, -m, -1):  # top edge, going left
        rows.append(r0 + m)
        cols.append(c0 + dc)
    for dr in range(m, -m, -1):  # left edge, going down
        rows.append(r0 + dr)
        cols.append(c0 - m)
    for dc in range(-m, m):  # bottom edge, going right
        rows.append(r0 - m)
        cols.append(c0 + dc)
    return np.array(rows), np.array(cols)


def _fill_central_cluster(psi_table, cluster0, v_full, k, center_cell):
    """Assign the central fiber cluster: 0 at the center cell, modulus
    formula elsewhere with the branch taken from a propagated cell further
    out on the same ray.

    Chaining arguments between adjacent cluster cells would be wrong here:
    next to the center, neighbors differ in base angle by up to pi times
    k, so nearest-branch selection flips sheets.  Along a ray from the
    center the base angle is stable, making the radial reference safe.
    """
    nr, nc = psi_table.shape
    r0, c0 = center_cell
    psi_table[center_cell] = 0.0
    for rc in sorted(tuple(x) for x in cluster0.indices):
        rr, cc = rc
        if rc == (r0, c0):
            continue
        dy, dx = rr - r0, cc - c0
        steps = max(abs(dx), abs(dy))
        uy, ux = dy / steps, dx / steps
        ref = None
        for t in range(steps, steps + 13):
            r2, c2 = r0 + int(round(uy * t)), c0 + int(round(ux * t))
            if not (0 <= r2 < nr and 0 <= c2 < nc):
                break
            if cluster0.mask[r2, c2]:
                continue
            val = psi_table[r2, c2]
            if not np.isnan(val.real):
                ref = val
                break
        if ref is None:
            continue
        vcell = v_full[rr, cc]
        mod = abs(vcell) ** (1.0 / k)
        th = math.atan2(vcell.imag, vcell.real)
        a_ref = math.atan2(ref.imag, ref.real)
        jj = math.floor((k * a_ref - th) / TWO_PI + 0.5)
        psi_table[rr, cc] = mod * complex(
            math.cos((th + TWO_PI * jj) / k), math.sin((th + TWO_PI * jj) / k)
        )


def _injectivity_violations(psi_table, defined, grid, thr):
    """Pairs of cells farther apart than 3 cells whose psi values are
    within thr of each other."""
    pts = psi_table[defined]
    tree = cKDTree(np.column_stack([pts.real, pts.imag]))
    pairs = tree.query_pairs(thr, output_type="ndarray")
    if pairs.size == 0:
        return 0
    centers = grid.centers[defined]
    sep = np.abs(centers[pairs[:, 0]] - centers[pairs[:, 1]])
    return int(np.count_nonzero(sep > 3.0 * grid.cell_size))


def verify_normal_form(chart, probes, seed=0):
    """Residual, injectivity margin, and boundary correspondence measured
    at sampled probe points."""
    rng = np.random.default_rng(seed)
    nd = chart.nd
    grid = nd.grid
    h = grid.cell_size
    region = nd.region
    idx = region.indices
    centers = grid.centers

    n_center = max(1, probes // 10)
    n_boundary = max(1, probes // 10)
    n_uniform = max(1, probes - n_center - n_boundary)

    pick = rng.integers(0, idx.shape[0], n_uniform)
    jitter = rng.uniform(-0.45, 0.45, (n_uniform, 2)) * h
    pts = [
        centers[idx[pick, 0], idx[pick, 1]] + jitter[:, 0] + 1j * jitter[:, 1]
    ]

    got = []
    for _ in range(20 * n_center):
        if len(got) >= n_center:
            break
        rho = rng.uniform(0.6 * h, 6.0 * h)
        ang = rng.uniform(0.0, TWO_PI)
        w = nd.center + rho * complex(math.cos(ang), math.sin(ang))
        cell = grid.point_to_cell(w)
        if region.mask[cell]:
            got.append(w)
    pts.append(np.array(got, dtype=complex))

    rim_mask = region.mask & ~_erode4(region.mask)
    rim_idx = np.argwhere(rim_mask)
    if rim_idx.size:
        pick = rng.integers(0, rim_idx.shape[0], n_boundary)
        jb = rng.uniform(-0.45, 0.45, (n_boundary, 2)) * h
        bpts = centers[rim_idx[pick, 0], rim_idx[pick, 1]] + jb[:, 0] + 1j * jb[:, 1]
    else:
        bpts = np.array([], dtype=complex)
    pts.append(bpts)

    w = np.concatenate(pts)
    psi_w = chart.psi(w)
    ok = ~np.isnan(psi_w.real)
    w = w[ok]
    psi_w = psi_w[ok]
    target = chart.phi(eval_array(chart.map, w))
    residual = float(np.abs(target - psi_w ** chart.k).max()) if w.size else 0.0

    bpsi = psi_w[len(w) - int(ok[-len(bpts):].sum()):] if len(bpts) else psi_w[:0]
    boundary_dev = float(np.abs(np.abs(bpsi) - 1.0).max()) if bpsi.size else 0.0

    min_ratio = math.inf
    if w.size > 1:
        dw = np.abs(w[:, None] - w[None, :])
        dpsi = np.abs(psi_w[:, None] - psi_w[None, :])
        far = dw > 3.0 * h
        if far.any():
            min_ratio = float((dpsi[far] / dw[far]).min())
    return VerificationReport(
        max_residual=residual,
        min_separation_ratio=min_ratio,
        boundary_max_deviation=boundary_dev,
        probes_used=int(w.size),
    )


def _erode4(mask):
    out = mask.copy()
    out[:, 1:] &= mask[:, :-1]
    out[:, :-1] &= mask[:, 1:]
    out[1:, :] &= mask[:-1, :]
    out[:-1, :] &= mask[1:, :]
    out[0, :] = False
    out[-1, :] = False
    out[:, 0] = False
    out[:, -1] = False
    return out
