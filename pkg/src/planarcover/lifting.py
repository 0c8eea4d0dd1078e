"""Path lifting by subdivision inside a normal domain.

A target path beta in the image disk is cut into parameter intervals; for
each interval the preimage of a thin tube around the corresponding piece
of beta is rasterized and one flood-fill component is chained to the
previous one.  Intervals whose component is wider than the current budget
get split, the budget halves per level, and the final chain is read out
into a polyline through per-cell refined points.  The sup error reported
is measured at the knots of the returned lift.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    ChainBroken,
    InfiniteLiftSuspect,
    PreconditionFailed,
    ToleranceNotMet,
    VerificationFailed,
)
from .geometry import dist_to_polyline, max_pairwise_distance
from .maps import eval_array, evaluate
from .normal import fiber_mask
from .region import CellRegion, Polyline, connected_components, samples_for
from ._kernels import label4

#: tube half-width in units of (local stretch * cell size); wide enough
#: that a cell whose interior meets the true preimage keeps a stencil
#: sample inside the tube
DEFAULT_TUBE_INFLATION = 0.8

_WIDTH_FLOOR = 2.0 ** -26
_MAX_LEVELS = 48
_MAX_INTERVALS = 4096
_MAX_ROUNDS = 160


@dataclass(frozen=True)
class ChainComponent:
    """One chained flood-fill component, stored as sorted flat cell
    indices into the grid."""

    cells: np.ndarray
    rep: int
    diameter: float

    def region(self, grid):
        mask = np.zeros(grid.shape, dtype=bool)
        mask.ravel()[self.cells] = True
        return CellRegion(grid, mask)


@dataclass(frozen=True)
class ComponentChain:
    level: int
    intervals: tuple
    components: tuple


@dataclass(frozen=True)
class LiftResult:
    lift: Polyline
    target: Polyline
    sup_error: float
    levels_used: int
    chains: Optional[tuple] = None


@dataclass(frozen=True)
class UniqueLiftCheck:
    agree: bool
    max_separation: float
    witness_param: float

    def __bool__(self):
        return self.agree


class _Tuber:
    """Rasterizes and labels per-interval tube preimages, memoized per
    parameter interval so refinement rounds only pay for new intervals."""

    def __init__(self, samples, region_mask, beta, tube_inflation):
        self.samples = samples
        self.grid = samples.grid
        self.region_mask = region_mask
        self.beta = beta
        h = self.grid.cell_size
        self.tube = tube_inflation * np.maximum(samples.s_loc, 1e-12) * h
        self.prefilter = self.tube * (1.0 + 0.36 / max(tube_inflation, 1e-9))
        self._memo = {}
        self._diam = {}

    def labeled(self, a, b, force_flat=None):
        """(flat cell indices, labels at those cells) for the interval."""
        key = (a, b, force_flat)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        base = self._memo.get((a, b, None))
        if base is None or force_flat is None:
            chord = np.asarray(self.beta.restrict(a, b))
            # cheap reject first: |f - hub| - hub_radius lower-bounds the
            # distance to the chord, so one abs() prunes almost every cell
            hub = complex(
                0.5 * (chord.real.min() + chord.real.max()),
                0.5 * (chord.imag.min() + chord.imag.max()),
            )
            rough = np.abs(self.samples.f_center - hub) - np.abs(chord - hub).max()
            cand = self.region_mask & (rough <= self.prefilter)
            idx = np.flatnonzero(cand.ravel())
            if idx.size:
                dc = dist_to_polyline(self.samples.f_center.ravel()[idx], chord)
                idx = idx[dc <= self.prefilter.ravel()[idx]]
            if idx.size:
                flat_vals = self.samples.values.reshape(5, -1)[:, idx]
                dmin = dist_to_polyline(flat_vals[0], chord)
                for plane in range(1, 5):
                    np.minimum(dmin, dist_to_polyline(flat_vals[plane], chord), out=dmin)
                idx = idx[dmin <= self.tube.ravel()[idx]]
        else:
            idx = base[0]
        if force_flat is not None and force_flat not in idx:
            idx = np.unique(np.append(idx, force_flat))
        hit = (idx, _labels_at(idx, self.grid.shape))
        self._memo[key] = hit
        return hit

    def diameter(self, a, b, force_flat, lab, cells):
        key = (a, b, force_flat, int(lab))
        d = self._diam.get(key)
        if d is None:
            d = _component_diameter(cells, self.grid)
            self._diam[key] = d
        return d

    def point_floor(self, t, comp):
        """Diameter of the degenerate-chord component at parameter t.

        The point tube at beta(t) is contained in the tube of every interval
        around t, so this lower-bounds the component diameter of any such
        interval; near a branch point it stays fat no matter how finely the
        parameter is split."""
        flat, labels = self.labeled(t, t)
        if flat.size == 0:
            return 0.0
        pos = np.searchsorted(flat, comp.rep)
        if pos < flat.size and flat[pos] == comp.rep:
            lab = labels[pos]
        else:
            inside = np.isin(flat, comp.cells, assume_unique=True)
            if not inside.any():
                return 0.0
            sub = flat[inside]
            centers = self.grid.centers.ravel()
            j = int(np.argmin(np.abs(centers[sub] - centers[comp.rep])))
            lab = labels[inside][j]
        cells = flat[labels == lab]
        return self.diameter(t, t, None, int(lab), cells)


def _labels_at(flat_idx, shape):
    """Connected-component labels for a flat cell set, computed on the
    bounding box of the set (components cannot join outside it)."""
    if flat_idx.size == 0:
        return np.zeros(0, dtype=np.int32)
    nr, nc = shape
    r = flat_idx // nc
    c = flat_idx % nc
    r0, c0 = int(r.min()), int(c.min())
    sub_shape = (int(r.max()) - r0 + 1, int(c.max()) - c0 + 1)
    mask = np.zeros(sub_shape, dtype=np.uint8)
    sub = (r - r0) * sub_shape[1] + (c - c0)
    mask.ravel()[sub] = 1
    labels, _ = label4(mask)
    return labels.ravel()[sub]


def _neighbors_flat(flat_idx, shape):
    nr, nc = shape
    r = flat_idx // nc
    c = flat_idx % nc
    parts = [flat_idx]
    parts.append(flat_idx[c + 1 < nc] + 1)
    parts.append(flat_idx[c > 0] - 1)
    parts.append(flat_idx[r + 1 < nr] + nc)
    parts.append(flat_idx[r > 0] - nc)
    return np.unique(np.concatenate(parts))


def _component_diameter(flat_idx, grid):
    pts = grid.centers.ravel()[flat_idx]
    return max_pairwise_distance(pts) + math.sqrt(2.0) * grid.cell_size


def _build_chain(tuber, partition, start_flat):
    grid = tuber.grid
    centers = grid.centers.ravel()
    comps = []
    prev_cells = None
    prev_rep = None
    for i, (a, b) in enumerate(partition):
        force = start_flat if i == 0 else None
        flat, labels = tuber.labeled(a, b, force_flat=force)
        if flat.size == 0:
            raise ChainBroken(
                f"tube preimage empty on [{a:g}, {b:g}]; target leaves the region"
            )
        if i == 0:
            lab = labels[np.searchsorted(flat, start_flat)]
            cells = flat[labels == lab]
            rep = start_flat
        else:
            nbrs = _neighbors_flat(prev_cells, grid.shape)
            touch = labels[np.isin(flat, nbrs, assume_unique=True)]
            cand_labels = np.unique(touch)
            if cand_labels.size == 0:
                raise ChainBroken(
                    f"no tube component on [{a:g}, {b:g}] touches the chained "
                    "component of the previous interval"
                )
            best = None
            rep_center = centers[prev_rep]
            for lab in cand_labels:
                cells_l = flat[labels == lab]
                d = np.abs(centers[cells_l] - rep_center)
                j = int(np.argmin(d))
                item = (float(d[j]), int(cells_l[j]), int(lab), cells_l)
                if best is None or item[:3] < best[:3]:
                    best = item
            cells = best[3]
            rep = best[1]
            lab = best[2]
        diam = tuber.diameter(a, b, force, lab, cells)
        comps.append(ChainComponent(cells=cells, rep=rep, diameter=diam))
        prev_cells = cells
        prev_rep = rep
    return comps


def _micro_refine(pmap, grid, cand_flat, target, m=5, max_cells=24):
    """Best point for f(p) ~ target among m*m offsets in candidate cells."""
    centers = grid.centers.ravel()[cand_flat]
    if cand_flat.size > max_cells:
        # rank by image distance so the kept cells bracket the target
        fc = eval_array(pmap, centers)
        order = np.lexsort((cand_flat, np.abs(fc - target)))
        keep = order[:max_cells]
        cand_flat = cand_flat[keep]
        centers = centers[keep]
    h = grid.cell_size
    u = (np.arange(m) - (m - 1) / 2.0) / m * h
    offsets = (u[:, None] + 1j * u[None, :]).ravel()
    pts = (centers[:, None] + offsets[None, :]).ravel()
    vals = eval_array(pmap, pts)
    j = int(np.argmin(np.abs(vals - target)))
    return complex(pts[j]), complex(vals[j])


def lift_path(
    pmap,
    nd,
    beta,
    x0,
    tol,
    samples=None,
    tube_inflation=DEFAULT_TUBE_INFLATION,
    initial_intervals=1,
    return_chains=False,
    micro=5,
):
    """Lift beta to a path from x0 inside the normal domain nd.

    Preconditions: beta stays in the closed image disk, x0 lies in the
    region, and f(x0) matches beta(0) within tol.  Raises ChainBroken when
    the component chain cannot be continued and ToleranceNotMet when the
    grid floor is reached with knot error still above tol.
    """
    if not isinstance(beta, Polyline):
        beta = Polyline.from_vertices(np.asarray(beta, dtype=complex))
    x0 = complex(x0)
    tol = float(tol)
    if tol <= 0:
        raise PreconditionFailed("tol must be positive")
    grid = nd.grid
    if samples is None:
        samples = nd.samples if nd.samples is not None else samples_for(pmap, grid)

    dense = beta.eval(np.linspace(0.0, 1.0, 512))
    overshoot = float(np.abs(dense - nd.image_center).max())
    if overshoot > nd.radius * (1.0 + 1e-9):
        raise PreconditionFailed(
            f"target path leaves the image disk: reaches {overshoot:.6g} "
            f"from the center, radius is {nd.radius:.6g}"
        )
    cell0 = grid.point_to_cell(x0)
    if not nd.region.mask[cell0]:
        raise PreconditionFailed(f"start point {x0} is not in the region")
    fx0 = evaluate(pmap, x0)
    start_err = abs(fx0 - complex(beta.eval(0.0)))
    if start_err > tol * (1.0 + 1e-9):
        raise PreconditionFailed(
            f"f(x0) misses beta(0) by {start_err:.3g}, above tol {tol:g}"
        )

    start_flat = cell0[0] * grid.ncols + cell0[1]
    tuber = _Tuber(samples, nd.region.mask, beta, tube_inflation)
    big_d = nd.region.diameter
    h = grid.cell_size

    n0 = max(1, int(initial_intervals))
    edges = np.linspace(0.0, 1.0, n0 + 1)
    partition = [(float(edges[i]), float(edges[i + 1])) for i in range(n0)]
    chain = _build_chain(tuber, partition, start_flat)

    level = 0
    rounds = 0
    chains_log = []
    # a component of one or two cells cannot shrink by splitting its interval
    floor = (1.0 + math.sqrt(2.0)) * h + 1e-12
    # refining below the tube footprint (about 3.7 cells for a point-like
    # chord) adds knots without shrinking anything; the per-knot readout
    # works inside single cells anyway
    stop_goal = max(tol / 2.0, 4.8 * h)
    while True:
        eps = max(big_d * 2.0 ** (-level), stop_goal)
        viol = {i for i, comp in enumerate(chain) if comp.diameter >= eps}
        if not viol:
            if return_chains:
                chains_log.append(
                    ComponentChain(level=level, intervals=tuple(partition), components=tuple(chain))
                )
            if eps <= stop_goal:
                break
            level += 1
            if level > _MAX_LEVELS:
                break
            continue
        new_partition = []
        progressed = False
        may_split = len(partition) < _MAX_INTERVALS and rounds < _MAX_ROUNDS
        for i, (a, b) in enumerate(partition):
            comp = chain[i]
            can_split = (
                may_split
                and i in viol
                and (b - a) > _WIDTH_FLOOR
                and comp.diameter > floor
            )
            if can_split:
                mid = 0.5 * (a + b)
                if comp.diameter <= tuber.point_floor(mid, comp) + 1e-12:
                    # already at the local footprint (sqrt-fat near a branch
                    # point); children keep the midpoint tube, so splitting
                    # cannot shrink this component
                    can_split = False
            if can_split:
                mid = 0.5 * (a + b)
                new_partition.append((a, mid))
                new_partition.append((mid, b))
                progressed = True
            else:
                new_partition.append((a, b))
        if not progressed:
            if return_chains:
                chains_log.append(
                    ComponentChain(level=level, intervals=tuple(partition), components=tuple(chain))
                )
            break
        rounds += 1
        partition = new_partition
        chain = _build_chain(tuber, partition, start_flat)

    knots = np.array([a for a, _ in partition] + [1.0])
    targets = beta.eval(knots)
    verts = np.empty(knots.size, dtype=complex)
    errs = np.empty(knots.size)
    verts[0] = x0
    errs[0] = start_err
    for i in range(1, knots.size):
        if i < knots.size - 1:
            cand = np.intersect1d(chain[i - 1].cells, chain[i].cells, assume_unique=True)
            if cand.size == 0:
                left = chain[i - 1].cells
                right = chain[i].cells
                cand = np.union1d(
                    right[np.isin(right, _neighbors_flat(left, grid.shape), assume_unique=True)],
                    left[np.isin(left, _neighbors_flat(right, grid.shape), assume_unique=True)],
                )
        else:
            cand = chain[-1].cells
        pt, val = _micro_refine(pmap, grid, cand, complex(targets[i]), m=micro)
        verts[i] = pt
        errs[i] = abs(val - targets[i])

    sup_error = float(errs.max())
    if sup_error > tol:
        raise ToleranceNotMet(
            f"knot error {sup_error:.3g} exceeds tol {tol:g} at cell size {h:g}; "
            "refine the grid"
        )
    return LiftResult(
        lift=Polyline(verts, knots),
        target=Polyline(targets, knots),
        sup_error=sup_error,
        levels_used=level,
        chains=tuple(chains_log) if return_chains else None,
    )


def assert_unique_lift(pmap, bounds, lift1, lift2, tol):
    """Check the hypotheses of lift uniqueness and measure how far the two
    lifts actually are from each other.

    Raises PreconditionFailed naming the violated hypothesis; otherwise
    returns a truthy record iff the lifts agree within 3 * tol everywhere
    on the merged parameter set.
    """
    tol = float(tol)
    for name, lift in (("first", lift1), ("second", lift2)):
        inside = [bounds.contains(v, margin=0.0) for v in lift.vertices]
        if not all(inside):
            k = inside.index(False)
            raise PreconditionFailed(
                f"{name} lift leaves the bounds at vertex {k} ({lift.vertices[k]})"
            )
    for t, label in ((0.0, "start"), (1.0, "end")):
        d = abs(complex(lift1.eval(t)) - complex(lift2.eval(t)))
        if d > tol * (1.0 + 1e-9):
            raise PreconditionFailed(
                f"lifts differ at the {label} by {d:.3g}, above tol {tol:g}"
            )
    u = np.union1d(lift1.params, lift2.params)
    a1 = lift1.eval(u)
    a2 = lift2.eval(u)
    f1 = evaluate(pmap, a1)
    f2 = evaluate(pmap, a2)
    df = float(np.abs(f1 - f2).max())
    if df > tol * (1.0 + 1e-9):
        k = int(np.argmax(np.abs(f1 - f2)))
        raise PreconditionFailed(
            f"lifts do not project to the same target: f-values differ by "
            f"{df:.3g} at t = {u[k]:g}, above tol {tol:g}"
        )
    sep = np.abs(a1 - a2)
    k = int(np.argmax(sep))
    return UniqueLiftCheck(
        agree=bool(sep[k] <= 3.0 * tol),
        max_separation=float(sep[k]),
        witness_param=float(u[k]),
    )


def enumerate_ray_lifts(
    pmap, nd, direction, tol, max_lifts=64, samples=None, micro=9
):
    """All lifts of the ray from f(center) toward the rim of the image
    disk, one per fiber cluster over the ray's endpoint.

    Each cluster seeds a reverse lift (rim to center) that is then flipped.
    Lifts closer than 3 cells everywhere are deduplicated.  Raises
    InfiniteLiftSuspect when clusters keep appearing beyond max_lifts.
    """
    direction = complex(direction)
    if direction == 0:
        raise PreconditionFailed("direction must be nonzero")
    tol = float(tol)
    grid = nd.grid
    h = grid.cell_size
    if samples is None:
        samples = nd.samples if nd.samples is not None else samples_for(pmap, grid)
    dirc = direction / abs(direction)
    y0 = nd.image_center
    y1 = y0 + nd.radius * (1.0 - min(0.5, tol)) * dirc
    beta = Polyline(np.array([y0, y1]), np.array([0.0, 1.0]))

    mask = fiber_mask(nd.region, samples, y1)
    if not mask.any():
        raise VerificationFailed(
            "no cell maps near the ray endpoint; the image fill evidence is stale"
        )
    labels, n = connected_components(mask, grid)
    if n > max_lifts:
        raise InfiniteLiftSuspect(
            f"{n} fiber clusters at the ray endpoint exceed the cap {max_lifts}"
        )
    flat_all = np.flatnonzero(mask.ravel())
    labels_flat = labels.ravel()[flat_all]

    gamma = Polyline(beta.vertices[::-1].copy(), np.array([0.0, 1.0]))
    results = []
    for lab in range(1, n + 1):
        cells = flat_all[labels_flat == lab]
        p_star, val = _micro_refine(pmap, grid, cells, y1, m=micro)
        err = abs(val - y1)
        if err > tol * (1.0 + 1e-9):
            raise ToleranceNotMet(
                f"cluster {lab}: nearest grid point misses the ray endpoint by "
                f"{err:.3g}, above tol {tol:g}; refine the grid"
            )
        res = lift_path(pmap, nd, gamma, p_star, tol, samples=samples)
        verts = res.lift.vertices[::-1].copy()
        params = 1.0 - res.lift.params[::-1]
        lift = Polyline(verts, params)
        results.append(
            LiftResult(
                lift=lift,
                target=beta.resample(params),
                sup_error=res.sup_error,
                levels_used=res.levels_used,
            )
        )

    kept = []
    for res in results:
        dup = False
        for other in kept:
            u = np.union1d(res.lift.params, other.lift.params)
            d = float(np.abs(res.lift.eval(u) - other.lift.eval(u)).max())
            if d < 3.0 * h:
                dup = True
                break
        if not dup:
            kept.append(res)
    if len(kept) > max_lifts:
        raise InfiniteLiftSuspect(
            f"{len(kept)} distinct lifts exceed the cap {max_lifts}"
        )
    return kept


def lift_modulus(
    pmap,
    nd,
    epsilon,
    seed=0,
    segments=120,
    arcs=120,
    samples=None,
    tube_inflation=DEFAULT_TUBE_INFLATION,
):
    """Largest tested delta such that every preimage component of an
    image-side probe of diameter delta has diameter below epsilon.

    Probes are seeded segments and half-circle arcs placed inside the
    image disk; delta halves from nd.radius until the family passes.
    Raises ModulusNotFound at the grid floor.
    """
    from .errors import ModulusNotFound

    epsilon = float(epsilon)
    grid = nd.grid
    h = grid.cell_size
    if epsilon <= 2.0 * math.sqrt(2.0) * h:
        raise PreconditionFailed(
            f"epsilon {epsilon:g} is not above the grid floor 2*sqrt(2)*cell = "
            f"{2.0 * math.sqrt(2.0) * h:g}"
        )
    if samples is None:
        samples = nd.samples if nd.samples is not None else samples_for(pmap, grid)
    fx = nd.image_center
    r = nd.radius
    region_mask = nd.region.mask
    tube_base = tube_inflation * np.maximum(samples.s_loc, 1e-12) * h
    centers_flat = grid.centers.ravel()
    arc_s = np.linspace(0.0, 1.0, 17)

    delta = r
    while delta >= h:
        rng = np.random.default_rng(seed)
        margin = delta / 2.0 + 0.02 * r
        ok = True
        for kind in ("seg",) * segments + ("arc",) * arcs:
            # rejection-sample a probe center keeping the probe inside the disk
            while True:
                c = complex(rng.uniform(-r, r), rng.uniform(-r, r))
                if abs(c) <= r - margin:
                    break
            phase = rng.uniform(0.0, 2.0 * math.pi)
            if kind == "seg":
                half = (delta / 2.0) * complex(math.cos(phase), math.sin(phase))
                probe = np.array([fx + c - half, fx + c + half])
            else:
                probe = fx + c + (delta / 2.0) * np.exp(1j * (phase + math.pi * arc_s))
            tube_r = np.maximum(epsilon / 8.0, tube_base)
            dc = dist_to_polyline(samples.f_center, probe)
            cand = region_mask & (dc <= tube_r + np.maximum(samples.s_loc, 1e-12) * h * 0.36)
            idx = np.flatnonzero(cand.ravel())
            if idx.size == 0:
                continue
            flat_vals = samples.values.reshape(5, -1)[:, idx]
            dmin = dist_to_polyline(flat_vals[0], probe)
            for plane in range(1, 5):
                np.minimum(dmin, dist_to_polyline(flat_vals[plane], probe), out=dmin)
            idx = idx[dmin <= tube_r.ravel()[idx]]
            if idx.size == 0:
                continue
            mask = np.zeros(grid.shape, dtype=np.uint8)
            mask.ravel()[idx] = 1
            labels, n = label4(mask)
            labels_flat = labels.ravel()[idx]
            for lab in range(1, n + 1):
                cells = idx[labels_flat == lab]
                diam = max_pairwise_distance(centers_flat[cells]) + math.sqrt(2.0) * h
                if diam >= epsilon:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return float(delta)
        delta /= 2.0
    raise ModulusNotFound(
        f"no delta above the cell size {h:g} keeps all preimage components "
        f"below {epsilon:g}"
    )
