"""Local degree, preimage counting, and branch-point detection.

The degree at a point is read off as the winding number of the image of a
small probe loop, with sample doubling until the estimate is trustworthy.
Branch detection scans a grid for cells where the sample stencil loses
injectivity, then confirms each candidate cluster by its degree and
certifies isolation with degree-1 probes on a surrounding annulus.
"""

import math
from dataclasses import dataclass
import warnings

import numpy as np

from .errors import DegenerateLoop, NonIsolatedBranch, PreconditionFailed, Unresolved, VerificationFailed
from .geometry import Rect, circle_points
from .maps import eval_array, evaluate
from .normal import fiber_mask
from .region import Grid, _STENCIL_PAIRS, connected_components, region_boundary, samples_for

_MAX_SAMPLES = 2 ** 16


@dataclass(frozen=True)
class LocalDegreeResult:
    point: complex
    rho: float
    degree: int
    min_image_gap: float
    samples_used: int

    def __int__(self):
        return self.degree


@dataclass(frozen=True)
class BranchPoint:
    location: complex
    degree: int
    isolation_radius: float


@dataclass(frozen=True)
class BranchReport:
    search_region: Rect
    branch_points: tuple
    resolution: float


@dataclass(frozen=True)
class ConservationReport:
    counts: tuple
    degree: int
    all_match: bool

    def __bool__(self):
        return self.all_match


def _winding(values):
    """Sum of principal argument increments around a closed loop, plus the
    largest single increment magnitude."""
    nxt = np.roll(values, -1)
    inc = np.angle(nxt * np.conj(values))
    return float(inc.sum()), float(np.abs(inc).max())


def local_degree(pmap, z, rho, samples=64):
    """Winding number of f around f(z) on the circle of radius rho.

    Doubles the sample count until two consecutive estimates agree, every
    increment is below pi/2, and the total is close to a whole turn count.
    """
    z = complex(z)
    rho = float(rho)
    if rho <= 0:
        raise PreconditionFailed("rho must be positive")
    if not pmap.domain.contains_rect(Rect.square(z, rho)):
        raise PreconditionFailed(
            f"closed disk B({z}, {rho:g}) is not inside the map's domain"
        )
    fz = evaluate(pmap, z)
    n = max(64, int(samples))
    prev = None
    while n <= _MAX_SAMPLES:
        w = eval_array(pmap, circle_points(z, rho, n)) - fz
        amax = float(np.abs(w).max())
        gap = float(np.abs(w).min())
        if gap <= 1e-12 * max(1.0, amax):
            raise DegenerateLoop(
                f"probe loop at rho {rho:g} maps onto f({z}) "
                f"(min gap {gap:.3g}); rho crosses a fiber point"
            )
        total, inc_max = _winding(w)
        turns = total / (2.0 * math.pi)
        deg = int(round(turns))
        if (
            inc_max < math.pi / 2.0
            and abs(turns - deg) < 0.01
            and deg == prev
        ):
            return LocalDegreeResult(
                point=z, rho=rho, degree=deg, min_image_gap=gap, samples_used=n
            )
        prev = deg if (inc_max < math.pi / 2.0 and abs(turns - deg) < 0.01) else None
        n *= 2
    raise Unresolved(
        f"winding estimate at {z} (rho {rho:g}) did not stabilize within "
        f"{_MAX_SAMPLES} samples"
    )


def count_preimages(pmap, nd, y, samples=None, margin=0.05, cross_check=False):
    """Number of connected fiber-cell clusters of y inside the region."""
    y = complex(y)
    if abs(y - nd.image_center) > nd.radius * (1.0 - margin) * (1.0 + 1e-9):
        raise PreconditionFailed(
            f"probe value {y} is not inside the shrunk image disk "
            f"(radius {nd.radius * (1.0 - margin):.6g})"
        )
    if samples is None:
        samples = nd.samples if nd.samples is not None else samples_for(pmap, nd.grid)
    mask = fiber_mask(nd.region, samples, y)
    _, n = connected_components(mask, nd.grid)
    if n == 0:
        warnings.warn(
            f"no cell maps near {y}; the domain's image-fill evidence is stale "
            "at this resolution",
            stacklevel=2,
        )
    if cross_check:
        from .lifting import enumerate_ray_lifts

        d = y - nd.image_center
        if abs(d) > 0:
            lifts = enumerate_ray_lifts(
                pmap, nd, d, tol=max(1e-3, 2.0 * nd.grid.cell_size), samples=samples
            )
            if len(lifts) != n:
                raise VerificationFailed(
                    f"cluster count {n} disagrees with {len(lifts)} ray lifts "
                    f"through {y}"
                )
    return n


def _stencil_candidates(samples, inside, inj_factor=0.75):
    """Cells where some stencil pair maps much closer than the cell's own
    stretch says it should: the local-injectivity failure probe."""
    vals = samples.values
    h = samples.grid.cell_size
    s = samples.s_loc
    worst = np.full(samples.grid.shape, np.inf)
    for i, j, sep in _STENCIL_PAIRS:
        ratio = np.abs(vals[i] - vals[j]) / (sep * h)
        np.minimum(worst, ratio, out=worst)
    return inside & (worst < inj_factor * s) & (s > 0)


def detect_branch_points(pmap, search, grid, samples=None, inj_factor=0.75):
    """Scan a rectangle for branch points and certify their isolation."""
    if not pmap.domain.contains_rect(search):
        raise PreconditionFailed("search rectangle is not inside the map's domain")
    if samples is None:
        samples = samples_for(pmap, grid)
    h = grid.cell_size
    centers = grid.centers
    inside = (
        (centers.real >= search.x0)
        & (centers.real <= search.x1)
        & (centers.imag >= search.y0)
        & (centers.imag <= search.y1)
    )
    cand = _stencil_candidates(samples, inside, inj_factor)
    labels, n = connected_components(cand, grid)

    found = []
    for lab in range(1, n + 1):
        cells = np.argwhere(labels == lab)
        pts = centers[cells[:, 0], cells[:, 1]]
        centroid = complex(pts.mean())
        spread = float(np.abs(pts - centroid).max()) if pts.size > 1 else 0.0
        room = pmap.domain.bounding_rect().interior_distance(centroid)
        rho0 = min(max(8.0 * h, 3.0 * spread), 0.45 * room)
        if rho0 <= 0:
            continue
        deg = _stable_degree(pmap, centroid, rho0)
        if deg is None or abs(deg) < 2:
            continue
        found.append((centroid, deg, rho0))

    # isolation radii: largest tested rho whose annulus probes all look
    # locally injective, capped so the reported balls stay disjoint
    points = []
    for i, (loc, deg, rho0) in enumerate(found):
        cap = 0.45 * min(
            (abs(loc - other[0]) for j, other in enumerate(found) if j != i),
            default=math.inf,
        )
        room = pmap.domain.bounding_rect().interior_distance(loc)
        iso = _isolation_radius(pmap, loc, min(cap, 0.45 * room), h)
        if iso is None:
            raise NonIsolatedBranch(
                f"cannot separate the branch point near {loc} from its "
                "neighbors at this resolution"
            )
        points.append(BranchPoint(location=loc, degree=deg, isolation_radius=iso))

    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            a, b = points[i], points[j]
            if abs(a.location - b.location) <= a.isolation_radius + b.isolation_radius:
                raise NonIsolatedBranch(
                    f"isolation balls of {a.location} and {b.location} overlap"
                )
    return BranchReport(
        search_region=search, branch_points=tuple(points), resolution=h
    )


def _stable_degree(pmap, z, rho0, tries=4):
    """Degree at z stable across two consecutive shrinking radii, or None
    when the probes keep degenerating or disagreeing."""
    degs = []
    rho = rho0
    for _ in range(tries):
        try:
            degs.append(local_degree(pmap, z, rho).degree)
        except (DegenerateLoop, Unresolved):
            degs.append(None)
        if len(degs) >= 2 and degs[-1] is not None and degs[-1] == degs[-2]:
            return degs[-1]
        rho /= 2.0
    return None


def _isolation_radius(pmap, z, rho_max, h, probes=8):
    """Largest dyadic rho <= rho_max with degree +-1 at 8 annulus points."""
    if not math.isfinite(rho_max) or rho_max <= 0:
        return None
    rho = rho_max
    while rho > 2.0 * h:
        ok = True
        for p in circle_points(z, rho, probes):
            try:
                d = local_degree(pmap, complex(p), rho / 6.0).degree
            except (DegenerateLoop, Unresolved):
                ok = False
                break
            if abs(d) != 1:
                ok = False
                break
        if ok:
            return rho
        rho /= 2.0
    return None


def degree_conservation_check(pmap, nd, probe_count, seed=0, samples=None):
    """Compare preimage counts at random annulus probes with the center's
    local degree."""
    if samples is None:
        samples = nd.samples if nd.samples is not None else samples_for(pmap, nd.grid)
    rng = np.random.default_rng(seed)
    r = nd.radius
    rad = np.sqrt(rng.uniform(0.05 ** 2, 0.9 ** 2, probe_count)) * r
    ang = rng.uniform(0.0, 2.0 * math.pi, probe_count)
    ys = nd.image_center + rad * np.exp(1j * ang)
    counts = tuple(
        count_preimages(pmap, nd, complex(y), samples=samples) for y in ys
    )
    bd = region_boundary(nd.region)
    room = float(np.abs(bd - nd.center).min())
    deg = local_degree(pmap, nd.center, 0.4 * room).degree
    return ConservationReport(
        counts=counts, degree=deg, all_match=all(c == abs(deg) for c in counts)
    )
