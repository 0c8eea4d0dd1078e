"""Normal domains U(x, f, r) and their verification evidence.

The radius search follows the classical recipe: shrink square
neighbourhoods V of x until the boundary of V stays clear of the fiber of
f(x), then take half the distance from f(x) to f(boundary of V).  The
domain itself is the flood-fill component of the rasterized preimage of
B(f(x), r), packaged with two measured certificates: how close f maps the
region boundary to the image circle, and how much of the image disk the
region actually covers.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import NoRadiusFound, VerificationFailed
from .geometry import Disk, Rect, circle_points, disk_sample, square_boundary_points
from .maps import eval_array, evaluate
from .region import (
    CellRegion,
    Grid,
    GridSamples,
    connected_component,
    connected_components,
    hausdorff_distance,
    rasterize_preimage,
    region_boundary,
    samples_for,
)

#: fraction of (local stretch * cell_size) within which a cell center must
#: map to a value to count as hitting it; 0.8 > sqrt(2)/2 covers the worst
#: center-to-point offset inside a cell
FIBER_FACTOR = 0.8


@dataclass(frozen=True)
class NormalRadius:
    """Radius returned by the search, with the neighbourhood V it used."""

    radius: float
    square_half_side: float
    boundary_gap: float
    center: complex

    def __float__(self):
        return self.radius


@dataclass(frozen=True)
class Evidence:
    boundary_hausdorff: float
    image_fill: float


@dataclass(frozen=True, eq=False)
class NormalDomain:
    """A certified approximation of U(x, f, r)."""

    center: complex
    radius: float
    region: CellRegion
    image_center: complex
    evidence: Evidence
    boundary_tolerance: float
    image_fill_min: float
    samples: Optional[GridSamples] = field(default=None, repr=False)

    @property
    def grid(self):
        return self.region.grid


def fiber_mask(nd_or_region, samples, y, factor=FIBER_FACTOR):
    """Cells of a region whose center maps within the local adaptive
    tolerance of the value y."""
    region = nd_or_region.region if isinstance(nd_or_region, NormalDomain) else nd_or_region
    h = samples.grid.cell_size
    eta = factor * np.maximum(samples.s_loc, 1e-12) * h
    return region.mask & (np.abs(samples.f_center - y) <= eta)


def find_normal_radius(pmap, x, grid, min_half_side=None):
    """Search dyadically shrinking squares V around x for one whose
    boundary misses the fiber of f(x), and return half the f-distance from
    f(x) to that boundary.

    Raises NoRadiusFound when every candidate V down to a few cells has a
    boundary sample mapping onto f(x) within sampling tolerance, which is
    the signature of a fiber component of positive diameter through x.
    """
    x = complex(x)
    h = grid.cell_size
    fx = evaluate(pmap, x)
    half0 = grid.bounds.interior_distance(x) * 0.999
    if half0 <= 0:
        raise NoRadiusFound(f"{x} is not interior to the grid bounds")
    if min_half_side is None:
        min_half_side = 1.5 * h

    spacing = h / 2.0
    half = half0
    while half >= min_half_side:
        rect = Rect.square(x, half)
        bd = square_boundary_points(rect, spacing)
        fb = eval_array(pmap, bd)
        gap = float(np.abs(fb - fx).min())
        # stretch observed along the boundary itself sets the sampling slack
        seg = np.abs(np.diff(np.append(bd, bd[0])))
        dfb = np.abs(np.diff(np.append(fb, fb[0])))
        with np.errstate(invalid="ignore", divide="ignore"):
            stretch = np.where(seg > 0, dfb / np.where(seg > 0, seg, 1.0), 0.0)
        slack = 2.0 * float(stretch.max()) * spacing
        if gap > max(slack, 1e-15):
            return NormalRadius(
                radius=gap / 2.0,
                square_half_side=half,
                boundary_gap=gap,
                center=x,
            )
        half /= 2.0
    raise NoRadiusFound(
        f"every square neighbourhood of {x} down to half-side {min_half_side:g} "
        "has a boundary sample on the fiber; the map does not look light here"
    )


def build_normal_domain(
    pmap,
    x,
    r,
    grid,
    samples=None,
    image_fill_min=0.99,
    boundary_factor=3.0,
    fill_points=1000,
):
    """Flood-fill approximation of U(x, f, r) with verification evidence.

    Raises VerificationFailed when the boundary image strays from the
    circle of radius r by more than boundary_factor * cell_size * L, with L
    the stretch observed on the region's rim, or when the image disk is not
    covered to image_fill_min.
    """
    x = complex(x)
    r = float(r)
    if samples is None:
        samples = samples_for(pmap, grid)
    fx = evaluate(pmap, x)
    mask = rasterize_preimage(pmap, Disk(fx, r), grid, samples=samples)
    seed = grid.point_to_cell(x)
    if not mask[seed]:
        raise VerificationFailed(
            f"cell of {x} has no stencil sample mapping into B({fx}, {r:g}); "
            "the radius is below what this grid can resolve"
        )
    region = connected_component(mask, seed, grid)

    boundary = region_boundary(region)
    if boundary.size == 0:
        raise VerificationFailed("region boundary is empty; grid too small for r")
    fb = eval_array(pmap, boundary)
    n_circle = int(min(8192, max(512, 4 * boundary.size)))
    circle = circle_points(fx, r, n_circle)
    bh = hausdorff_distance(fb, circle)

    h = grid.cell_size
    rim = region.mask & ~_erode4(region.mask)
    l_eff = float(samples.s_loc[rim].max()) if rim.any() else float(samples.s_loc.max())
    threshold = boundary_factor * h * max(l_eff, 1e-12)

    probe = disk_sample(fx, r, fill_points)
    f_members = samples.f_center[region.mask]
    s_members = samples.s_loc[region.mask]
    tree = cKDTree(np.column_stack([f_members.real, f_members.imag]))
    k = min(6, f_members.size)
    dist, idx = tree.query(np.column_stack([probe.real, probe.imag]), k=k)
    dist = np.atleast_2d(dist)
    idx = np.atleast_2d(idx)
    eta = FIBER_FACTOR * np.maximum(s_members[idx], 1e-12) * h
    covered = (dist <= eta + 1e-15).any(axis=1)
    fill = float(covered.mean())

    evidence = Evidence(boundary_hausdorff=bh, image_fill=fill)
    if bh > threshold:
        raise VerificationFailed(
            f"boundary image strays {bh:.3g} from the circle, above the "
            f"threshold {threshold:.3g}; r too large or grid too coarse"
        )
    if fill < image_fill_min:
        raise VerificationFailed(
            f"image fill {fill:.4f} below {image_fill_min}; r too large or grid too coarse"
        )
    return NormalDomain(
        center=x,
        radius=r,
        region=region,
        image_center=fx,
        evidence=evidence,
        boundary_tolerance=threshold,
        image_fill_min=image_fill_min,
        samples=samples,
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


def is_normal_neighbourhood(pmap, nd, samples=None):
    """True when the fiber of f(center) inside the region reduces to the
    center alone.

    Fast path: every fiber cell within a 2-cell box of the center's cell.
    Flat branch points (high degree) legitimately smear the fiber mask over
    a slightly larger blob, so the fallback accepts any single 4-connected
    fiber cluster through the center; a second cluster anywhere in the
    region, that is a genuinely distinct fiber point, returns False.
    """
    samples = samples or nd.samples or samples_for(pmap, nd.grid)
    mask = fiber_mask(nd, samples, nd.image_center)
    if not mask.any():
        return False
    cr, cc = nd.grid.point_to_cell(nd.center)
    if not mask[cr, cc]:
        return False
    idx = np.argwhere(mask)
    cheb = np.abs(idx - np.array([cr, cc])).max(axis=1)
    if cheb.max() <= 2:
        return True
    labels, _ = connected_components(mask, nd.grid)
    return bool(np.all(labels[mask] == labels[cr, cc]))


def normal_neighbourhood_at(
    pmap, x, grid, samples=None, max_shrink=8, image_fill_min=0.99
):
    """Find a radius at which x has a verified normal neighbourhood on this
    grid, shrinking dyadically from the radius-search value."""
    found = find_normal_radius(pmap, x, grid)
    r = found.radius
    last_error = None
    for _ in range(max_shrink):
        try:
            nd = build_normal_domain(
                pmap, x, r, grid, samples=samples, image_fill_min=image_fill_min
            )
        except VerificationFailed as exc:
            last_error = exc
            r /= 2.0
            continue
        if is_normal_neighbourhood(pmap, nd, samples=samples):
            return nd
        last_error = VerificationFailed(
            f"radius {r:g} verified but the fiber of f({x}) meets the region "
            "away from the center"
        )
        r /= 2.0
    raise VerificationFailed(
        f"no normal neighbourhood of {x} found down to r = {r:g}: {last_error}"
    )
