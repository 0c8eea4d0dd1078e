"""Uniform grids, cell regions, and component machinery.

Everything downstream reduces set topology to operations on boolean cell
masks over a Grid: preimages become masks, components come from flood fill,
and diameters carry an explicit padding term so the discrete number bounds
the true one from above.
"""

import math
import weakref
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels
from .errors import EmptyInput, OutOfDomain, SeedNotInSet
from .geometry import Disk, Rect, dist_to_polyline, max_pairwise_distance
from .maps import eval_array

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class Grid:
    """Axis-aligned lattice of square cells covering a rectangle.

    Cells are indexed (row, col) with row along y and col along x; the
    lattice may overhang bounds on the far sides by less than one cell.
    Points on shared cell edges belong to the cell with the smaller
    (row, col) index.
    """

    bounds: Rect
    cell_size: float

    def __post_init__(self):
        if not self.cell_size > 0:
            raise ValueError("cell_size must be positive")

    @cached_property
    def nrows(self):
        return max(1, int(math.ceil(self.bounds.height / self.cell_size - 1e-9)))

    @cached_property
    def ncols(self):
        return max(1, int(math.ceil(self.bounds.width / self.cell_size - 1e-9)))

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    @property
    def cell_count(self):
        return self.nrows * self.ncols

    @property
    def cover_rect(self):
        """Rectangle actually covered by cells (bounds plus overhang)."""
        return Rect(
            self.bounds.x0,
            self.bounds.y0,
            self.bounds.x0 + self.ncols * self.cell_size,
            self.bounds.y0 + self.nrows * self.cell_size,
        )

    def _axis_index(self, offset, n):
        q = offset / self.cell_size
        i = int(math.floor(q))
        if i > 0 and i == q:
            i -= 1
        return min(max(i, 0), n - 1)

    def point_to_cell(self, z):
        z = complex(z)
        return (
            self._axis_index(z.imag - self.bounds.y0, self.nrows),
            self._axis_index(z.real - self.bounds.x0, self.ncols),
        )

    def cell_center(self, row, col):
        h = self.cell_size
        return complex(
            self.bounds.x0 + (col + 0.5) * h, self.bounds.y0 + (row + 0.5) * h
        )

    @cached_property
    def centers(self):
        """Complex (nrows, ncols) array of cell centers."""
        h = self.cell_size
        xs = self.bounds.x0 + (np.arange(self.ncols) + 0.5) * h
        ys = self.bounds.y0 + (np.arange(self.nrows) + 0.5) * h
        return xs[None, :] + 1j * ys[:, None]

    @staticmethod
    def square(center, half_side, cell_size):
        return Grid(Rect.square(center, half_side), cell_size)

    def header(self):
        b = self.bounds
        return {
            "x0": b.x0,
            "y0": b.y0,
            "x1": b.x1,
            "y1": b.y1,
            "cell_size": self.cell_size,
            "nrows": self.nrows,
            "ncols": self.ncols,
        }


#: stencil offsets per cell, in units of cell_size: center, then the four
#: corner midpoints by quadrant
STENCIL = np.array(
    [0.0 + 0.0j, 0.25 + 0.25j, -0.25 + 0.25j, -0.25 - 0.25j, 0.25 - 0.25j]
)

# index pairs into STENCIL and their separations (units of cell_size)
_STENCIL_PAIRS = [
    (0, 1, SQRT2 / 4),
    (0, 2, SQRT2 / 4),
    (0, 3, SQRT2 / 4),
    (0, 4, SQRT2 / 4),
    (1, 2, 0.5),
    (2, 3, 0.5),
    (3, 4, 0.5),
    (4, 1, 0.5),
    (1, 3, SQRT2 / 2),
    (2, 4, SQRT2 / 2),
]


class GridSamples:
    """Map values over a grid's supersampling stencil, computed once.

    Holds f at every cell center and corner midpoint plus the per-cell
    local stretch, the largest pairwise difference quotient over the
    stencil.  All adaptive tolerances downstream scale with that stretch
    rather than with a single global Lipschitz bound.
    """

    def __init__(self, grid, values):
        self.grid = grid
        self.values = values  # (5, nrows, ncols) complex

    @classmethod
    def compute(cls, pmap, grid):
        if not pmap.domain.contains_rect(grid.cover_rect):
            raise OutOfDomain(
                f"grid {grid.cover_rect} not inside domain of {pmap.label!r}"
            )
        centers = grid.centers
        values = np.empty((5, grid.nrows, grid.ncols), dtype=complex)
        for i, off in enumerate(STENCIL):
            values[i] = eval_array(pmap, centers + off * grid.cell_size)
        return cls(grid, values)

    @property
    def f_center(self):
        return self.values[0]

    @cached_property
    def s_loc(self):
        """Per-cell local stretch: max |f(p) - f(q)| / |p - q| over stencil
        pairs."""
        h = self.grid.cell_size
        out = np.zeros(self.grid.shape)
        for i, j, sep in _STENCIL_PAIRS:
            np.maximum(out, np.abs(self.values[i] - self.values[j]) / (sep * h), out=out)
        return out


_samples_cache = weakref.WeakKeyDictionary()


def samples_for(pmap, grid):
    """Cached GridSamples for (map, grid); evaluation happens once."""
    per_map = _samples_cache.setdefault(pmap, {})
    if grid not in per_map:
        per_map[grid] = GridSamples.compute(pmap, grid)
    return per_map[grid]


# ---------------------------------------------------------------------------
# polylines


class Polyline:
    """Piecewise-linear path with an explicit parameterization on [0, 1]."""

    def __init__(self, vertices, params):
        vertices = np.asarray(vertices, dtype=complex)
        params = np.asarray(params, dtype=float)
        if vertices.ndim != 1 or vertices.size < 2:
            raise ValueError("polyline needs at least 2 vertices")
        if params.shape != vertices.shape:
            raise ValueError("vertices and params must have equal length")
        if abs(params[0]) > 1e-12 or abs(params[-1] - 1.0) > 1e-12:
            raise ValueError("params must run from 0 to 1")
        if np.any(np.diff(params) < 0):
            raise ValueError("params must be nondecreasing")
        self.vertices = vertices
        self.vertices.setflags(write=False)
        self.params = params
        self.params.setflags(write=False)

    @classmethod
    def from_vertices(cls, vertices):
        """Build with chord-length parameterization (uniform if degenerate)."""
        vertices = np.asarray(vertices, dtype=complex)
        seg = np.abs(np.diff(vertices))
        total = seg.sum()
        if total > 0:
            params = np.concatenate([[0.0], np.cumsum(seg) / total])
            params[-1] = 1.0
        else:
            params = np.linspace(0.0, 1.0, vertices.size)
        return cls(vertices, params)

    @classmethod
    def segment(cls, a, b):
        return cls(np.array([a, b], dtype=complex), np.array([0.0, 1.0]))

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        re = np.interp(t, self.params, self.vertices.real)
        im = np.interp(t, self.params, self.vertices.imag)
        out = re + 1j * im
        if t.shape == ():
            return complex(out)
        return out

    def restrict(self, a, b):
        """Vertices of the sub-path over [a, b], endpoints included."""
        inner = self.vertices[(self.params > a) & (self.params < b)]
        return np.concatenate([[self.eval(a)], inner, [self.eval(b)]])

    def length(self):
        return float(np.abs(np.diff(self.vertices)).sum())

    def diameter(self):
        return max_pairwise_distance(self.vertices)

    def resample(self, ts):
        return Polyline(self.eval(np.asarray(ts, dtype=float)), np.asarray(ts, dtype=float))

    def __len__(self):
        return self.vertices.size


@dataclass(frozen=True)
class Tube:
    """Tubular neighbourhood of a polyline: points within radius of it."""

    vertices: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("tube radius must be positive")


# ---------------------------------------------------------------------------
# cell regions


class CellRegion:
    """A 4-connected set of grid cells, stored as a boolean mask.

    Instances are immutable in use: the mask is marked read-only and all
    derived quantities are cached.
    """

    def __init__(self, grid, mask):
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != grid.shape:
            raise ValueError("mask shape does not match grid")
        mask = mask.copy()
        mask.setflags(write=False)
        self.grid = grid
        self.mask = mask

    @cached_property
    def indices(self):
        """Member cells as an (n, 2) array of (row, col), row-major order."""
        return np.argwhere(self.mask)

    @property
    def members(self):
        return self.indices

    @cached_property
    def count(self):
        return int(self.mask.sum())

    @cached_property
    def centers(self):
        return self.grid.centers[self.mask]

    @cached_property
    def diameter(self):
        """Max distance between member centers plus sqrt(2) * cell_size
        padding, an upper bound for the diameter of the covered set."""
        if self.count == 0:
            return 0.0
        return max_pairwise_distance(self.centers) + SQRT2 * self.grid.cell_size

    @cached_property
    def bbox(self):
        idx = self.indices
        return (
            int(idx[:, 0].min()),
            int(idx[:, 0].max()),
            int(idx[:, 1].min()),
            int(idx[:, 1].max()),
        )

    def contains_cell(self, cell):
        r, c = cell
        return bool(self.mask[r, c])

    def intersects(self, other):
        return bool(np.any(self.mask & other.mask))

    def touches(self, other):
        """True if the regions share a cell or have edge-adjacent cells."""
        if self.intersects(other):
            return True
        return bool(np.any(_dilate4(self.mask) & other.mask))

    def to_json(self):
        flat = self.indices[:, 0] * self.grid.ncols + self.indices[:, 1]
        return {"grid": self.grid.header(), "members": flat.tolist()}

    def __eq__(self, other):
        if not isinstance(other, CellRegion):
            return NotImplemented
        return self.grid == other.grid and bool(np.array_equal(self.mask, other.mask))

    def __hash__(self):
        return hash((self.grid, self.mask.tobytes()))


def _dilate4(mask):
    out = mask.copy()
    out[:, 1:] |= mask[:, :-1]
    out[:, :-1] |= mask[:, 1:]
    out[1:, :] |= mask[:-1, :]
    out[:-1, :] |= mask[1:, :]
    return out


def as_mask(cells, grid):
    """Normalize a cell collection (mask, CellRegion, or iterable of
    (row, col)) to a boolean mask over the grid."""
    if isinstance(cells, CellRegion):
        return np.asarray(cells.mask, dtype=bool)
    arr = np.asarray(cells)
    if arr.dtype == bool and arr.shape == grid.shape:
        return arr
    mask = np.zeros(grid.shape, dtype=bool)
    if arr.size:
        idx = arr.reshape(-1, 2).astype(np.int64)
        mask[idx[:, 0], idx[:, 1]] = True
    return mask


# ---------------------------------------------------------------------------
# operations


def rasterize_preimage(pmap, target, grid, samples=None):
    """Cells whose stencil hits the preimage of a disk or tube target.

    A cell is included when any of its 5 stencil samples maps into the
    target, so thin preimage slivers are not silently dropped.  Returns a
    boolean mask over the grid.
    """
    if samples is None:
        samples = samples_for(pmap, grid)
    vals = samples.values
    if isinstance(target, Disk):
        hit = np.abs(vals - target.center) < target.radius
    elif isinstance(target, Tube):
        verts = np.asarray(target.vertices, dtype=complex)
        hit = np.empty(vals.shape, dtype=bool)
        for i in range(vals.shape[0]):
            hit[i] = dist_to_polyline(vals[i], verts) < target.radius
    else:
        raise TypeError(f"unsupported target set {type(target).__name__}")
    return hit.any(axis=0)


def connected_component(cells, seed, grid):
    """Maximal 4-connected subset of the cell set containing the seed cell.

    Deterministic breadth-first fill; neighbors visited right, up, left,
    down.
    """
    mask = as_mask(cells, grid)
    r, c = seed
    if not (0 <= r < grid.nrows and 0 <= c < grid.ncols) or not mask[r, c]:
        raise SeedNotInSet(f"seed cell {seed} not in the given set")
    comp = _kernels.component_from_seed(np.ascontiguousarray(mask, dtype=np.uint8), r, c)
    return CellRegion(grid, comp.astype(bool))


def connected_components(cells, grid):
    """All 4-connected components, labeled in row-major first-encounter
    order.  Returns (labels array, count)."""
    mask = as_mask(cells, grid)
    return _kernels.label4(np.ascontiguousarray(mask, dtype=np.uint8))


def region_boundary(region):
    """Boundary samples of a region: midpoints of member-cell edges shared
    with non-member cells.

    Edges on the grid border do not count, so a region covering the whole
    grid has empty boundary.  Points come out ordered by side (right, up,
    left, down), then row-major.
    """
    mask = region.mask
    if not mask.any():
        raise EmptyInput("region is empty")
    grid = region.grid
    h = grid.cell_size
    centers = grid.centers
    out = []
    for shift, offset in (
        ((0, 1), 0.5 + 0.0j),
        ((1, 0), 0.0 + 0.5j),
        ((0, -1), -0.5 + 0.0j),
        ((-1, 0), 0.0 - 0.5j),
    ):
        nb = np.ones_like(mask)
        dr, dc = shift
        if dc == 1:
            nb[:, :-1] = mask[:, 1:]
        elif dc == -1:
            nb[:, 1:] = mask[:, :-1]
        elif dr == 1:
            nb[:-1, :] = mask[1:, :]
        else:
            nb[1:, :] = mask[:-1, :]
        edge = mask & ~nb
        if edge.any():
            out.append(centers[edge] + offset * h)
    if not out:
        return np.empty(0, dtype=complex)
    return np.concatenate(out)


def hausdorff_distance(a, b):
    """Symmetric Hausdorff distance between two finite complex point sets."""
    a = np.atleast_1d(np.asarray(a, dtype=complex))
    b = np.atleast_1d(np.asarray(b, dtype=complex))
    if a.size == 0 or b.size == 0:
        raise EmptyInput("hausdorff_distance needs nonempty sets")
    pa = np.column_stack([a.real, a.imag])
    pb = np.column_stack([b.real, b.imag])
    d_ab = cKDTree(pb).query(pa)[0].max()
    d_ba = cKDTree(pa).query(pb)[0].max()
    return float(max(d_ab, d_ba))
