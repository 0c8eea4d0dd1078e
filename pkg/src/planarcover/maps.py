"""Evaluable planar maps, the built-in map zoo, and regularity prechecks.

A map is a black box: a vectorized callable on complex arrays together with
a domain and a few declared flags.  Nothing downstream differentiates it,
so non-holomorphic examples such as the winding map fit the same mold.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import OutOfDomain, ParseError
from .geometry import Disk, Rect


@dataclass(frozen=True)
class DomainSpec:
    """Domain of definition: an axis-aligned rectangle or a disk."""

    rect: Optional[Rect] = None
    disk: Optional[Disk] = None

    def __post_init__(self):
        if (self.rect is None) == (self.disk is None):
            raise ValueError("DomainSpec needs exactly one of rect or disk")

    def contains(self, z, margin=0.0):
        if self.rect is not None:
            return self.rect.contains(z, margin=margin)
        return np.abs(np.asarray(z) - self.disk.center) <= self.disk.radius - margin

    def bounding_rect(self):
        if self.rect is not None:
            return self.rect
        c, r = self.disk.center, self.disk.radius
        return Rect(c.real - r, c.imag - r, c.real + r, c.imag + r)

    def contains_rect(self, rect, margin=0.0):
        corners = np.array(
            [
                complex(rect.x0, rect.y0),
                complex(rect.x1, rect.y0),
                complex(rect.x1, rect.y1),
                complex(rect.x0, rect.y1),
            ]
        )
        return bool(np.all(self.contains(corners, margin=margin)))


@dataclass(frozen=True)
class RegularityClaims:
    light: bool = True
    open: bool = True
    discrete: bool = True


@dataclass(frozen=True, eq=False)
class PlanarMap:
    """A continuous map of a planar domain, given as a vectorized callable.

    eq=False keeps identity semantics so map instances can key caches.
    """

    domain: DomainSpec
    func: Callable[[np.ndarray], np.ndarray]
    claims: RegularityClaims = field(default_factory=RegularityClaims)
    lipschitz_hint: Optional[float] = None
    label: str = ""


def evaluate(pmap, z):
    """Evaluate the map at a point or array of points inside its domain."""
    z = np.asarray(z, dtype=complex)
    inside = pmap.domain.contains(z)
    if not np.all(inside):
        bad = np.asarray(z)[~np.asarray(inside, dtype=bool)].ravel()
        raise OutOfDomain(f"point {bad[0]} outside domain of {pmap.label!r}")
    out = np.asarray(pmap.func(z), dtype=complex)
    if z.shape == ():
        return complex(out)
    return out


def eval_array(pmap, z):
    """Evaluation without the per-point domain check.

    Callers are expected to have checked that the enclosing grid or rectangle
    sits inside the domain; rasterization uses this on multi-million point
    batches where a second containment pass is pure overhead.
    """
    return np.asarray(pmap.func(np.asarray(z, dtype=complex)), dtype=complex)


# ---------------------------------------------------------------------------
# test homeomorphisms for pre/post-composition

SHEAR_C = 0.5


def _shear(z):
    z = np.asarray(z, dtype=complex)
    return (z.real + SHEAR_C * z.imag) + 1j * z.imag


def _shear_inv(z):
    z = np.asarray(z, dtype=complex)
    return (z.real - SHEAR_C * z.imag) + 1j * z.imag


def _radial_stretch(z):
    z = np.asarray(z, dtype=complex)
    return z * (1.0 + np.abs(z)) / 2.0


def _radial_stretch_inv(z):
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    rho = (np.sqrt(1.0 + 8.0 * r) - 1.0) / 2.0
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(r > 0, z / np.where(r > 0, r, 1.0), 0.0)
    return rho * unit


def _conj(z):
    return np.conj(np.asarray(z, dtype=complex))


#: name -> (forward, inverse, lipschitz bound on |z| <= 4)
HOMEOMORPHISMS = {
    "shear": (_shear, _shear_inv, 1.0 + SHEAR_C),
    "stretch": (_radial_stretch, _radial_stretch_inv, 4.5),
    "conj": (_conj, _conj, 1.0),
}


def _inscribed_rect(domain, pre_func):
    """Largest centered axis-aligned rectangle R (found by bisection on a
    scale factor) with pre_func(boundary of R) inside the given domain."""
    outer = domain.bounding_rect()
    cx, cy = outer.center.real, outer.center.imag
    hw, hh = outer.width / 2, outer.height / 2

    def fits(s):
        rect = Rect(cx - s * hw, cy - s * hh, cx + s * hw, cy + s * hh)
        t = np.linspace(0.0, 1.0, 65)
        xs = rect.x0 + t * rect.width
        ys = rect.y0 + t * rect.height
        boundary = np.concatenate(
            [
                xs + 1j * rect.y0,
                xs + 1j * rect.y1,
                rect.x0 + 1j * ys,
                rect.x1 + 1j * ys,
            ]
        )
        return bool(np.all(domain.contains(pre_func(boundary), margin=-1e-12)))

    lo, hi = 0.0, 1.0
    if fits(1.0):
        lo = 1.0
    else:
        for _ in range(40):
            mid = (lo + hi) / 2
            if fits(mid):
                lo = mid
            else:
                hi = mid
    if lo == 0.0:
        raise ValueError("no centered rectangle maps into the domain")
    s = lo * 0.999
    return Rect(cx - s * hw, cy - s * hh, cx + s * hw, cy + s * hh)


def compose(post, pmap, pre, label=None):
    """Sandwich a map between homeomorphisms: z -> post(f(pre(z))).

    post and pre are names from HOMEOMORPHISMS or None.  The composite's
    domain is the largest centered rectangle that pre carries into the
    original domain.
    """
    post_f = HOMEOMORPHISMS[post][0] if post else None
    pre_f = HOMEOMORPHISMS[pre][0] if pre else None

    if pre_f is not None:
        new_domain = DomainSpec(rect=_inscribed_rect(pmap.domain, pre_f))
    else:
        new_domain = pmap.domain

    inner = pmap.func

    if pre_f is not None and post_f is not None:
        func = lambda z: post_f(inner(pre_f(np.asarray(z, dtype=complex))))
    elif pre_f is not None:
        func = lambda z: inner(pre_f(np.asarray(z, dtype=complex)))
    elif post_f is not None:
        func = lambda z: post_f(inner(np.asarray(z, dtype=complex)))
    else:
        func = inner

    hint = pmap.lipschitz_hint
    if hint is not None:
        if pre:
            hint *= HOMEOMORPHISMS[pre][2]
        if post:
            hint *= HOMEOMORPHISMS[post][2]

    if label is None:
        label = pmap.label
        if pre:
            label += f".pre-{pre}"
        if post:
            label += f".post-{post}"
    return PlanarMap(
        domain=new_domain,
        func=func,
        claims=pmap.claims,
        lipschitz_hint=hint,
        label=label,
    )


# ---------------------------------------------------------------------------
# zoo


@dataclass(frozen=True)
class GroundTruth:
    """Analytic facts used as test oracles."""

    branch_points: tuple = ()  # ((location, degree), ...)
    critical_values: tuple = ()
    fiber: Optional[Callable[[complex], np.ndarray]] = None  # w -> preimages
    notes: str = ""


@dataclass(frozen=True)
class ZooEntry:
    map: PlanarMap
    ground_truth: GroundTruth


_SQUARE2 = Rect(-2.0, -2.0, 2.0, 2.0)


def _power_fiber(k):
    def fiber(w):
        w = complex(w)
        if w == 0:
            return np.array([0.0 + 0.0j])
        r = abs(w) ** (1.0 / k)
        t = math.atan2(w.imag, w.real)
        return r * np.exp(1j * (t + 2.0 * np.pi * np.arange(k)) / k)

    return fiber


def _quad_fiber(w):
    s = np.sqrt(complex(w) + 1.0)
    if s == 0:
        return np.array([0.0 + 0.0j])
    return np.array([s, -s])


def _cubic_fiber(w):
    return np.roots([1.0, 0.0, -3.0, -complex(w)])


def _winding_fiber(w):
    w = complex(w)
    if w == 0:
        return np.array([0.0 + 0.0j])
    r = abs(w)
    half = math.atan2(w.imag, w.real) / 2.0
    return r * np.exp(1j * np.array([half, half + np.pi]))


def _winding_func(z):
    z = np.asarray(z, dtype=complex)
    az = np.abs(z)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(az > 0, z * z / np.where(az > 0, az, 1.0), 0.0)
    return out


def _make_power(k):
    # max |k z^(k-1)| over the square of half-side 2 is k * (2 sqrt 2)^(k-1)
    hint = k * (2.0 * math.sqrt(2.0)) ** (k - 1)
    gt = GroundTruth(
        branch_points=(((0.0 + 0.0j), k),) if k >= 2 else (),
        critical_values=((0.0 + 0.0j),) if k >= 2 else (),
        fiber=_power_fiber(k),
        notes=f"z -> z^{k}",
    )
    pmap = PlanarMap(
        domain=DomainSpec(rect=_SQUARE2),
        func=lambda z, k=k: np.asarray(z, dtype=complex) ** k,
        lipschitz_hint=hint,
        label=f"pow{k}",
    )
    return ZooEntry(map=pmap, ground_truth=gt)


def _build_zoo():
    entries = [_make_power(k) for k in range(1, 7)]

    entries.append(
        ZooEntry(
            map=PlanarMap(
                domain=DomainSpec(rect=_SQUARE2),
                func=lambda z: np.asarray(z, dtype=complex) ** 2 - 1.0,
                lipschitz_hint=2.0 * 2.0 * math.sqrt(2.0),
                label="quad",
            ),
            ground_truth=GroundTruth(
                branch_points=(((0.0 + 0.0j), 2),),
                critical_values=((-1.0 + 0.0j),),
                fiber=_quad_fiber,
                notes="z -> z^2 - 1",
            ),
        )
    )
    entries.append(
        ZooEntry(
            map=PlanarMap(
                domain=DomainSpec(rect=_SQUARE2),
                func=lambda z: np.asarray(z, dtype=complex) ** 3
                - 3.0 * np.asarray(z, dtype=complex),
                lipschitz_hint=27.0,
                label="cubic",
            ),
            ground_truth=GroundTruth(
                branch_points=(((-1.0 + 0.0j), 2), ((1.0 + 0.0j), 2)),
                critical_values=((2.0 + 0.0j), (-2.0 + 0.0j)),
                fiber=_cubic_fiber,
                notes="z -> z^3 - 3z",
            ),
        )
    )
    entries.append(
        ZooEntry(
            map=PlanarMap(
                domain=DomainSpec(rect=_SQUARE2),
                func=_winding_func,
                lipschitz_hint=3.0,
                label="winding2",
            ),
            ground_truth=GroundTruth(
                branch_points=(((0.0 + 0.0j), 2),),
                critical_values=((0.0 + 0.0j),),
                fiber=_winding_fiber,
                notes="z -> z^2/|z|, 0 -> 0; light, open, discrete, not holomorphic",
            ),
        )
    )
    # hypothesis-violating probes, addressable from the CLI for diagnostics
    entries.append(
        ZooEntry(
            map=PlanarMap(
                domain=DomainSpec(rect=_SQUARE2),
                func=lambda z: np.abs(np.asarray(z, dtype=complex)) + 0j,
                claims=RegularityClaims(light=True, open=False, discrete=True),
                lipschitz_hint=1.0,
                label="abs",
            ),
            ground_truth=GroundTruth(notes="z -> |z|; image is a ray, not open"),
        )
    )
    entries.append(
        ZooEntry(
            map=PlanarMap(
                domain=DomainSpec(rect=_SQUARE2),
                func=lambda z: np.real(np.asarray(z, dtype=complex)) + 0j,
                claims=RegularityClaims(light=False, open=False, discrete=False),
                lipschitz_hint=1.0,
                label="re",
            ),
            ground_truth=GroundTruth(notes="z -> Re z; fibers are vertical lines"),
        )
    )
    return entries


_ZOO = None


def zoo():
    """All built-in maps with their analytic ground truth."""
    global _ZOO
    if _ZOO is None:
        _ZOO = _build_zoo()
    return list(_ZOO)


def zoo_entry(name):
    for entry in zoo():
        if entry.map.label == name:
            return entry
    raise ParseError(f"unknown map id {name!r}")


# ---------------------------------------------------------------------------
# grid-sampled maps


def load_sampled_map(path):
    """Load a map from a text file of grid samples.

    Format: header line ``grid <nx> <ny> <x0> <y0> <x1> <y1>``, then nx*ny
    lines of ``re im`` pairs in row-major order (y outer, x inner).
    Evaluation bilinearly interpolates between samples.
    """
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 7 or header[0] != "grid":
            raise ParseError(f"{path}: expected header 'grid nx ny x0 y0 x1 y1'")
        try:
            nx, ny = int(header[1]), int(header[2])
            x0, y0, x1, y1 = (float(v) for v in header[3:7])
        except ValueError as exc:
            raise ParseError(f"{path}: bad header field: {exc}") from None
        if nx < 2 or ny < 2:
            raise ParseError(f"{path}: need nx, ny >= 2")
        if not (x1 > x0 and y1 > y0):
            raise ParseError(f"{path}: degenerate sample rectangle")
        data = np.loadtxt(fh, dtype=float, max_rows=nx * ny)
    if data.shape != (nx * ny, 2):
        raise ParseError(
            f"{path}: expected {nx * ny} 're im' lines, got shape {data.shape}"
        )
    values = (data[:, 0] + 1j * data[:, 1]).reshape(ny, nx)

    dx = (x1 - x0) / (nx - 1)
    dy = (y1 - y0) / (ny - 1)

    def func(z):
        z = np.asarray(z, dtype=complex)
        gx = np.clip((z.real - x0) / dx, 0.0, nx - 1.000001)
        gy = np.clip((z.imag - y0) / dy, 0.0, ny - 1.000001)
        ix = gx.astype(np.int64)
        iy = gy.astype(np.int64)
        fx = gx - ix
        fy = gy - iy
        v00 = values[iy, ix]
        v10 = values[iy, ix + 1]
        v01 = values[iy + 1, ix]
        v11 = values[iy + 1, ix + 1]
        return (
            v00 * (1 - fx) * (1 - fy)
            + v10 * fx * (1 - fy)
            + v01 * (1 - fx) * fy
            + v11 * fx * fy
        )

    # observed Lipschitz bound of the interpolant from sample differences
    sx = np.abs(np.diff(values, axis=1)).max() / dx if nx > 1 else 0.0
    sy = np.abs(np.diff(values, axis=0)).max() / dy if ny > 1 else 0.0
    hint = float(max(sx, sy, 1e-12)) * math.sqrt(2.0)

    return PlanarMap(
        domain=DomainSpec(rect=Rect(x0, y0, x1, y1)),
        func=func,
        lipschitz_hint=hint,
        label=f"sampled:{path}",
    )


def get_map(map_id):
    """Resolve an identifier like ``pow2``, ``sampled:f.txt`` or
    ``cubic.pre-shear.post-conj`` to a PlanarMap."""
    spec = map_id
    suffixes = []
    while True:
        base, sep, tail = spec.rpartition(".")
        kind, dash, name = tail.partition("-")
        if sep and dash and kind in ("pre", "post") and name in HOMEOMORPHISMS:
            suffixes.append((kind, name))
            spec = base
        else:
            break
    if spec.startswith("sampled:"):
        pmap = load_sampled_map(spec[len("sampled:"):])
    else:
        pmap = zoo_entry(spec).map
    for kind, name in reversed(suffixes):
        if kind == "pre":
            pmap = compose(None, pmap, name)
        else:
            pmap = compose(name, pmap, None)
    return pmap


# ---------------------------------------------------------------------------
# regularity prechecks


@dataclass(frozen=True)
class RegularityReport:
    openness_suspect: bool
    lightness_suspect: bool
    openness_witnesses: tuple
    lightness_witnesses: tuple
    resolution: float

    @property
    def clean(self):
        return not (self.openness_suspect or self.lightness_suspect)


def check_regularity(pmap, region, resolution, probe_points=25):
    """Heuristic openness and lightness probes over a rectangle.

    Openness: at sampled z, the image of B(z, rho) should contain a small
    disk around f(z); probed by hitting 8 target points just off f(z) with a
    dense disk sample.  Lightness: the fiber of f(z) restricted to the
    region should have only small-diameter components at the given
    resolution.  A clean report is evidence, not proof.
    """
    from . import region as region_mod

    if not pmap.domain.contains_rect(region):
        raise OutOfDomain("probe region outside map domain")

    side = max(3, int(round(math.sqrt(probe_points))))
    margin = min(region.width, region.height) * 0.12
    xs = np.linspace(region.x0 + margin, region.x1 - margin, side)
    ys = np.linspace(region.y0 + margin, region.y1 - margin, side)
    probes = (xs[None, :] + 1j * ys[:, None]).ravel()

    rho = min(resolution * 8.0, margin * 0.9)
    open_witnesses = []
    disk_offsets = None
    for z in probes:
        fz = complex(eval_array(pmap, np.array([z]))[0])
        ring = eval_array(pmap, z + rho * np.exp(2j * np.pi * np.arange(64) / 64))
        gaps = np.abs(ring - fz)
        s_med = float(np.median(gaps)) / rho
        if s_med <= 0:
            continue
        d = rho * s_med / 4.0
        if disk_offsets is None:
            # dense sample of the unit disk, reused for every probe
            g = np.linspace(-1.0, 1.0, 41)
            pts = (g[None, :] + 1j * g[:, None]).ravel()
            disk_offsets = pts[np.abs(pts) <= 1.0]
        image = eval_array(pmap, z + rho * disk_offsets)
        targets = fz + d * np.exp(2j * np.pi * np.arange(8) / 8)
        miss = np.abs(image[None, :] - targets[:, None]).min(axis=1) > d / 2.0
        if np.any(miss):
            open_witnesses.append(z)

    light_witnesses = []
    cell = resolution
    grid = region_mod.Grid(region, cell)
    samples = region_mod.GridSamples.compute(pmap, grid)
    fiber_probes = probes[:: max(1, len(probes) // 9)]
    for z in fiber_probes:
        y = complex(eval_array(pmap, np.array([z]))[0])
        eta = np.maximum(samples.s_loc, 1e-12) * cell * 0.8
        mask = np.abs(samples.f_center - y) <= eta
        if not mask.any():
            continue
        seed = grid.point_to_cell(z)
        if not mask[seed]:
            continue
        comp = region_mod.connected_component(mask, seed, grid=grid)
        if comp.diameter > 10.0 * cell + 2.0 * cell:
            light_witnesses.append(z)

    return RegularityReport(
        openness_suspect=bool(open_witnesses),
        lightness_suspect=bool(light_witnesses),
        openness_witnesses=tuple(open_witnesses[:5]),
        lightness_witnesses=tuple(light_witnesses[:5]),
        resolution=resolution,
    )
