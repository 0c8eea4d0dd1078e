"""Deterministic SVG rendering of task results.

Every drawing routine is a pure function of its inputs: fixed palette,
fixed panel geometry, fixed float formatting, no timestamps.  Rendering
the same result twice yields byte-identical files, which the test suite
relies on.

Cell regions are drawn as a single merged outline, not one rect per
cell.  The outline is recovered from the directed boundary edges of the
member set (member cell kept on the left of the travel direction), which
chains into closed loops; collinear runs are merged before emitting path
commands.
"""

from __future__ import annotations

import numpy as np

from .region import CellRegion

_PANEL = 460.0
_MARGIN = 30.0
_GAP = 26.0
_HEADER = 34.0

_COL_REGION_FILL = "#dce8f6"
_COL_REGION_EDGE = "#3a6ea5"
_COL_LIFT = "#c2452d"
_COL_TARGET = "#2d8a4e"
_COL_BRANCH = "#7b2da0"
_COL_ACCENT = "#b8860b"
_COL_FRAME = "#9aa4af"
_COL_TEXT = "#222222"
_FONT = "Helvetica, Arial, sans-serif"


def _f(x):
    """Fixed-width float for SVG attributes."""
    return "%.2f" % float(x)


def _fw(x):
    """World-value float for labels."""
    return "%.6g" % float(x)


# ---------------------------------------------------------------------------
# region outlines


def region_outline(region: CellRegion):
    """Closed boundary loops of a cell region, in world coordinates.

    Returns a list of loops, each an (n, 2) float array of corner points
    ordered with the region on the left.  Loops are sorted by their
    lexicographically smallest lattice corner so the output is stable
    under any iteration order of the member set.
    """
    grid = region.grid
    rows = region.indices[:, 0].astype(np.int64)
    cols = region.indices[:, 1].astype(np.int64)
    member = set(zip(rows.tolist(), cols.tolist()))

    # Directed lattice edges (start corner) -> list of end corners.
    edges = {}

    def add(a, b):
        edges.setdefault(a, []).append(b)

    for r, c in member:
        if (r, c + 1) not in member:
            add((c + 1, r), (c + 1, r + 1))
        if (r + 1, c) not in member:
            add((c + 1, r + 1), (c, r + 1))
        if (r, c - 1) not in member:
            add((c, r + 1), (c, r))
        if (r - 1, c) not in member:
            add((c, r), (c + 1, r))
    for v in edges.values():
        v.sort()

    loops = []
    while edges:
        start = min(edges)
        loop = [start]
        prev_dir = None
        cur = start
        while True:
            outs = edges[cur]
            if prev_dir is None or len(outs) == 1:
                nxt = outs[0]
            else:
                # At a pinch corner two edges leave; take the sharpest
                # left turn so each loop stays simple.
                def turn(cand):
                    d = (cand[0] - cur[0], cand[1] - cur[1])
                    cross = prev_dir[0] * d[1] - prev_dir[1] * d[0]
                    return (-cross, cand)

                nxt = min(outs, key=turn)
            outs.remove(nxt)
            if not outs:
                del edges[cur]
            prev_dir = (nxt[0] - cur[0], nxt[1] - cur[1])
            cur = nxt
            if cur == start:
                break
            loop.append(cur)
        loops.append(loop)

    world = []
    for loop in loops:
        arr = np.asarray(loop, dtype=np.float64)
        merged = _merge_collinear(arr)
        xs = grid.bounds.x0 + merged[:, 0] * grid.cell_size
        ys = grid.bounds.y0 + merged[:, 1] * grid.cell_size
        world.append(np.column_stack([xs, ys]))
    return world


def _merge_collinear(loop):
    """Drop interior points of straight runs in a closed lattice loop."""
    n = len(loop)
    keep = []
    for i in range(n):
        a = loop[i - 1]
        b = loop[i]
        c = loop[(i + 1) % n]
        if (b[0] - a[0]) * (c[1] - b[1]) != (b[1] - a[1]) * (c[0] - b[0]):
            keep.append(i)
    return loop[keep] if keep else loop[:1]


# ---------------------------------------------------------------------------
# canvas


class Panel:
    """One square drawing area with its own world-to-pixel transform."""

    def __init__(self, ox, oy, side, bounds, title):
        x0, y0, x1, y1 = bounds
        w = max(x1 - x0, 1e-12)
        h = max(y1 - y0, 1e-12)
        pad_w = 0.06 * max(w, h)
        x0, x1 = x0 - pad_w, x1 + pad_w
        y0, y1 = y0 - pad_w, y1 + pad_w
        w, h = x1 - x0, y1 - y0
        self.scale = side / max(w, h)
        self.ox = ox + 0.5 * (side - w * self.scale)
        self.oy = oy + 0.5 * (side - h * self.scale)
        self.x0, self.y1 = x0, y1
        self.px = ox
        self.py = oy
        self.side = side
        self.title = title
        self.body = []

    def to_px(self, x, y):
        return (self.ox + (x - self.x0) * self.scale,
                self.oy + (self.y1 - y) * self.scale)

    def frame(self):
        return (
            '<rect x="%s" y="%s" width="%s" height="%s" fill="none" '
            'stroke="%s" stroke-width="1"/>'
            % (_f(self.px), _f(self.py), _f(self.side), _f(self.side), _COL_FRAME)
        )

    def caption(self):
        return (
            '<text x="%s" y="%s" font-family="%s" font-size="13" fill="%s">%s</text>'
            % (_f(self.px), _f(self.py - 8.0), _FONT, _COL_TEXT, self.title)
        )

    def path(self, loops, fill, stroke, width="1.2", opacity=None):
        cmds = []
        for pts in loops:
            if len(pts) == 0:
                continue
            px, py = self.to_px(pts[0][0], pts[0][1])
            cmds.append("M%s %s" % (_f(px), _f(py)))
            for x, y in pts[1:]:
                px, py = self.to_px(x, y)
                cmds.append("L%s %s" % (_f(px), _f(py)))
            cmds.append("Z")
        extra = ' fill-opacity="%s"' % opacity if opacity else ""
        self.body.append(
            '<path d="%s" fill="%s"%s stroke="%s" stroke-width="%s"/>'
            % (" ".join(cmds), fill, extra, stroke, width)
        )

    def polyline(self, pts, stroke, width="2", dash=None):
        coords = []
        for x, y in pts:
            px, py = self.to_px(x, y)
            coords.append("%s,%s" % (_f(px), _f(py)))
        extra = ' stroke-dasharray="%s"' % dash if dash else ""
        self.body.append(
            '<polyline points="%s" fill="none" stroke="%s" stroke-width="%s"%s/>'
            % (" ".join(coords), stroke, width, extra)
        )

    def circle(self, cx, cy, world_r, stroke, width="1.5", fill="none", dash=None):
        px, py = self.to_px(cx, cy)
        extra = ' stroke-dasharray="%s"' % dash if dash else ""
        self.body.append(
            '<circle cx="%s" cy="%s" r="%s" fill="%s" stroke="%s" stroke-width="%s"%s/>'
            % (_f(px), _f(py), _f(world_r * self.scale), fill, stroke, width, extra)
        )

    def dot(self, cx, cy, px_r, color):
        px, py = self.to_px(cx, cy)
        self.body.append(
            '<circle cx="%s" cy="%s" r="%s" fill="%s"/>' % (_f(px), _f(py), _f(px_r), color)
        )

    def label(self, cx, cy, text, dx=6.0, dy=-6.0, size="12", color=_COL_TEXT):
        px, py = self.to_px(cx, cy)
        self.body.append(
            '<text x="%s" y="%s" font-family="%s" font-size="%s" fill="%s">%s</text>'
            % (_f(px + dx), _f(py + dy), _FONT, size, color, text)
        )

    def emit(self):
        return [self.frame(), self.caption()] + self.body


def _document(panels, footer=None):
    n = len(panels)
    width = 2 * _MARGIN + n * _PANEL + (n - 1) * _GAP
    height = 2 * _MARGIN + _HEADER + _PANEL + (26.0 if footer else 0.0)
    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" '
        'viewBox="0 0 %d %d">' % (width, height, width, height),
        '<rect x="0" y="0" width="%d" height="%d" fill="#ffffff"/>' % (width, height),
    ]
    for p in panels:
        parts.extend(p.emit())
    if footer:
        parts.append(
            '<text x="%s" y="%s" font-family="%s" font-size="13" fill="%s">%s</text>'
            % (_f(_MARGIN), _f(height - 12.0), _FONT, _COL_TEXT, footer)
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _panel_row(specs):
    """Lay out panels left to right; specs are (bounds, title) pairs."""
    out = []
    x = _MARGIN
    for bounds, title in specs:
        out.append(Panel(x, _MARGIN + _HEADER, _PANEL, bounds, title))
        x += _PANEL + _GAP
    return out


def _region_bounds(region):
    grid = region.grid
    rmin, rmax, cmin, cmax = region.bbox
    h = grid.cell_size
    return (grid.bounds.x0 + cmin * h, grid.bounds.y0 + rmin * h,
            grid.bounds.x0 + (cmax + 1) * h, grid.bounds.y0 + (rmax + 1) * h)


def _disk_bounds(center, r):
    return (center.real - r, center.imag - r, center.real + r, center.imag + r)


def _draw_region(panel, region):
    panel.path(region_outline(region), _COL_REGION_FILL, _COL_REGION_EDGE,
               opacity="0.85")


# ---------------------------------------------------------------------------
# per-task drawings


def render_normal(nd):
    dom, img = _panel_row([
        (_region_bounds(nd.region), "domain component"),
        (_disk_bounds(nd.image_center, nd.radius), "image disk"),
    ])
    _draw_region(dom, nd.region)
    dom.dot(nd.center.real, nd.center.imag, 3.5, _COL_LIFT)
    dom.label(nd.center.real, nd.center.imag, "x")
    img.circle(nd.image_center.real, nd.image_center.imag, nd.radius,
               _COL_REGION_EDGE)
    img.dot(nd.image_center.real, nd.image_center.imag, 3.5, _COL_TARGET)
    img.label(nd.image_center.real, nd.image_center.imag, "f(x)")
    footer = "radius %s, boundary offset %s, image fill %s" % (
        _fw(nd.radius), _fw(nd.evidence.boundary_hausdorff),
        _fw(nd.evidence.image_fill))
    return _document([dom, img], footer)


def render_lift(result, nd):
    dom, img = _panel_row([
        (_region_bounds(nd.region), "domain component with lift"),
        (_disk_bounds(nd.image_center, nd.radius), "image disk with target path"),
    ])
    _draw_region(dom, nd.region)
    lv = result.lift.vertices
    dom.polyline(np.column_stack([lv.real, lv.imag]), _COL_LIFT)
    dom.dot(lv[0].real, lv[0].imag, 3.5, _COL_LIFT)
    dom.label(lv[0].real, lv[0].imag, "start")
    img.circle(nd.image_center.real, nd.image_center.imag, nd.radius,
               _COL_REGION_EDGE)
    tv = result.target.vertices
    img.polyline(np.column_stack([tv.real, tv.imag]), _COL_TARGET)
    img.dot(tv[0].real, tv[0].imag, 3.5, _COL_TARGET)
    footer = "knots %d, sup error %s, levels %d" % (
        len(result.lift.params), _fw(result.sup_error), result.levels_used)
    return _document([dom, img], footer)


def render_raylifts(lifts, nd, direction):
    dom, img = _panel_row([
        (_region_bounds(nd.region), "domain component with ray lifts"),
        (_disk_bounds(nd.image_center, nd.radius), "image ray"),
    ])
    _draw_region(dom, nd.region)
    for res in lifts:
        lv = res.lift.vertices
        dom.polyline(np.column_stack([lv.real, lv.imag]), _COL_LIFT, width="1.6")
        dom.dot(lv[-1].real, lv[-1].imag, 3.0, _COL_BRANCH)
    dom.dot(nd.center.real, nd.center.imag, 3.5, _COL_TARGET)
    if lifts:
        tv = lifts[0].target.vertices
        img.polyline(np.column_stack([tv.real, tv.imag]), _COL_TARGET)
    img.circle(nd.image_center.real, nd.image_center.imag, nd.radius,
               _COL_REGION_EDGE)
    img.dot(nd.image_center.real, nd.image_center.imag, 3.5, _COL_TARGET)
    footer = "%d distinct lifts" % len(lifts)
    return _document([dom, img], footer)


def render_degree(result):
    z = result.point
    (panel,) = _panel_row([
        (_disk_bounds(z, 1.6 * result.rho), "probe loop"),
    ])
    panel.circle(z.real, z.imag, result.rho, _COL_BRANCH)
    panel.dot(z.real, z.imag, 3.5, _COL_BRANCH)
    panel.label(z.real, z.imag, "deg = %d" % result.degree, size="14")
    footer = "radius %s, image gap %s, samples %d" % (
        _fw(result.rho), _fw(result.min_image_gap), result.samples_used)
    return _document([panel], footer)


def render_branch(report):
    box = report.search_region
    (panel,) = _panel_row([
        ((box.x0, box.y0, box.x1, box.y1), "branch set"),
    ])
    panel.path([np.array([[box.x0, box.y0], [box.x1, box.y0],
                          [box.x1, box.y1], [box.x0, box.y1]])],
               "none", _COL_FRAME, width="1")
    for bp in report.branch_points:
        z = bp.location
        panel.circle(z.real, z.imag, bp.isolation_radius, _COL_BRANCH,
                     dash="5,4")
        panel.dot(z.real, z.imag, 4.0, _COL_BRANCH)
        panel.label(z.real, z.imag, "k = %d" % bp.degree, size="14")
    footer = "%d branch point(s) at resolution %s" % (
        len(report.branch_points), _fw(report.resolution))
    return _document([panel], footer)


def render_factor(chart):
    nd = chart.nd
    region = nd.region
    dom, disk, img = _panel_row([
        (_region_bounds(region), "domain component"),
        ((-1.15, -1.15, 1.15, 1.15), "root coordinate"),
        (_disk_bounds(nd.image_center, nd.radius), "image disk"),
    ])
    _draw_region(dom, region)
    dom.dot(nd.center.real, nd.center.imag, 3.5, _COL_BRANCH)

    disk.circle(0.0, 0.0, 1.0, _COL_REGION_EDGE)
    table = chart.psi_table
    rows = region.indices[:, 0]
    cols = region.indices[:, 1]
    vals = table[rows, cols]
    ok = np.isfinite(vals.real)
    rows, cols, vals = rows[ok], cols[ok], vals[ok]
    step = max(1, len(vals) // 3000)
    order = np.lexsort((cols, rows))
    for psi in vals[order[::step]]:
        disk.dot(psi.real, psi.imag, 0.9, _COL_REGION_EDGE)
    g = chart.deck_generator
    disk.polyline([(0.0, 0.0), (g.real, g.imag)], _COL_ACCENT, width="1.5")
    disk.label(g.real, g.imag, "deck", size="11", color=_COL_ACCENT)

    img.circle(nd.image_center.real, nd.image_center.imag, nd.radius,
               _COL_REGION_EDGE)
    img.dot(nd.image_center.real, nd.image_center.imag, 3.5, _COL_TARGET)
    footer = "k = %d, orientation %+d, residual %s" % (
        chart.k, chart.orientation, _fw(chart.residual))
    return _document([dom, disk, img], footer)


def render_conservation(report, nd):
    dom, img = _panel_row([
        (_region_bounds(nd.region), "domain component"),
        (_disk_bounds(nd.image_center, nd.radius), "probed values"),
    ])
    _draw_region(dom, nd.region)
    dom.dot(nd.center.real, nd.center.imag, 3.5, _COL_BRANCH)
    img.circle(nd.image_center.real, nd.image_center.imag, nd.radius,
               _COL_REGION_EDGE)
    verdict = "all equal" if report.all_match else "mismatch"
    footer = "local degree %d, %d probes, preimage counts %s" % (
        report.degree, len(report.counts), verdict)
    return _document([dom, img], footer)


def render_regularity(report, box):
    (panel,) = _panel_row([
        ((box.x0, box.y0, box.x1, box.y1), "regularity probes"),
    ])
    panel.path([np.array([[box.x0, box.y0], [box.x1, box.y0],
                          [box.x1, box.y1], [box.x0, box.y1]])],
               "none", _COL_FRAME, width="1")
    for z in report.openness_witnesses:
        panel.dot(z.real, z.imag, 4.0, _COL_LIFT)
        panel.label(z.real, z.imag, "not open?", size="11", color=_COL_LIFT)
    for z in report.lightness_witnesses:
        panel.dot(z.real, z.imag, 4.0, _COL_ACCENT)
        panel.label(z.real, z.imag, "fat fiber?", size="11", color=_COL_ACCENT)
    footer = "openness %s, lightness %s at resolution %s" % (
        "suspect" if report.openness_suspect else "clean",
        "suspect" if report.lightness_suspect else "clean",
        _fw(report.resolution))
    return _document([panel], footer)
