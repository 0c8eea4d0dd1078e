"""Command line interface and scenario runner.

Every subcommand, including the single-shot ones, goes through the same
scenario machinery: the flags are normalized into a one-task scenario,
the scenario runner executes it, and the report is printed or written.
That keeps parsing, validation, seeding and output identical between
``planarcover degree ...`` and the same task in a ``run`` file.

Task failures are values: a failing task produces an ``error`` record
with the exception's stable code and message, later tasks still run, and
the process exit status is 0 only when every task succeeded.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from ._kernels import IMPLEMENTATION
from .branch import (
    degree_conservation_check,
    detect_branch_points,
    local_degree,
)
from .errors import OutOfDomain, ParseError, PlanarCoverError, PreconditionFailed
from .factor import build_normal_form, verify_normal_form
from .geometry import Rect
from .lifting import enumerate_ray_lifts, lift_path
from .maps import check_regularity, get_map, zoo
from .normal import (
    build_normal_domain,
    find_normal_radius,
    is_normal_neighbourhood,
    normal_neighbourhood_at,
)
from .region import Grid, Polyline
from . import render as _render

_MAX_CELLS = 3_000_000
_DEFAULT_CELL = 0.004
_DEFAULT_BRANCH_CELL = 0.01
_DEFAULT_TOL = 1e-3
_DEFAULT_MAX_LIFTS = 64

_KINDS = (
    "normal",
    "lift",
    "raylifts",
    "degree",
    "branch",
    "factor",
    "conservation",
    "regularity",
)


# ---------------------------------------------------------------------------
# field parsing with path diagnostics


def _number(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError("%s: expected a number, got %r" % (where, v))
    return float(v)


def _positive(v, where):
    x = _number(v, where)
    if not x > 0:
        raise ParseError("%s: must be positive, got %r" % (where, v))
    return x


def _posint(v, where):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError("%s: expected an integer, got %r" % (where, v))
    if v <= 0:
        raise ParseError("%s: must be a positive integer, got %r" % (where, v))
    return v


def _seed_value(v, where):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError("%s: expected an integer seed, got %r" % (where, v))
    if not 0 <= v < 2**64:
        raise ParseError("%s: seed must fit in 64 unsigned bits" % where)
    return v


def _point(v, where):
    """Accept [re, im], a bare number, or a "re,im" string."""
    if isinstance(v, str):
        parts = [p.strip() for p in v.split(",")]
        try:
            nums = [float(p) for p in parts]
        except ValueError:
            raise ParseError('%s: expected a point like "0.4,0", got %r' % (where, v))
        if len(nums) == 1:
            return complex(nums[0], 0.0)
        if len(nums) == 2:
            return complex(nums[0], nums[1])
        raise ParseError('%s: expected "re" or "re,im", got %r' % (where, v))
    if isinstance(v, bool):
        raise ParseError("%s: expected a point, got %r" % (where, v))
    if isinstance(v, (int, float)):
        return complex(v, 0.0)
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(_number(v[0], where + "[0]"), _number(v[1], where + "[1]"))
    raise ParseError("%s: expected a point as [re, im], got %r" % (where, v))


def _box(v, where):
    if isinstance(v, str):
        parts = [p.strip() for p in v.split(",")]
        try:
            v = [float(p) for p in parts]
        except ValueError:
            raise ParseError('%s: expected "x0,y0,x1,y1", got %r' % (where, v))
    if not isinstance(v, (list, tuple)) or len(v) != 4:
        raise ParseError("%s: expected a box as [x0, y0, x1, y1]" % where)
    x0, y0, x1, y1 = (_number(c, "%s[%d]" % (where, i)) for i, c in enumerate(v))
    if not (x0 < x1 and y0 < y1):
        raise ParseError("%s: box must have x0 < x1 and y0 < y1" % where)
    return [x0, y0, x1, y1]


def _path_points(v, where):
    if isinstance(v, str):
        chunks = [c for c in (p.strip() for p in v.split(";")) if c]
        pts = [_point(c, where) for c in chunks]
    elif isinstance(v, (list, tuple)):
        pts = [_point(p, where + "[%d]" % i) for i, p in enumerate(v)]
    else:
        raise ParseError("%s: expected a list of points" % where)
    if len(pts) < 2:
        raise ParseError("%s: a path needs at least two points" % where)
    return [[p.real, p.imag] for p in pts]


def _pt_json(z):
    z = complex(z)
    return [z.real, z.imag]


#: per kind: {field: (required, normalizer)}
_TASK_FIELDS = {
    "normal": {"at": (True, _point), "radius": (False, _positive),
               "cell": (False, _positive)},
    "lift": {"at": (True, _point), "from": (True, _point),
             "path": (True, _path_points), "radius": (False, _positive),
             "cell": (False, _positive), "tol": (False, _positive)},
    "raylifts": {"at": (True, _point), "direction": (True, _point),
                 "radius": (False, _positive), "cell": (False, _positive),
                 "tol": (False, _positive), "max_lifts": (False, _posint)},
    "degree": {"at": (True, _point), "rho": (True, _positive),
               "samples": (False, _posint)},
    "branch": {"box": (True, _box), "cell": (False, _positive)},
    "factor": {"at": (True, _point), "radius": (False, _positive),
               "cell": (False, _positive), "tol": (False, _positive),
               "probes": (False, _posint)},
    "conservation": {"at": (True, _point), "radius": (False, _positive),
                     "probes": (False, _posint), "cell": (False, _positive)},
    "regularity": {"box": (True, _box), "resolution": (True, _positive),
                   "probes": (False, _posint)},
}


def _norm_task(task, where):
    if not isinstance(task, dict):
        raise ParseError("%s: expected an object" % where)
    kind = task.get("kind")
    if kind not in _KINDS:
        raise ParseError(
            "%s.kind: expected one of %s, got %r" % (where, ", ".join(_KINDS), kind)
        )
    spec = _TASK_FIELDS[kind]
    out = {"kind": kind}
    for key, value in task.items():
        if key == "kind":
            continue
        if key not in spec:
            raise ParseError("%s.%s: unknown field for kind %r" % (where, key, kind))
        norm = spec[key][1](value, "%s.%s" % (where, key))
        out[key] = _pt_json(norm) if isinstance(norm, complex) else norm
    for key, (required, _) in spec.items():
        if required and key not in out:
            raise ParseError("%s.%s: required for kind %r" % (where, key, kind))
    return out


def normalize_scenario(data):
    """Validate a raw scenario object into its canonical echo form."""
    if not isinstance(data, dict):
        raise ParseError("scenario: expected a JSON object")
    allowed = {"map", "tasks", "cell", "tol", "seed", "max_lifts", "render", "output"}
    for key in data:
        if key not in allowed:
            raise ParseError("%s: unknown scenario field" % key)
    if "map" not in data or not isinstance(data["map"], str):
        raise ParseError("map: required, must be a map identifier string")
    out = {"map": data["map"]}
    if "cell" in data:
        out["cell"] = _positive(data["cell"], "cell")
    if "tol" in data:
        out["tol"] = _positive(data["tol"], "tol")
    out["seed"] = _seed_value(data.get("seed", 0), "seed")
    if "max_lifts" in data:
        out["max_lifts"] = _posint(data["max_lifts"], "max_lifts")
    if "render" in data:
        if not isinstance(data["render"], bool):
            raise ParseError("render: expected true or false")
        out["render"] = data["render"]
    else:
        out["render"] = False
    if "output" in data:
        if not isinstance(data["output"], str):
            raise ParseError("output: expected a directory path string")
        out["output"] = data["output"]
    tasks = data.get("tasks")
    if not isinstance(tasks, list) or not tasks:
        raise ParseError("tasks: required, must be a non-empty array")
    out["tasks"] = [_norm_task(t, "tasks[%d]" % i) for i, t in enumerate(tasks)]
    return out


# ---------------------------------------------------------------------------
# grid localization


def _interior_room(pmap, at):
    rect = pmap.domain.bounding_rect()
    room = min(at.real - rect.x0, rect.x1 - at.real,
               at.imag - rect.y0, rect.y1 - at.imag)
    if room <= 0:
        raise OutOfDomain("point %s outside the map domain" % at)
    return rect, room


def _fine_grid_over(rect, bbox_rect, cell):
    x0 = max(rect.x0, bbox_rect.x0)
    y0 = max(rect.y0, bbox_rect.y0)
    x1 = min(rect.x1, bbox_rect.x1)
    y1 = min(rect.y1, bbox_rect.y1)
    grid = Grid(Rect(x0, y0, x1, y1), cell)
    if grid.cell_count > _MAX_CELLS:
        raise PreconditionFailed(
            "cell size %g needs %d cells over this component; increase --cell"
            % (cell, grid.cell_count)
        )
    return grid


def _auto_domain(pmap, at, cell, radius, need_normal):
    """Build the working normal domain on a fine grid localized to it.

    A coarse pass over the largest centered square finds the component's
    extent; the fine grid at the requested cell size covers just that
    bounding box plus margin.  With an explicit radius the coarse pass is
    only a localization aid and falls back to the full square when it
    fails.
    """
    rect, room = _interior_room(pmap, at)
    half0 = 0.995 * room
    coarse_cell = max(cell, half0 / 150.0)
    coarse = Grid.square(at, half0, coarse_cell)
    bbox_rect = None
    r = radius
    if radius is None:
        if need_normal:
            nd_c = normal_neighbourhood_at(pmap, at, coarse)
        else:
            r_try = float(find_normal_radius(pmap, at, coarse))
            nd_c = None
            for _ in range(6):
                try:
                    nd_c = build_normal_domain(pmap, at, r_try, coarse)
                    break
                except PlanarCoverError:
                    r_try *= 0.5
            if nd_c is None:
                nd_c = build_normal_domain(pmap, at, r_try, coarse)
        r = nd_c.radius
        bbox_rect = _region_rect(nd_c.region, margin_cells=3)
    else:
        try:
            nd_c = build_normal_domain(pmap, at, radius, coarse)
            bbox_rect = _region_rect(nd_c.region, margin_cells=3)
        except PlanarCoverError:
            bbox_rect = Rect.square(at, half0)

    if coarse_cell <= cell:
        fine = coarse
    else:
        fine = _fine_grid_over(rect, bbox_rect, cell)
    nd = build_normal_domain(pmap, at, r, fine)
    if need_normal:
        shrink = 0
        while not is_normal_neighbourhood(pmap, nd) and shrink < 4:
            r *= 0.5
            nd = build_normal_domain(pmap, at, r, fine)
            shrink += 1
        if not is_normal_neighbourhood(pmap, nd):
            raise PreconditionFailed(
                "no normal neighbourhood of %s found on this grid" % at
            )
    return nd


def _region_rect(region, margin_cells=0):
    grid = region.grid
    rmin, rmax, cmin, cmax = region.bbox
    h = grid.cell_size
    m = margin_cells * h
    return Rect(
        grid.bounds.x0 + cmin * h - m,
        grid.bounds.y0 + rmin * h - m,
        grid.bounds.x0 + (cmax + 1) * h + m,
        grid.bounds.y0 + (rmax + 1) * h + m,
    )


# ---------------------------------------------------------------------------
# JSON helpers

_REGION_MEMBER_CAP = 20000


def _region_json(region):
    out = {
        "grid": region.grid.header(),
        "member_count": region.count,
        "bbox": list(region.bbox),
        "diameter": region.diameter,
    }
    if region.count <= _REGION_MEMBER_CAP:
        flat = region.indices[:, 0] * region.grid.ncols + region.indices[:, 1]
        out["members"] = flat.tolist()
    else:
        out["members_omitted"] = True
    return out


def _nd_json(nd, region=True):
    out = {
        "center": _pt_json(nd.center),
        "radius": nd.radius,
        "image_center": _pt_json(nd.image_center),
        "boundary_tolerance": nd.boundary_tolerance,
        "evidence": {
            "boundary_hausdorff": nd.evidence.boundary_hausdorff,
            "image_fill": nd.evidence.image_fill,
        },
    }
    if region:
        out["region"] = _region_json(nd.region)
    return out


def _poly_json(poly):
    return {
        "params": poly.params.tolist(),
        "vertices": [_pt_json(z) for z in poly.vertices],
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return _pt_json(complex(obj))
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def _chart_json(chart):
    """Cell table of psi values as flat parallel arrays, row-major."""
    table = chart.psi_table
    defined = ~np.isnan(table.real)
    rows, cols = np.nonzero(defined)
    vals = table[rows, cols]
    return {
        "grid": chart.nd.grid.header(),
        "k": chart.k,
        "orientation": chart.orientation,
        "deck_generator": _pt_json(chart.deck_generator),
        "rows": rows.tolist(),
        "cols": cols.tolist(),
        "psi_re": vals.real.tolist(),
        "psi_im": vals.imag.tolist(),
    }


# ---------------------------------------------------------------------------
# task execution


def _defaults(scen, task):
    kind = task["kind"]
    base_cell = _DEFAULT_BRANCH_CELL if kind == "branch" else _DEFAULT_CELL
    cell = task.get("cell", scen.get("cell", base_cell))
    tol = task.get("tol", scen.get("tol", _DEFAULT_TOL))
    return cell, tol


def _run_one(pmap, scen, task):
    kind = task["kind"]
    cell, tol = _defaults(scen, task)
    seed = scen["seed"]

    if kind == "degree":
        at = complex(*task["at"])
        res = local_degree(pmap, at, task["rho"], samples=task.get("samples", 64))
        payload = {
            "point": _pt_json(res.point),
            "rho": res.rho,
            "degree": res.degree,
            "min_image_gap": res.min_image_gap,
            "samples_used": res.samples_used,
        }
        return payload, {"kind": kind, "result": res}

    if kind == "branch":
        box = Rect(*task["box"])
        grid = Grid(box, cell)
        if grid.cell_count > _MAX_CELLS:
            raise PreconditionFailed(
                "cell size %g needs %d cells over this box; increase --cell"
                % (cell, grid.cell_count)
            )
        report = detect_branch_points(pmap, box, grid)
        payload = {
            "search": list(task["box"]),
            "resolution": report.resolution,
            "branch_points": [
                {
                    "location": _pt_json(bp.location),
                    "degree": bp.degree,
                    "isolation_radius": bp.isolation_radius,
                }
                for bp in report.branch_points
            ],
        }
        return payload, {"kind": kind, "report": report}

    if kind == "regularity":
        box = Rect(*task["box"])
        report = check_regularity(
            pmap, box, task["resolution"], probe_points=task.get("probes", 25)
        )
        payload = {
            "openness_suspect": report.openness_suspect,
            "lightness_suspect": report.lightness_suspect,
            "clean": report.clean,
            "openness_witnesses": [_pt_json(z) for z in report.openness_witnesses],
            "lightness_witnesses": [_pt_json(z) for z in report.lightness_witnesses],
            "resolution": report.resolution,
        }
        return payload, {"kind": kind, "report": report, "box": box}

    at = complex(*task["at"])
    radius = task.get("radius")

    if kind == "normal":
        nd = _auto_domain(pmap, at, cell, radius, need_normal=False)
        payload = _nd_json(nd)
        payload["is_normal"] = bool(is_normal_neighbourhood(pmap, nd))
        return payload, {"kind": kind, "nd": nd}

    if kind == "lift":
        nd = _auto_domain(pmap, at, cell, radius, need_normal=False)
        beta = Polyline.from_vertices(
            np.array([complex(a, b) for a, b in task["path"]])
        )
        res = lift_path(pmap, nd, beta, complex(*task["from"]), tol)
        payload = {
            "sup_error": res.sup_error,
            "levels_used": res.levels_used,
            "lift": _poly_json(res.lift),
            "target": _poly_json(res.target),
            "nd": _nd_json(nd, region=False),
        }
        return payload, {"kind": kind, "result": res, "nd": nd}

    if kind == "raylifts":
        nd = _auto_domain(pmap, at, cell, radius, need_normal=True)
        max_lifts = task.get("max_lifts", scen.get("max_lifts", _DEFAULT_MAX_LIFTS))
        direction = complex(*task["direction"])
        lifts = enumerate_ray_lifts(pmap, nd, direction, tol, max_lifts=max_lifts)
        payload = {
            "count": len(lifts),
            "endpoints": [_pt_json(res.lift.vertices[-1]) for res in lifts],
            "lifts": [
                {"sup_error": res.sup_error, "lift": _poly_json(res.lift)}
                for res in lifts
            ],
            "nd": _nd_json(nd, region=False),
        }
        return payload, {"kind": kind, "lifts": lifts, "nd": nd,
                         "direction": direction}

    if kind == "factor":
        nd = _auto_domain(pmap, at, cell, radius, need_normal=True)
        chart = build_normal_form(pmap, at, nd.grid, tol, nd=nd)
        ver = verify_normal_form(chart, probes=task.get("probes", 600), seed=seed)
        payload = {
            "k": chart.k,
            "orientation": chart.orientation,
            "deck_generator": _pt_json(chart.deck_generator),
            "residual": chart.residual,
            "base_cell": list(chart.base_cell),
            "injectivity_violations": chart.injectivity_violations,
            "injectivity_threshold": chart.injectivity_threshold,
            "unassigned_cells": chart.unassigned_cells,
            "nd": _nd_json(nd, region=False),
            "verify": {
                "max_residual": ver.max_residual,
                "min_separation_ratio": ver.min_separation_ratio,
                "boundary_max_deviation": ver.boundary_max_deviation,
                "probes_used": ver.probes_used,
            },
        }
        return payload, {"kind": kind, "chart": chart}

    if kind == "conservation":
        nd = _auto_domain(pmap, at, cell, radius, need_normal=True)
        report = degree_conservation_check(
            pmap, nd, task.get("probes", 50), seed=seed
        )
        payload = {
            "counts": list(report.counts),
            "degree": report.degree,
            "all_match": bool(report.all_match),
            "nd": _nd_json(nd, region=False),
        }
        return payload, {"kind": kind, "report": report, "nd": nd}

    raise ParseError("unknown task kind %r" % kind)  # unreachable after parse


def render_svg(artifacts):
    """Deterministic SVG for one executed task's artifacts."""
    kind = artifacts["kind"]
    if kind == "normal":
        return _render.render_normal(artifacts["nd"])
    if kind == "lift":
        return _render.render_lift(artifacts["result"], artifacts["nd"])
    if kind == "raylifts":
        return _render.render_raylifts(
            artifacts["lifts"], artifacts["nd"], artifacts["direction"]
        )
    if kind == "degree":
        return _render.render_degree(artifacts["result"])
    if kind == "branch":
        return _render.render_branch(artifacts["report"])
    if kind == "factor":
        return _render.render_factor(artifacts["chart"])
    if kind == "conservation":
        return _render.render_conservation(artifacts["report"], artifacts["nd"])
    if kind == "regularity":
        return _render.render_regularity(artifacts["report"], artifacts["box"])
    raise ValueError("no renderer for kind %r" % kind)


# ---------------------------------------------------------------------------
# scenario runner


@dataclass
class Report:
    """Executed scenario: the JSON-ready record plus side products."""

    data: dict
    svgs: dict = field(default_factory=dict)
    charts: dict = field(default_factory=dict)

    @property
    def all_ok(self):
        return all(t["status"] == "ok" for t in self.data["tasks"])

    def json(self):
        return json.dumps(_jsonable(self.data), indent=2, sort_keys=True) + "\n"

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(self.json())
        for i, svg in sorted(self.svgs.items()):
            (out / ("task-%d.svg" % i)).write_text(svg)
        for i, chart in sorted(self.charts.items()):
            with open(out / ("task-%d-chart.json" % i), "w") as fh:
                json.dump(_jsonable(chart), fh, sort_keys=True)
        return out / "report.json"


def run_scenario(source, out_dir=None, render=None):
    """Execute a scenario from a path, file object, or dict.

    Anticipated failures become per-task error records; execution always
    continues with the next task.  Returns the Report; files are written
    only when an output directory is configured.
    """
    if isinstance(source, dict):
        raw = source
    else:
        if isinstance(source, (str, Path)):
            try:
                text = Path(source).read_text()
            except OSError as exc:
                raise ParseError("scenario: cannot read %s (%s)" % (source, exc))
        else:
            text = source.read()
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(
                "scenario: invalid JSON at line %d column %d: %s"
                % (exc.lineno, exc.colno, exc.msg)
            )
    scen = normalize_scenario(raw)
    if out_dir is not None:
        scen["output"] = str(out_dir)
    if render is not None:
        scen["render"] = bool(render)

    pmap = get_map(scen["map"])
    records = []
    svgs = {}
    charts = {}
    per_task = []
    t_start = time.perf_counter()
    for i, task in enumerate(scen["tasks"]):
        t0 = time.perf_counter()
        rec = {"index": i, "kind": task["kind"], "params": dict(task)}
        try:
            payload, artifacts = _run_one(pmap, scen, task)
            rec["status"] = "ok"
            rec["result"] = payload
            if scen["render"]:
                svgs[i] = render_svg(artifacts)
                rec["svg"] = "task-%d.svg" % i
            if task["kind"] == "factor" and scen.get("output"):
                charts[i] = _chart_json(artifacts["chart"])
        except PlanarCoverError as exc:
            rec["status"] = "error"
            rec["error"] = {"code": exc.code, "message": str(exc)}
        per_task.append(time.perf_counter() - t0)
        records.append(rec)

    data = {
        "format": "planarcover-report",
        "version": 1,
        "package": {
            "name": "planarcover",
            "version": __version__,
            "kernels": IMPLEMENTATION,
        },
        "scenario": scen,
        "tasks": records,
        "timing": {
            "total_seconds": time.perf_counter() - t_start,
            "per_task_seconds": per_task,
        },
    }
    report = Report(_jsonable(data), svgs, charts)
    if scen.get("output"):
        report.write(scen["output"])
    return report


# ---------------------------------------------------------------------------
# human-readable summaries


def _fmt_pt(pair):
    return "%g%+gi" % (pair[0], pair[1])


def _describe(rec):
    kind = rec["kind"]
    if rec["status"] != "ok":
        err = rec["error"]
        return "task %d %s: failed [%s] %s" % (
            rec["index"], kind, err["code"], err["message"])
    r = rec["result"]
    if kind == "degree":
        return "local degree at %s: %d (rho %g, image gap %g)" % (
            _fmt_pt(r["point"]), r["degree"], r["rho"], r["min_image_gap"])
    if kind == "normal":
        return ("normal domain at %s: radius %g, %d cells, normal: %s" % (
            _fmt_pt(r["center"]), r["radius"],
            r["region"]["member_count"], r["is_normal"]))
    if kind == "lift":
        return "lift: %d knots, sup error %.3g, levels %d" % (
            len(r["lift"]["params"]), r["sup_error"], r["levels_used"])
    if kind == "raylifts":
        ends = ", ".join(_fmt_pt(e) for e in r["endpoints"])
        return "ray lifts: %d (endpoints %s)" % (r["count"], ends)
    if kind == "branch":
        lines = ["branch points: %d" % len(r["branch_points"])]
        for bp in r["branch_points"]:
            lines.append("  %s: degree %d, isolated within %g" % (
                _fmt_pt(bp["location"]), bp["degree"], bp["isolation_radius"]))
        return "\n".join(lines)
    if kind == "factor":
        return ("normal form at %s: k=%d, orientation %+d, residual %.3g, "
                "injectivity violations %d" % (
                    _fmt_pt(r["nd"]["center"]), r["k"], r["orientation"],
                    r["residual"], r["injectivity_violations"]))
    if kind == "conservation":
        uniq = sorted(set(r["counts"]))
        return "preimage counts over %d probes: %s, local degree %d, match: %s" % (
            len(r["counts"]), uniq, r["degree"], r["all_match"])
    if kind == "regularity":
        return "regularity: openness %s, lightness %s" % (
            "suspect" if r["openness_suspect"] else "clean",
            "suspect" if r["lightness_suspect"] else "clean")
    return "task %d %s: ok" % (rec["index"], kind)


# ---------------------------------------------------------------------------
# argparse front end


def _add_common(sub, *, cell=True, tol=True, lifts=False):
    sub.add_argument("--map", required=True, help="map id, e.g. pow2 or cubic.pre-shear")
    if cell:
        sub.add_argument("--cell", type=float, default=None, help="grid cell size")
    if tol:
        sub.add_argument("--tol", type=float, default=None, help="tolerance")
    if lifts:
        sub.add_argument("--max-lifts", type=int, default=None,
                         help="abort past this many lifts (default %d)" % _DEFAULT_MAX_LIFTS)
    sub.add_argument("--seed", type=int, default=0, help="probe seed (u64)")
    sub.add_argument("--out", default=None, help="directory for report.json and SVGs")
    sub.add_argument("--svg", default=None, help="write this task's SVG to a file")


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that accepts values with a leading minus, so that
    ``--box -2,-2,2,2`` and ``--at -1,0`` parse without an equals sign."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        # argparse only treats plain negative numbers as values; widen the
        # test to anything minus-digit so point and box tuples pass through
        # (set here because the parent __init__ assigns it per instance)
        self._negative_number_matcher = re.compile(r"^-[\d.]")


def _build_parser():
    parser = _Parser(
        prog="planarcover",
        description="Normal neighbourhoods, path lifts, branch sets and "
        "power-map factorizations of planar maps on a grid.",
    )
    parser.add_argument("--version", action="version",
                        version="planarcover %s (%s kernels)" % (__version__, IMPLEMENTATION))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("normal", help="find and verify a normal domain")
    _add_common(p, tol=False)
    p.add_argument("--at", required=True, help="center point re,im")
    p.add_argument("--radius", type=float, default=None, help="image disk radius")

    p = sub.add_parser("lift", help="lift a path through the map")
    _add_common(p)
    p.add_argument("--at", required=True, help="normal domain center re,im")
    p.add_argument("--from", dest="start", required=True, help="lift start point re,im")
    p.add_argument("--path", required=True, help='target path "re,im; re,im; ..."')
    p.add_argument("--radius", type=float, default=None)

    p = sub.add_parser("raylifts", help="enumerate lifts of an image ray")
    _add_common(p, lifts=True)
    p.add_argument("--at", required=True, help="normal neighbourhood center re,im")
    p.add_argument("--direction", required=True, help="ray direction re,im")
    p.add_argument("--radius", type=float, default=None)

    p = sub.add_parser("degree", help="local degree from a probe loop")
    _add_common(p, cell=False, tol=False)
    p.add_argument("--at", required=True, help="point re,im")
    p.add_argument("--rho", type=float, required=True, help="probe loop radius")
    p.add_argument("--samples", type=int, default=None)

    p = sub.add_parser("branch", help="detect and certify branch points")
    _add_common(p, tol=False)
    p.add_argument("--box", required=True, help="search box x0,y0,x1,y1")

    p = sub.add_parser("factor", help="power-map normal form at a point")
    _add_common(p)
    p.add_argument("--at", required=True, help="branch point re,im")
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--probes", type=int, default=None, help="verification probes")

    p = sub.add_parser("conserve", help="preimage counts against local degree")
    _add_common(p, tol=False)
    p.add_argument("--at", required=True, help="normal neighbourhood center re,im")
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--probes", type=int, default=None, help="value probes (default 50)")

    p = sub.add_parser("regularity", help="openness and lightness probes")
    _add_common(p, cell=False, tol=False)
    p.add_argument("--box", required=True, help="probe box x0,y0,x1,y1")
    p.add_argument("--resolution", type=float, required=True)
    p.add_argument("--probes", type=int, default=None)

    p = sub.add_parser("run", help="run a scenario file")
    p.add_argument("scenario", help="path to scenario JSON")
    p.add_argument("--out", default=None, help="override the output directory")

    p = sub.add_parser("zoo", help="built-in maps")
    p.add_argument("action", choices=["list"])
    return parser


def _scenario_from_args(args):
    task = {"kind": args.command if args.command != "conserve" else "conservation"}
    kind = task["kind"]
    if kind in ("normal", "lift", "raylifts", "degree", "factor", "conservation"):
        task["at"] = args.at
    if kind == "lift":
        task["from"] = args.start
        task["path"] = args.path
    if kind == "raylifts":
        task["direction"] = args.direction
        if args.max_lifts is not None:
            task["max_lifts"] = args.max_lifts
    if kind == "degree":
        task["rho"] = args.rho
        if args.samples is not None:
            task["samples"] = args.samples
    if kind in ("branch", "regularity"):
        task["box"] = args.box
    if kind == "regularity":
        task["resolution"] = args.resolution
    if kind in ("normal", "lift", "raylifts", "factor", "conservation"):
        if args.radius is not None:
            task["radius"] = args.radius
    if kind in ("factor", "conservation") and args.probes is not None:
        task["probes"] = args.probes
    if kind == "regularity" and args.probes is not None:
        task["probes"] = args.probes
    scen = {"map": args.map, "tasks": [task],
            "seed": _seed_value(args.seed, "--seed")}
    if getattr(args, "cell", None) is not None:
        scen["cell"] = _positive(args.cell, "--cell")
    if getattr(args, "tol", None) is not None:
        scen["tol"] = _positive(args.tol, "--tol")
    return scen


def _zoo_table():
    lines = []
    for entry in zoo():
        m = entry.map
        rect = m.domain.bounding_rect()
        bps = entry.ground_truth.branch_points
        if bps:
            desc = ", ".join("%s (k=%d)" % (z, k) for z, k in bps)
        else:
            desc = "none"
        lines.append("%-10s domain [%g, %g] x [%g, %g]  branch points: %s" % (
            m.label, rect.x0, rect.x1, rect.y0, rect.y1, desc))
    return "\n".join(lines)


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "zoo":
            print(_zoo_table())
            return 0
        if args.command == "run":
            report = run_scenario(args.scenario, out_dir=args.out)
        else:
            scen = _scenario_from_args(args)
            want_svg = getattr(args, "svg", None)
            report = run_scenario(scen, out_dir=args.out,
                                  render=bool(want_svg) or None)
            if want_svg and report.svgs:
                Path(want_svg).write_text(report.svgs[0])
    except ParseError as exc:
        print("error [ParseError]: %s" % exc, file=sys.stderr)
        return 2
    except PlanarCoverError as exc:
        print("error [%s]: %s" % (exc.code, exc), file=sys.stderr)
        return 2

    for rec in report.data["tasks"]:
        print(_describe(rec))
    if report.data["scenario"].get("output"):
        print("report written to %s" %
              (Path(report.data["scenario"]["output"]) / "report.json"))
    return 0 if report.all_ok else 1


if __name__ == "__main__":
    sys.exit(main())
