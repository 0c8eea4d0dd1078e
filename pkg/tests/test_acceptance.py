"""End-to-end checks of the shipped behavior, one verdict line per area.

Every test here drives the public surface (run_scenario, the same engine the
command line uses) or the documented library entry points, and prints a
[PASS]/[FAIL] line with the key numbers so a full run reads as a short
report.  Stated runtime budgets are asserted, not aspirational.
"""

import copy
import json
import math
import time

import numpy as np
import pytest

from planarcover.cli import run_scenario
from planarcover.lifting import assert_unique_lift, lift_path
from planarcover.maps import eval_array, evaluate, get_map
from planarcover.normal import build_normal_domain, is_normal_neighbourhood
from planarcover.region import Grid, Polyline


def _verdict(capsys, num, name, ok, detail):
    line = "[%s] criterion %d: %s (%s)" % ("PASS" if ok else "FAIL", num, name, detail)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


def _run(capsys, num, name, fn):
    try:
        ok, detail = fn()
    except Exception as exc:  # surface the failure in the verdict line
        _verdict(capsys, num, name, False, "%s: %s" % (type(exc).__name__, exc))
        raise
    _verdict(capsys, num, name, ok, detail)


def _poly_from_json(obj):
    verts = np.array([complex(a, b) for a, b in obj["vertices"]])
    return Polyline(verts, np.asarray(obj["params"], dtype=float))


# ---------------------------------------------------------------- criterion 1


def test_local_degree_oracle(capsys):
    def body():
        t0 = time.perf_counter()
        jobs = [("pow%d" % k, [0.0, 0.0], 0.1, k) for k in range(1, 7)]
        jobs += [("cubic", [1.0, 0.0], 0.05, 2), ("cubic", [-1.0, 0.0], 0.05, 2)]
        jobs += [("winding2", [0.0, 0.0], 0.1, 2)]
        got = []
        for name, at, rho, want in jobs:
            rep = run_scenario(
                {"map": name, "tasks": [{"kind": "degree", "at": at, "rho": rho}]}
            )
            deg = rep.data["tasks"][0]["result"]["degree"]
            got.append((name, at[0], deg, want))
        dt = time.perf_counter() - t0
        bad = [g for g in got if g[2] != g[3]]
        ok = not bad and dt < 5.0
        detail = "9 probes exact, %.1fs < 5s" % dt if ok else "bad=%r dt=%.1fs" % (bad, dt)
        return ok, detail

    _run(capsys, 1, "local degree oracle", body)


# ---------------------------------------------------------------- criterion 2


def test_path_lifting_accuracy(capsys):
    def body():
        t0 = time.perf_counter()
        rep = run_scenario(
            {
                "map": "pow2",
                "cell": 0.002,
                "tol": 1e-3,
                "tasks": [
                    {
                        "kind": "lift",
                        "at": [0.0, 0.0],
                        "radius": 0.25,
                        "from": [0.4, 0.0],
                        "path": "0.16,0; 0,0.16",
                    }
                ],
            }
        )
        res = rep.data["tasks"][0]["result"]
        lift = _poly_from_json(res["lift"])
        # oracle: the square-root branch through 0.4, continued pointwise
        # along the segment (which stays in the right/upper quadrant, so the
        # principal branch is the continuation)
        t = np.linspace(0.0, 1.0, 2000)
        beta = 0.16 * (1 - t) + 0.16j * t
        oracle = np.sqrt(beta)
        sup = float(np.abs(lift.eval(t) - oracle).max())
        dt = time.perf_counter() - t0
        ok = sup < 5e-3 and res["sup_error"] <= 1e-3 and dt < 30.0
        detail = "sup-dist %.2e < 5e-3, sup_error %.2e <= 1e-3, %.1fs < 30s" % (
            sup,
            res["sup_error"],
            dt,
        )
        return ok, detail

    _run(capsys, 2, "path lifting accuracy", body)


# ---------------------------------------------------------------- criterion 3


def test_ray_lift_count_matches_degree(capsys):
    def body():
        cell = 0.004
        details = []
        for name, k in [("pow2", 2), ("pow3", 3), ("pow5", 5), ("winding2", 2)]:
            scen = {
                "map": name,
                "tol": 5e-3,
                "cell": cell,
                "tasks": [
                    {
                        "kind": "raylifts",
                        "at": [0.0, 0.0],
                        "direction": [1.0, 0.0],
                        "radius": 0.3,
                    }
                ],
            }
            rep = run_scenario(scen)
            res = rep.data["tasks"][0]["result"]
            c = 0.3 * (1 - 5e-3)
            if name == "winding2":
                truth = [-c + 0j, c + 0j]
            else:
                truth = [c ** (1.0 / k) * np.exp(2j * np.pi * j / k) for j in range(k)]
            key = lambda z: (round(z.real, 6), round(z.imag, 6))
            got = sorted((complex(a, b) for a, b in res["endpoints"]), key=key)
            truth = sorted(truth, key=key)
            if res["count"] != k or len(got) != k:
                return False, "%s: count %d, want %d" % (name, res["count"], k)
            err = max(abs(a - b) for a, b in zip(truth, got))
            if err >= 5 * cell:
                return False, "%s: endpoint error %.2e >= %.1e" % (name, err, 5 * cell)
            scen256 = copy.deepcopy(scen)
            scen256["max_lifts"] = 256
            rep256 = run_scenario(scen256)
            if rep256.data["tasks"][0]["result"]["count"] != k:
                return False, "%s: count changes at max_lifts=256" % name
            details.append("%s %d@%.0e" % (name, k, err))
        return True, "; ".join(details) + "; stable at max_lifts=256"

    _run(capsys, 3, "ray lift count matches degree", body)


# ---------------------------------------------------------------- criterion 4


_POOL = [
    ("pow1", 0.0, 0.7, 0.004, 0.3),
    ("pow2", 0.0, 0.5, 0.004, 0.2),
    ("pow3", 0.0, 0.62, 0.004, 0.2),
    ("quad", 0.0, 0.3, 0.002, 0.05),
    ("winding2", 0.0, 0.35, 0.002, 0.3),
    ("cubic", 1.0, 0.55, 0.004, 0.1),
]


@pytest.fixture(scope="module")
def uniqueness_pool():
    pool = []
    for name, x, half, cell, r in _POOL:
        pmap = get_map(name)
        nd = build_normal_domain(pmap, complex(x), r, Grid.square(complex(x), half, cell))
        assert is_normal_neighbourhood(pmap, nd)
        fc = eval_array(pmap, nd.region.centers)
        inner = nd.region.centers[np.abs(fc - nd.image_center) < 0.7 * nd.radius]
        pool.append((pmap, nd, inner))
    return pool


def test_lift_uniqueness_randomized(capsys, uniqueness_pool):
    def body():
        rng = np.random.default_rng(8163)
        tol = 5e-3
        fails = []
        t0 = time.perf_counter()
        for trial in range(100):
            pmap, nd, inner = uniqueness_pool[int(rng.integers(len(uniqueness_pool)))]
            x0 = complex(inner[int(rng.integers(inner.size))])
            y0 = evaluate(pmap, x0)
            rho = nd.radius * rng.uniform(0.1, 0.35)
            y1 = y0 + rho * np.exp(2j * np.pi * rng.uniform())
            off = y1 - nd.image_center
            if abs(off) > 0.85 * nd.radius:
                y1 = nd.image_center + off * (0.85 * nd.radius / abs(off))
            beta = Polyline.from_vertices(np.array([y0, y1]))
            lift1 = lift_path(pmap, nd, beta, x0, tol)
            lift2 = lift_path(
                pmap, nd, beta, x0, tol, initial_intervals=3, tube_inflation=0.55
            )
            t = np.linspace(0.0, 1.0, 600)
            sep = float(np.abs(lift1.lift.eval(t) - lift2.lift.eval(t)).max())
            check = assert_unique_lift(
                pmap, pmap.domain.bounding_rect(), lift1.lift, lift2.lift, tol
            )
            if sep > 3 * tol or not check.agree:
                fails.append((trial, pmap.label, sep))
        dt = time.perf_counter() - t0
        ok = not fails
        detail = (
            "100/100 trials agree within 3*tol, %.1fs" % dt
            if ok
            else "failures: %r" % fails[:5]
        )
        return ok, detail

    _run(capsys, 4, "independent lifts agree", body)


# ---------------------------------------------------------------- criterion 5


def test_branch_detection(capsys):
    def body():
        t0 = time.perf_counter()
        rep = run_scenario(
            {
                "map": "cubic",
                "cell": 0.01,
                "tasks": [{"kind": "branch", "box": [-2.0, -2.0, 2.0, 2.0]}],
            }
        )
        found = rep.data["tasks"][0]["result"]["branch_points"]
        if len(found) != 2:
            return False, "cubic: %d branch points, want 2" % len(found)
        locs = sorted(
            (complex(a, b) for a, b in (bp["location"] for bp in found)),
            key=lambda z: z.real,
        )
        errs = [abs(locs[0] + 1.0), abs(locs[1] - 1.0)]
        degs = [bp["degree"] for bp in found]
        pair = [
            (complex(*bp["location"]), bp["isolation_radius"]) for bp in found
        ]
        gap = abs(pair[0][0] - pair[1][0])
        isolated = gap > pair[0][1] + pair[1][1]
        rep1 = run_scenario(
            {
                "map": "pow1",
                "cell": 0.01,
                "tasks": [{"kind": "branch", "box": [-2.0, -2.0, 2.0, 2.0]}],
            }
        )
        none_found = rep1.data["tasks"][0]["result"]["branch_points"] == []
        dt = time.perf_counter() - t0
        ok = (
            max(errs) < 0.02
            and degs == [2, 2]
            and isolated
            and none_found
            and dt < 60.0
        )
        detail = (
            "cubic: 2 points within %.1e of -1/+1, degrees 2, disjoint isolation "
            "disks; pow1: none; %.1fs < 60s" % (max(errs), dt)
        )
        return ok, detail

    _run(capsys, 5, "branch detection", body)


# ---------------------------------------------------------------- criterion 6


def test_degree_conservation(capsys):
    def body():
        details = []
        for name, radius, want in [("pow3", 0.2, 3), ("quad", 0.04, 2)]:
            rep = run_scenario(
                {
                    "map": name,
                    "tasks": [
                        {
                            "kind": "conservation",
                            "at": [0.0, 0.0],
                            "radius": radius,
                            "probes": 50,
                        }
                    ],
                }
            )
            res = rep.data["tasks"][0]["result"]
            dissent = [c for c in res["counts"] if c != want]
            if res["degree"] != want or dissent or not res["all_match"]:
                return False, "%s: degree %r, dissenting counts %r" % (
                    name,
                    res["degree"],
                    dissent,
                )
            details.append("%s: 50 probes all %d" % (name, want))
        return True, "; ".join(details)

    _run(capsys, 6, "degree conservation", body)


# ---------------------------------------------------------------- criterion 7


def test_normal_form_residual(capsys):
    def body():
        details = []
        for name in ("pow2", "pow3", "winding2", "pow2.pre-shear"):
            t0 = time.perf_counter()
            rep = run_scenario(
                {
                    "map": name,
                    "tasks": [
                        {
                            "kind": "factor",
                            "at": [0.0, 0.0],
                            "radius": 0.25,
                            "cell": 0.002,
                            "tol": 1e-2,
                        }
                    ],
                }
            )
            dt = time.perf_counter() - t0
            res = rep.data["tasks"][0]["result"]
            if res["residual"] >= 1e-2:
                return False, "%s: residual %.3e >= 1e-2" % (name, res["residual"])
            k, orient = res["k"], res["orientation"]
            a = 2.0 * math.pi * (orient % k) / k
            expect = [math.cos(a), math.sin(a)]
            if (orient % k) * 4 % k == 0:
                expect = [
                    [1.0, 0.0],
                    [0.0, 1.0],
                    [-1.0, 0.0],
                    [0.0, -1.0],
                ][(orient % k) * 4 // k]
            if res["deck_generator"] != expect:
                return False, "%s: deck generator %r, want exactly %r" % (
                    name,
                    res["deck_generator"],
                    expect,
                )
            if res["injectivity_violations"] != 0:
                return False, "%s: %d injectivity violations" % (
                    name,
                    res["injectivity_violations"],
                )
            if dt >= 60.0:
                return False, "%s: %.1fs >= 60s" % (name, dt)
            details.append("%s k=%d res %.1e %.1fs" % (name, k, res["residual"], dt))
        return True, "; ".join(details) + "; exact generators, no violations"

    _run(capsys, 7, "power map normal form", body)


# ---------------------------------------------------------------- criterion 8


def test_failure_diagnostics(capsys):
    def body():
        rep_abs = run_scenario(
            {
                "map": "abs",
                "tasks": [
                    {
                        "kind": "regularity",
                        "box": [-1.0, -1.0, 1.0, 1.0],
                        "resolution": 0.05,
                    }
                ],
            }
        )
        res_abs = rep_abs.data["tasks"][0]["result"]
        rep_re = run_scenario(
            {
                "map": "re",
                "tasks": [
                    {
                        "kind": "regularity",
                        "box": [-1.0, -1.0, 1.0, 1.0],
                        "resolution": 0.05,
                    }
                ],
            }
        )
        res_re = rep_re.data["tasks"][0]["result"]
        rep_nd = run_scenario(
            {"map": "re", "tasks": [{"kind": "normal", "at": [0.0, 0.0]}]}
        )
        task = rep_nd.data["tasks"][0]
        refused = (
            task["status"] == "error" and task["error"]["code"] == "NoRadiusFound"
        )
        ok = res_abs["openness_suspect"] and res_re["lightness_suspect"] and refused
        detail = (
            "abs flagged openness_suspect, re flagged lightness_suspect, "
            "normal on re refused with NoRadiusFound"
        )
        if not ok:
            detail = "abs=%r re=%r normal-on-re=%r" % (
                res_abs["openness_suspect"],
                res_re["lightness_suspect"],
                task.get("error"),
            )
        return ok, detail

    _run(capsys, 8, "failure diagnostics", body)


# ---------------------------------------------------------------- criterion 9


def test_deterministic_reports(capsys):
    def body():
        scen = {
            "map": "pow2",
            "seed": 7,
            "render": True,
            "cell": 0.008,
            "tasks": [
                {"kind": "degree", "at": [0.0, 0.0], "rho": 0.1},
                {
                    "kind": "raylifts",
                    "at": [0.0, 0.0],
                    "direction": [1.0, 0.0],
                    "radius": 0.15,
                },
                {"kind": "branch", "box": [-0.5, -0.5, 0.5, 0.5], "cell": 0.02},
                {
                    "kind": "conservation",
                    "at": [0.0, 0.0],
                    "radius": 0.1,
                    "probes": 20,
                },
            ],
        }
        rep1 = run_scenario(copy.deepcopy(scen))
        rep2 = run_scenario(copy.deepcopy(scen))
        d1 = copy.deepcopy(rep1.data)
        d2 = copy.deepcopy(rep2.data)
        d1.pop("timing")
        d2.pop("timing")
        same_json = json.dumps(d1, sort_keys=True) == json.dumps(d2, sort_keys=True)
        same_svg = rep1.svgs == rep2.svgs
        ok = same_json and same_svg and len(rep1.svgs) == len(scen["tasks"])
        detail = "reports byte-identical outside timing, %d SVGs identical" % len(
            rep1.svgs
        )
        if not ok:
            detail = "json equal: %r, svg equal: %r" % (same_json, same_svg)
        return ok, detail

    _run(capsys, 9, "deterministic reports", body)
