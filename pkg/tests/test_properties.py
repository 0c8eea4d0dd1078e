"""Property-based invariants over randomized inputs."""

import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from planarcover.branch import local_degree
from planarcover.cli import _jsonable, _point, normalize_scenario
from planarcover.errors import ParseError
from planarcover.factor import _unit_root
from planarcover.geometry import Rect
from planarcover.lifting import lift_path
from planarcover.maps import evaluate, get_map, zoo_entry
from planarcover.normal import build_normal_domain
from planarcover.region import CellRegion, Grid, Polyline
from planarcover.render import region_outline

finite = st.floats(
    min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False
)


@given(finite, finite)
def test_point_parser_list_and_string_agree(re, im):
    from_list = _point([re, im], "p")
    from_str = _point("%r,%r" % (re, im), "p")
    assert from_list == complex(re, im)
    assert from_str == from_list


@given(st.text(max_size=12).filter(lambda s: "," not in s))
def test_point_parser_rejects_non_numeric(text):
    try:
        float(text)
        numeric = True
    except ValueError:
        numeric = False
    if not numeric:
        with pytest.raises(ParseError):
            _point(text, "p")


@given(st.integers(min_value=1, max_value=12), st.integers(-12, 12))
def test_unit_root_lies_on_circle_and_powers_to_one(k, m):
    z = _unit_root(m, k)
    assert abs(abs(z) - 1.0) < 1e-12
    assert abs(z**k - 1.0) < 1e-9
    if (4 * (m % k)) % k == 0:
        # quarter-turn cases are exact, not merely close
        assert z in (1 + 0j, 1j, -1 + 0j, -1j)


@given(
    st.integers(min_value=2, max_value=6),
    st.complex_numbers(max_magnitude=1.5, allow_nan=False, allow_infinity=False),
)
def test_ground_truth_fiber_points_map_back(k, w):
    entry = zoo_entry("pow%d" % k)
    pts = entry.ground_truth.fiber(w)
    assert len(pts) == (1 if w == 0 else k)
    assert np.abs(pts**k - w).max() < 1e-9 * max(1.0, abs(w))


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_outline_signed_area_equals_cell_count(data):
    nrows = data.draw(st.integers(3, 9), label="nrows")
    ncols = data.draw(st.integers(3, 9), label="ncols")
    bits = data.draw(
        st.lists(st.booleans(), min_size=nrows * ncols, max_size=nrows * ncols),
        label="mask",
    )
    mask = np.array(bits, dtype=bool).reshape(nrows, ncols)
    if not mask.any():
        return
    grid = Grid(Rect(0.0, 0.0, ncols * 0.125, nrows * 0.125), 0.125)
    loops = region_outline(CellRegion(grid, mask))
    area = 0.0
    for loop in loops:
        x, y = loop[:, 0], loop[:, 1]
        area += 0.5 * float(
            np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
        )
    # outer loops turn one way, hole loops the other; the signed sum is
    # exactly the covered area
    assert area == pytest.approx(mask.sum() * 0.125**2, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(
    st.floats(min_value=0.02, max_value=0.3),
    st.floats(min_value=0.0, max_value=2 * np.pi),
)
def test_local_degree_independent_of_probe(rho, angle):
    pmap = get_map("pow2")
    assert int(local_degree(pmap, 0.0, rho)) == 2
    # and at a regular point the degree is 1 whatever the direction
    z = 0.8 * np.exp(1j * angle)
    assert int(local_degree(pmap, complex(z), 0.05)) == 1


@pytest.fixture(scope="module")
def small_nd():
    pmap = get_map("pow2")
    grid = Grid.square(0.0, 0.5, 0.01)
    return pmap, build_normal_domain(pmap, 0.0, 0.2, grid)


@settings(max_examples=12, deadline=None)
@given(
    st.floats(min_value=0.05, max_value=0.15),
    st.floats(min_value=0.0, max_value=2 * np.pi),
    st.floats(min_value=0.5, max_value=2 * np.pi - 0.5),
)
def test_lift_projects_back_to_target(small_nd, r0, a0, sweep):
    pmap, nd = small_nd
    y0 = r0 * np.exp(1j * a0)
    y1 = r0 * np.exp(1j * (a0 + sweep))
    beta = Polyline.from_vertices(np.array([y0, 0.5 * (y0 + y1), y1]))
    x0 = complex(np.sqrt(y0))
    tol = 0.05
    res = lift_path(pmap, nd, beta, x0, tol)
    t = np.linspace(0.0, 1.0, 200)
    proj = np.asarray(evaluate(pmap, res.lift.eval(t)))
    assert np.abs(proj - beta.eval(t)).max() < 2 * tol
    assert res.sup_error <= tol


@given(
    st.recursive(
        st.one_of(
            st.integers(-5, 5),
            st.floats(allow_nan=False, allow_infinity=False, width=32),
            st.booleans(),
            st.text(max_size=6),
        ),
        lambda children: st.one_of(
            st.lists(children, max_size=4),
            st.dictionaries(st.text(max_size=4), children, max_size=4),
        ),
        max_leaves=12,
    )
)
def test_jsonable_output_always_serializes(obj):
    json.dumps(_jsonable(obj))


def test_jsonable_flattens_numpy_and_complex():
    out = _jsonable({
        "a": np.float64(1.5),
        "b": np.int32(3),
        "c": 1 + 2j,
        "d": np.array([1.0, 2.0]),
        "e": [np.bool_(True)],
    })
    assert out == {"a": 1.5, "b": 3, "c": [1.0, 2.0], "d": [1.0, 2.0],
                   "e": [True]}
    json.dumps(out)


@given(st.floats(min_value=1e-4, max_value=0.5))
def test_normalized_scenario_round_trips_through_json(cell):
    scen = normalize_scenario({
        "map": "pow2",
        "cell": cell,
        "tasks": [{"kind": "degree", "at": [0.1, -0.2], "rho": 0.05}],
    })
    again = normalize_scenario(json.loads(json.dumps(scen)))
    assert again == scen
