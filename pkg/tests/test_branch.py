import numpy as np
import pytest

from planarcover.branch import (
    count_preimages,
    degree_conservation_check,
    detect_branch_points,
    local_degree,
)
from planarcover.errors import DegenerateLoop, PreconditionFailed
from planarcover.geometry import Rect
from planarcover.maps import get_map
from planarcover.normal import build_normal_domain
from planarcover.region import Grid


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5, 6])
def test_power_map_degrees(k):
    pmap = get_map("pow%d" % k)
    res = local_degree(pmap, 0.0, 0.1)
    assert int(res) == k


def test_degree_away_from_branch_point_is_one(pow2):
    assert int(local_degree(pow2, 0.5, 0.05)) == 1


def test_orientation_reversal_negates_degree(pow2):
    pmap = get_map("pow2.post-conj")
    assert int(local_degree(pmap, 0.0, 0.1)) == -2


def test_winding_map_degree(winding2):
    assert int(local_degree(winding2, 0.0, 0.1)) == 2


def test_cubic_critical_points():
    pmap = get_map("cubic")
    assert int(local_degree(pmap, 1.0, 0.05)) == 2
    assert int(local_degree(pmap, -1.0, 0.05)) == 2
    assert int(local_degree(pmap, 0.0, 0.05)) == 1


def test_probe_loop_must_stay_in_domain(pow2):
    with pytest.raises(PreconditionFailed):
        local_degree(pow2, 1.95, 0.2)


def test_constant_image_loop_degenerate():
    pmap = get_map("abs")
    # the loop image of |z| around 0 collapses onto a circle traversed
    # back and forth; the gap guard has to trip before any winding count
    with pytest.raises(DegenerateLoop):
        local_degree(pmap, 0.0, 1e-15)


def test_count_preimages_in_square_domain(pow2, pow2_nd_coarse):
    assert count_preimages(pow2, pow2_nd_coarse, 0.04 + 0j) == 2
    assert count_preimages(pow2, pow2_nd_coarse, 0.0 + 0j) == 1


def test_count_preimages_cross_check(pow2, pow2_nd_coarse):
    n = count_preimages(pow2, pow2_nd_coarse, 0.09 + 0j, cross_check=True)
    assert n == 2


def test_detect_square_branch_point(pow2):
    box = Rect(-1.0, -1.0, 1.0, 1.0)
    grid = Grid(box, 0.01)
    report = detect_branch_points(pow2, box, grid)
    assert len(report.branch_points) == 1
    bp = report.branch_points[0]
    assert abs(bp.location) < 0.02
    assert bp.degree == 2
    assert bp.isolation_radius > 0


def test_detect_cubic_branch_pair():
    pmap = get_map("cubic")
    box = Rect(-2.0, -2.0, 2.0, 2.0)
    grid = Grid(box, 0.01)
    report = detect_branch_points(pmap, box, grid)
    locs = sorted(bp.location.real for bp in report.branch_points)
    assert len(locs) == 2
    assert abs(locs[0] + 1.0) < 0.02 and abs(locs[1] - 1.0) < 0.02
    assert all(bp.degree == 2 for bp in report.branch_points)
    # isolation balls must not overlap
    a, b = report.branch_points
    assert (
        abs(a.location - b.location)
        > a.isolation_radius + b.isolation_radius
    )


def test_detect_nothing_for_homeomorphism():
    pmap = get_map("pow1")
    box = Rect(-1.0, -1.0, 1.0, 1.0)
    grid = Grid(box, 0.02)
    report = detect_branch_points(pmap, box, grid)
    assert report.branch_points == ()


def test_detect_flat_high_degree_point():
    pmap = get_map("pow6")
    box = Rect(-1.0, -1.0, 1.0, 1.0)
    grid = Grid(box, 0.01)
    report = detect_branch_points(pmap, box, grid)
    assert [bp.degree for bp in report.branch_points] == [6]


def test_conservation_matches_degree(pow3):
    grid = Grid.square(0.0, 0.66, 0.004)
    nd = build_normal_domain(pow3, 0.0, 0.2, grid)
    rep = degree_conservation_check(pow3, nd, 25, seed=11)
    assert rep.all_match
    assert rep.degree == 3
    assert set(rep.counts) == {3}


def test_conservation_seeded_reproducible(pow3):
    grid = Grid.square(0.0, 0.66, 0.004)
    nd = build_normal_domain(pow3, 0.0, 0.2, grid)
    a = degree_conservation_check(pow3, nd, 10, seed=5)
    b = degree_conservation_check(pow3, nd, 10, seed=5)
    assert a.counts == b.counts
