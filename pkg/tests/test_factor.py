import numpy as np
import pytest

from planarcover.errors import MonodromyMismatch
from planarcover.factor import build_normal_form, verify_normal_form
from planarcover.maps import evaluate, get_map
from planarcover.normal import build_normal_domain
from planarcover.region import Grid


@pytest.fixture(scope="module")
def pow2_chart():
    pmap = get_map("pow2")
    grid = Grid.square(0.0, 0.55, 0.002)
    nd = build_normal_domain(pmap, 0.0, 0.25, grid)
    return pmap, build_normal_form(pmap, 0.0, grid, 1e-3, nd=nd)


def test_square_chart_shape(pow2_chart):
    pmap, chart = pow2_chart
    assert chart.k == 2
    assert chart.orientation == 1
    assert chart.residual < 1e-2
    assert chart.injectivity_violations == 0
    assert chart.unassigned_cells == 0


def test_deck_generator_is_exact_root_of_unity(pow2_chart):
    _, chart = pow2_chart
    assert chart.deck_generator == -1.0 + 0.0j


def test_psi_agrees_with_scaled_identity(pow2_chart):
    # for f(z) = z^2 with phi the affine disk chart, psi(w) = w / sqrt(r)
    # up to the deck rotation picked by the base cell
    _, chart = pow2_chart
    scale = 1.0 / np.sqrt(chart.nd.radius)
    probes = np.array([0.3 + 0.1j, -0.2 + 0.25j, 0.05 - 0.4j])
    got = np.array([chart.psi(w) for w in probes])
    expect = probes * scale
    # resolve the global deck ambiguity with the first probe
    ratio = got[0] / expect[0]
    snapped = chart.deck_generator ** round(np.angle(ratio) / np.pi)
    assert np.abs(got - snapped * expect).max() < 5e-3


def test_factorization_reproduces_map(pow2_chart):
    pmap, chart = pow2_chart
    probes = np.array([0.31 + 0.12j, -0.22 + 0.18j, 0.4j, 0.45 + 0j])
    psi = np.array([chart.psi(w) for w in probes])
    via_chart = chart.phi_inv(psi**chart.k)
    direct = evaluate(pmap, probes)
    assert np.abs(via_chart - direct).max() < 1e-2 * chart.nd.radius


def test_verification_report(pow2_chart):
    _, chart = pow2_chart
    rep = verify_normal_form(chart, 400, seed=3)
    assert rep.max_residual < 1e-2
    assert rep.min_separation_ratio > 1.0
    assert rep.boundary_max_deviation < 0.05
    assert rep.probes_used >= 400


def test_orientation_flip(pow2_chart):
    pmap = get_map("pow2.post-conj")
    grid = Grid.square(0.0, 0.55, 0.004)
    nd = build_normal_domain(pmap, 0.0, 0.25, grid)
    chart = build_normal_form(pmap, 0.0, grid, 1e-3, nd=nd)
    assert chart.k == 2
    assert chart.orientation == -1
    assert chart.deck_generator == -1.0 + 0.0j


def test_wrong_k_detected_by_monodromy(pow2_chart):
    pmap = get_map("pow2")
    grid = Grid.square(0.0, 0.55, 0.004)
    nd = build_normal_domain(pmap, 0.0, 0.25, grid)
    with pytest.raises(MonodromyMismatch):
        build_normal_form(pmap, 0.0, grid, 1e-3, nd=nd, _force_k=3)


def test_winding_map_chart(winding2):
    # the winding map is not holomorphic, so the per-cell residual decays
    # only linearly in the cell size; 1e-2 is the matching tolerance
    grid = Grid.square(0.0, 0.3, 0.002)
    nd = build_normal_domain(winding2, 0.0, 0.25, grid)
    chart = build_normal_form(winding2, 0.0, grid, 1e-2, nd=nd)
    assert chart.k == 2
    assert chart.residual < 1e-2
    assert chart.injectivity_violations == 0


def test_degree_one_chart_is_disk_homeomorphism():
    pmap = get_map("pow1")
    grid = Grid.square(0.2, 0.7, 0.004)
    nd = build_normal_domain(pmap, 0.2, 0.3, grid)
    # the center cell carries |f(cell center) - f(x)| / r of residual, about
    # 3 cells / r here
    chart = build_normal_form(pmap, 0.2, grid, 2e-2, nd=nd)
    assert chart.k == 1
    assert chart.deck_generator == 1.0 + 0.0j
    # psi must be injective on a degree-1 chart as well
    assert chart.injectivity_violations == 0


def test_sheared_square_chart():
    pmap = get_map("pow2.pre-shear")
    # the shear widens the preimage disk to half-width 0.56
    grid = Grid.square(0.0, 0.65, 0.002)
    nd = build_normal_domain(pmap, 0.0, 0.25, grid)
    chart = build_normal_form(pmap, 0.0, grid, 1e-3, nd=nd)
    assert chart.k == 2
    assert chart.residual < 1e-2
    assert chart.injectivity_violations == 0


def test_deck_rotation_permutes_fiber(pow2_chart):
    # two preimages of the same value must have psi values differing by
    # exactly one application of the deck generator
    _, chart = pow2_chart
    w = 0.3 + 0.05j
    psi_a = chart.psi(w)
    psi_b = chart.psi(-w)
    ratio = psi_b / psi_a
    assert abs(ratio - chart.deck_generator) < 5e-2
