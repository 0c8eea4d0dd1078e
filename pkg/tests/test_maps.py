import numpy as np
import pytest

from planarcover.errors import OutOfDomain, ParseError
from planarcover.geometry import Rect
from planarcover.maps import (
    check_regularity,
    evaluate,
    get_map,
    load_sampled_map,
    zoo,
    zoo_entry,
)


def test_zoo_labels_unique_and_resolvable():
    labels = [e.map.label for e in zoo()]
    assert len(labels) == len(set(labels))
    for name in labels:
        assert get_map(name).label == name


def test_power_map_values():
    p3 = get_map("pow3")
    z = 0.5 + 0.25j
    assert evaluate(p3, z) == pytest.approx(z**3)


def test_winding_map_is_degree_two_but_not_holomorphic():
    w = get_map("winding2")
    z = 0.3 + 0.4j
    val = complex(evaluate(w, z))
    assert abs(val) == pytest.approx(abs(z))
    assert np.angle(val) == pytest.approx(2 * np.angle(z))


def test_domain_enforced():
    p = get_map("pow2")
    with pytest.raises(OutOfDomain):
        evaluate(p, 5.0 + 0j)


def test_ground_truth_fibers_invert_map():
    for name in ("pow2", "pow4", "quad", "cubic"):
        entry = zoo_entry(name)
        fiber = entry.ground_truth.fiber
        if fiber is None:
            continue
        y = 0.11 - 0.06j
        pts = fiber(y)
        vals = evaluate(entry.map, pts)
        assert np.abs(vals - y).max() < 1e-9


def test_composition_grammar():
    m = get_map("pow2.pre-shear")
    z = 0.2 + 0.1j
    sheared = complex(z.real + 0.5 * z.imag, z.imag)
    assert complex(evaluate(m, z)) == pytest.approx(sheared**2)

    m2 = get_map("pow2.post-conj")
    assert complex(evaluate(m2, z)) == pytest.approx(np.conj(z**2))


def test_bad_map_id_raises_parse_error():
    with pytest.raises(ParseError):
        get_map("pow7")
    with pytest.raises(ParseError):
        get_map("pow2.mid-shear")


def test_pre_composition_shrinks_domain_to_fit():
    m = get_map("pow2.pre-shear")
    rect = m.domain.bounding_rect()
    # the shear pushes corners outward, so the inscribed box is smaller
    assert rect.x1 < 2.0
    base = get_map("pow2").domain.bounding_rect()
    assert base.x1 == pytest.approx(2.0)


def test_sampled_map_round_trip(tmp_path):
    n = 41
    xs = np.linspace(-1.0, 1.0, n)
    path = tmp_path / "samples.txt"
    with open(path, "w") as fh:
        fh.write("grid %d %d -1 -1 1 1\n" % (n, n))
        for y in xs:
            for x in xs:
                v = complex(x + 1j * y) ** 2
                fh.write("%r %r\n" % (v.real, v.imag))
    m = load_sampled_map(str(path))
    z = 0.31 + 0.17j
    assert complex(evaluate(m, z)) == pytest.approx(z**2, abs=5e-3)


def test_regularity_clean_for_open_light_map():
    rep = check_regularity(get_map("pow2"), Rect(-1, -1, 1, 1), 0.05)
    assert rep.clean


def test_regularity_flags_interval_valued_map():
    rep = check_regularity(get_map("abs"), Rect(-1, -1, 1, 1), 0.05)
    assert rep.openness_suspect


def test_regularity_flags_fat_fibers():
    rep = check_regularity(get_map("re"), Rect(-1, -1, 1, 1), 0.05)
    assert rep.lightness_suspect
