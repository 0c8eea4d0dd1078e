"""Backend equivalence: the compiled kernels and the pure-Python twins
must produce bit-identical output, not merely equivalent labelings."""

import numpy as np
import pytest

from planarcover._kernels import (
    HAVE_COMPILED,
    IMPLEMENTATION,
    component_from_seed,
    label4,
    propagate_kth_root,
)
from planarcover._kernels import pyfallback

if HAVE_COMPILED:
    from planarcover._kernels import _gridcore
else:
    _gridcore = None

needs_compiled = pytest.mark.skipif(
    not HAVE_COMPILED, reason="compiled extension not built"
)


def random_mask(rng, shape=(40, 53), density=0.55):
    return (rng.random(shape) < density).astype(np.uint8)


def test_backend_selected():
    assert IMPLEMENTATION in ("compiled", "python")
    if HAVE_COMPILED:
        assert IMPLEMENTATION == "compiled"


def test_label4_numbering_row_major():
    mask = np.zeros((5, 7), dtype=np.uint8)
    mask[0, 5] = 1          # first in scan order -> label 1
    mask[2, 0:3] = 1        # label 2
    mask[4, 6] = 1          # label 3
    labels, n = label4(mask)
    assert n == 3
    assert labels[0, 5] == 1
    assert labels[2, 1] == 2
    assert labels[4, 6] == 3
    assert labels[labels < 0].size == 0


def test_label4_is_four_connected():
    mask = np.array([[1, 0], [0, 1]], dtype=np.uint8)
    labels, n = label4(mask)
    assert n == 2
    assert labels[0, 0] != labels[1, 1]


def test_component_from_seed_selects_one_blob():
    mask = np.zeros((6, 6), dtype=np.uint8)
    mask[0, 0:2] = 1
    mask[4:6, 4:6] = 1
    comp = component_from_seed(mask, 5, 5)
    assert comp.sum() == 4
    assert comp[0, 0] == 0 and comp[4, 4] == 1


def test_component_from_seed_rejects_outside_seed():
    mask = np.zeros((3, 3), dtype=np.uint8)
    mask[1, 1] = 1
    with pytest.raises(ValueError):
        component_from_seed(mask, 0, 0)


def _roots_table(v, k):
    mod = np.abs(v) ** (1.0 / k)
    theta = np.angle(v)
    j = np.arange(k)
    roots = mod[..., None] * np.exp(
        1j * (theta[..., None] + 2.0 * np.pi * j) / k
    )
    return np.ascontiguousarray(roots), np.ascontiguousarray(theta)


def test_propagate_continues_square_root():
    # v = w^2 on a small window; continuation from a base cell must pick a
    # single coherent square-root branch, i.e. psi == +-w everywhere.
    n = 31
    xs = np.linspace(-1.0, 1.0, n)
    w = xs[None, :] + 1j * xs[:, None]
    v = w**2
    valid = (np.abs(w) > 0.15).astype(np.uint8)
    roots, theta = _roots_table(v, 2)
    sr, sc = 0, 0
    base = int(np.argmin(np.abs(roots[sr, sc] - w[sr, sc])))
    psi, assigned = propagate_kth_root(valid, theta, roots, 2, sr, sc, base)
    got = psi[assigned.astype(bool)]
    ref = w[assigned.astype(bool)]
    assert np.abs(got - ref).max() < 1e-12
    assert assigned.sum() == valid.sum()


@needs_compiled
@pytest.mark.parametrize("trial", range(10))
def test_label4_bit_identical(trial):
    rng = np.random.default_rng(1000 + trial)
    mask = random_mask(rng)
    la, na = _gridcore.label4(mask)
    lb, nb = pyfallback.label4(mask)
    assert na == nb
    assert np.array_equal(np.asarray(la), np.asarray(lb))


@needs_compiled
@pytest.mark.parametrize("trial", range(10))
def test_component_bit_identical(trial):
    rng = np.random.default_rng(2000 + trial)
    mask = random_mask(rng)
    occupied = np.argwhere(mask)
    sr, sc = occupied[rng.integers(len(occupied))]
    ca = _gridcore.component_from_seed(mask, int(sr), int(sc))
    cb = pyfallback.component_from_seed(mask, int(sr), int(sc))
    assert np.array_equal(np.asarray(ca), np.asarray(cb))


@needs_compiled
@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_propagate_bit_identical(k):
    rng = np.random.default_rng(3000 + k)
    n = 37
    xs = np.linspace(-1.0, 1.0, n)
    w = xs[None, :] + 1j * xs[:, None]
    v = w**k + 0.05 * (rng.random((n, n)) - 0.5)
    valid = ((np.abs(w) > 0.2) & (np.abs(w) < 0.95)).astype(np.uint8)
    # make sure the seed cell is valid
    sr, sc = map(int, np.argwhere(valid)[0])
    roots, theta = _roots_table(v, k)
    pa, aa = _gridcore.propagate_kth_root(valid, theta, roots, k, sr, sc, 0)
    pb, ab = pyfallback.propagate_kth_root(valid, theta, roots, k, sr, sc, 0)
    assert np.array_equal(np.asarray(aa), np.asarray(ab))
    pa = np.asarray(pa)
    pb = np.asarray(pb)
    mask = np.asarray(aa).astype(bool)
    assert np.array_equal(pa[mask].view(np.float64), pb[mask].view(np.float64))
