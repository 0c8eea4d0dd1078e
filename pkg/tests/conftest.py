import numpy as np
import pytest

from planarcover.maps import get_map
from planarcover.normal import build_normal_domain
from planarcover.region import Grid


@pytest.fixture(scope="session")
def pow2():
    return get_map("pow2")


@pytest.fixture(scope="session")
def pow3():
    return get_map("pow3")


@pytest.fixture(scope="session")
def quad():
    return get_map("quad")


@pytest.fixture(scope="session")
def winding2():
    return get_map("winding2")


@pytest.fixture(scope="session")
def pow2_nd_fine(pow2):
    """U(0, square map, 0.25) on a 0.002 grid, reused across modules."""
    grid = Grid.square(0.0, 0.55, 0.002)
    return build_normal_domain(pow2, 0.0, 0.25, grid)


@pytest.fixture(scope="session")
def pow2_nd_coarse(pow2):
    grid = Grid.square(0.0, 0.6, 0.004)
    return build_normal_domain(pow2, 0.0, 0.25, grid)


@pytest.fixture(scope="session")
def pow3_nd(pow3):
    grid = Grid.square(0.0, 0.66, 0.003)
    return build_normal_domain(pow3, 0.0, 0.2, grid)


def dense_sup_distance(poly, reference, n=1500):
    """Max distance from a polyline to a parametric reference curve."""
    t = np.linspace(0.0, 1.0, n)
    return float(np.abs(poly.eval(t) - reference(t)).max())
