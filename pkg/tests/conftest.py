import numpy as np
import pytest

from sparch import SpatialDomain, build_queen_lag, build_oriented, build_rook, row_standardize


@pytest.fixture(scope="session")
def rook5():
    return build_rook(5)


@pytest.fixture(scope="session")
def oriented8():
    """Row-standardized queen-lag-1 weights oriented away from the lattice
    center: strictly triangularizable, so the recursive solver applies."""
    d = 8
    domain = SpatialDomain.lattice(d, metric="l2")
    w = build_oriented(build_queen_lag(d, 1), domain, domain.center())
    return row_standardize(w)


@pytest.fixture
def rng():
    return np.random.default_rng(20240814)
