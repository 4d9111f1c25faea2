import numpy as np
import pytest

from weilfield import lattice as lt
from weilfield.weil import WeilAlgebra


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def real_algebra():
    return WeilAlgebra.real()


@pytest.fixture
def dual():
    return WeilAlgebra.dual()


@pytest.fixture
def double_dual():
    return WeilAlgebra.dual().tensor(WeilAlgebra.dual())


@pytest.fixture
def jet3():
    return WeilAlgebra.jet(3)


@pytest.fixture
def circle():
    n = 64
    extent = 2 * np.pi
    return lt.LatticeSpacetime("circle", n, extent / n, 0.5 * extent / n, 64)


@pytest.fixture
def line():
    return lt.LatticeSpacetime("line", 96, 0.1, 0.05, 48, guard=2)
