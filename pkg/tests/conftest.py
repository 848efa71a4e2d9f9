import math

import pytest

import torsionlab as tl


# The heavy grid solves are shared across test modules.  Everything here is
# deterministic, so session scope is safe.

@pytest.fixture(scope="session")
def disk_field():
    return tl.grid_torsion(tl.Ball(1.0), 256)


@pytest.fixture(scope="session")
def ellipse1_field():
    return tl.grid_torsion(tl.Ellipse.from_flattening(1.0), 256)


@pytest.fixture(scope="session")
def ellipse05_field():
    return tl.grid_torsion(tl.Ellipse.from_flattening(0.5), 256)


@pytest.fixture(scope="session")
def unit_square():
    return tl.Box([(-0.5, -0.5), (0.5, 0.5)])
