import numpy as np
import pytest

from couplediff import (
    assemble_generator,
    build_grid,
    coupling_constants,
    make_kernel,
)


@pytest.fixture(scope="session")
def triangle_kernel():
    return make_kernel("triangle", 1.0, 1.0)


@pytest.fixture(scope="session")
def constants(triangle_kernel):
    return coupling_constants(triangle_kernel)


@pytest.fixture(scope="session")
def grid50():
    return build_grid(50, 50)


@pytest.fixture(scope="session")
def gen50(grid50, triangle_kernel, constants):
    return assemble_generator(grid50, triangle_kernel, constants)


@pytest.fixture(scope="session")
def grid100():
    return build_grid(100, 100)


@pytest.fixture(scope="session")
def gen100(grid100, triangle_kernel, constants):
    return assemble_generator(grid100, triangle_kernel, constants)


def weighted_norm(grid, values):
    return float(np.sqrt(np.sum(grid.weights * values * values)))
