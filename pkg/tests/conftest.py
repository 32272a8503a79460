import numpy as np
import pytest

from morleych.element import field_from_derivatives
from morleych.mesh import build_crisscross_mesh


def poly_field(mesh, f, fx, fy):
    """Morley DOFs of a polynomial given value and gradient callables."""
    return field_from_derivatives(mesh, f, lambda x, y: (fx(x, y), fy(x, y)))


def const_field(mesh, c=1.0):
    return poly_field(mesh, lambda x, y: c + 0 * x, lambda x, y: 0 * x, lambda x, y: 0 * x)


def x_field(mesh):
    return poly_field(mesh, lambda x, y: x, lambda x, y: 1 + 0 * x, lambda x, y: 0 * x)


def y_field(mesh):
    return poly_field(mesh, lambda x, y: y, lambda x, y: 0 * x, lambda x, y: 1 + 0 * x)


@pytest.fixture(scope="session")
def mesh1():
    return build_crisscross_mesh(1)


@pytest.fixture(scope="session")
def mesh2():
    return build_crisscross_mesh(2)


@pytest.fixture(scope="session")
def mesh4():
    return build_crisscross_mesh(4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
