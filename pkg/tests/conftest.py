import numpy as np
import pytest

from evnsp.grid import BoundarySpec, Grid


@pytest.fixture
def grid3d():
    return Grid(8, 8, 9)


@pytest.fixture
def grid2d():
    return Grid(12, 1, 13)


@pytest.fixture
def bc_dirichlet():
    return BoundarySpec("dirichlet", "dirichlet")


@pytest.fixture
def bc_neumann():
    return BoundarySpec("neumann", "neumann")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def broken_wall_stencil(monkeypatch):
    """Degrade the one-sided wall stencils to first order.

    Negative control: refinement studies run under this fixture must lose
    their second-order slopes, proving the studies can detect a broken
    discretization.
    """
    from evnsp import operators as ops

    monkeypatch.setattr(ops, "D1_WALL", np.array([-1.0, 1.0, 0.0]))
    monkeypatch.setattr(ops, "D2_WALL", np.array([1.0, -2.0, 1.0, 0.0]))
