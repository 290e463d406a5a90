import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evnsp.errors import NegativeDensity, NeumannIncompatible
from evnsp.grid import BoundarySpec, Grid
from evnsp.poisson import (PoissonProblem, operator_residual, poisson_residual,
                           solve_boltzmann, solve_boltzmann_linearized,
                           solve_linear, solve_linear_iterative, weighted_mean)

ALL_BCS = [
    BoundarySpec("dirichlet", "dirichlet"),
    BoundarySpec("neumann", "neumann"),
    BoundarySpec("dirichlet", "neumann"),
    BoundarySpec("neumann", "dirichlet"),
]


def _smooth_rhs(grid, bc):
    X, Y, Z = grid.meshgrid()
    f = np.sin(2 * np.pi * X) * np.cos(2 * np.pi * Y) * (Z**2 - Z + 0.1)
    if bc.pure_neumann:
        f = f - weighted_mean(grid, f)
    return f


@pytest.mark.parametrize("bc", ALL_BCS, ids=["dd", "nn", "dn", "nd"])
def test_direct_solver_residual(bc):
    grid = Grid(12, 12, 13)
    f = _smooth_rhs(grid, bc)
    psi = solve_linear(PoissonProblem(grid, bc, f=f))
    assert operator_residual(grid, bc, psi, f) <= 1e-11 * (1 + np.max(np.abs(f)))


@pytest.mark.parametrize("bc", ALL_BCS, ids=["dd", "nn", "dn", "nd"])
def test_direct_matches_krylov(bc):
    """The transform path and the sparse MINRES path discretize the same
    operator, so their solutions agree to solver tolerance."""
    grid = Grid(8, 8, 9)
    f = _smooth_rhs(grid, bc)
    prob = PoissonProblem(grid, bc, f=f)
    psi_a = solve_linear(prob)
    psi_b = solve_linear_iterative(prob)
    assert np.max(np.abs(psi_a - psi_b)) <= 1e-9


def test_dirichlet_walls_honoured():
    grid = Grid(8, 8, 9)
    bc = BoundarySpec("dirichlet", "dirichlet")
    psi = solve_linear(PoissonProblem(grid, bc, f=_smooth_rhs(grid, bc)))
    assert np.max(np.abs(psi[..., 0])) == 0.0
    assert np.max(np.abs(psi[..., -1])) == 0.0


def test_neumann_incompatible_mean_raises():
    grid = Grid(8, 8, 9)
    bc = BoundarySpec("neumann", "neumann")
    with pytest.raises(NeumannIncompatible):
        solve_linear(PoissonProblem(grid, bc, f=grid.scalar(1.0)))


def test_neumann_solution_has_zero_mean(grid3d, bc_neumann):
    f = _smooth_rhs(grid3d, bc_neumann)
    psi = solve_linear(PoissonProblem(grid3d, bc_neumann, f=f))
    assert abs(weighted_mean(grid3d, psi)) <= 1e-13


def test_maximum_principle():
    """Delta psi = f >= 0 with zero Dirichlet data forces psi <= 0."""
    grid = Grid(10, 10, 11)
    bc = BoundarySpec("dirichlet", "dirichlet")
    X, _, Z = grid.meshgrid()
    f = 1.0 + 0.5 * np.sin(2 * np.pi * X) ** 2 * Z
    psi = solve_linear(PoissonProblem(grid, bc, f=f))
    assert np.max(psi) <= 1e-12
    assert np.min(psi) < 0.0


@settings(max_examples=15, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3),
       seed=st.integers(0, 2**31 - 1))
def test_linearity(a, b, seed):
    grid = Grid(6, 6, 7)
    bc = BoundarySpec("dirichlet", "neumann")
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(grid.shape)
    g = rng.standard_normal(grid.shape)
    combo = solve_linear(PoissonProblem(grid, bc, f=a * f + b * g))
    parts = (a * solve_linear(PoissonProblem(grid, bc, f=f))
             + b * solve_linear(PoissonProblem(grid, bc, f=g)))
    np.testing.assert_allclose(combo, parts, atol=1e-11)


# ---------------------------------------------------------------------------
# Boltzmann coupling


def test_boltzmann_constant_root():
    """With constant density c and insulating walls the nonlinear problem
    has the exact constant solution psi = -ln(c)."""
    grid = Grid(6, 6, 7)
    bc = BoundarySpec("neumann", "neumann")
    for c in (0.5, 1.0, 2.0):
        psi = solve_boltzmann(PoissonProblem(grid, bc, mode="boltzmann",
                                             rho=grid.scalar(c)))
        np.testing.assert_allclose(psi, -np.log(c), atol=1e-11)


def test_boltzmann_rejects_nonpositive_density(grid2d):
    with pytest.raises(NegativeDensity):
        PoissonProblem(grid2d, BoundarySpec(), mode="boltzmann",
                       rho=grid2d.scalar(0.0))


def test_boltzmann_residual_at_tolerance(grid2d, bc_dirichlet):
    X, _, Z = grid2d.meshgrid()
    rho = 1.0 + 0.05 * np.sin(2 * np.pi * X) * np.sin(np.pi * Z)
    prob = PoissonProblem(grid2d, bc_dirichlet, mode="boltzmann", rho=rho)
    psi = solve_boltzmann(prob)
    assert poisson_residual(psi, prob) <= prob.newton_tol


def test_linearized_boltzmann_gap_is_quadratic_in_amplitude(grid2d, bc_dirichlet):
    """The Taylor-truncated comparison problem differs from the exact
    nonlinear solve at O(amplitude^2)."""
    X, _, Z = grid2d.meshgrid()
    mode = np.sin(2 * np.pi * X) * np.sin(np.pi * Z)
    gaps = []
    for amp in (1e-2, 2e-2):
        rho = 1.0 + amp * mode
        exact = solve_boltzmann(PoissonProblem(grid2d, bc_dirichlet,
                                               mode="boltzmann", rho=rho))
        lin = solve_boltzmann_linearized(
            PoissonProblem(grid2d, bc_dirichlet, mode="boltzmann", rho=rho))
        gaps.append(np.max(np.abs(exact - lin)))
    ratio = gaps[1] / gaps[0]
    assert 3.0 <= ratio <= 5.0  # doubling the amplitude quadruples the gap


def test_screened_solve_modal_shift():
    """solve_boltzmann_linearized solves (Delta - 1) psi = rho - 1; check
    against the assembled operator."""
    from evnsp.poisson import _assembly
    grid = Grid(8, 1, 9)
    bc = BoundarySpec("dirichlet", "dirichlet")
    X, _, Z = grid.meshgrid()
    rho = 1.0 + 0.02 * np.sin(2 * np.pi * X) * np.sin(np.pi * Z)
    psi = solve_boltzmann_linearized(
        PoissonProblem(grid, bc, mode="boltzmann", rho=rho))
    A, eq = _assembly(grid, bc)
    res = (A @ psi.ravel()).reshape(grid.shape) - psi - (rho - 1.0)
    assert np.max(np.abs(res[eq])) <= 1e-11
