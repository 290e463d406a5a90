import numpy as np
import pytest

from evnsp import operators as ops
from evnsp.errors import DensityFloor
from evnsp.grid import BoundarySpec, Grid
from evnsp.kernels import species_rates
from evnsp.model_full import (BipolarState, FullState, PhysParams,
                              _momentum_rate, _transport_rates, check_density,
                              elastic_stress, rhs_bipolar, rhs_unipolar,
                              steady_positive_check,
                              stress_divergence_identity, zero_walls)
from evnsp.timestepper import well_prepared_init


# ---------------------------------------------------------------------------
# parameters


def test_params_validation():
    with pytest.raises(ValueError):
        PhysParams(mu=0.0)
    with pytest.raises(ValueError):
        PhysParams(mu=0.1, lam=-1.0)  # 3*lam + 2*mu < 0
    with pytest.raises(ValueError):
        PhysParams(alpha=-0.1)
    with pytest.raises(ValueError):
        PhysParams(pressure_law="gamma:1.0")
    with pytest.raises(ValueError):
        PhysParams(pressure_law="isothermal")
    with pytest.raises(ValueError):
        PhysParams(background="vacuum")
    with pytest.raises(ValueError):
        PhysParams(charge_sign="0")
    with pytest.warns(UserWarning):
        PhysParams(alpha=0.0)


def test_electrostatic_sign_convention():
    assert PhysParams(charge_sign="-").electrostatic_sign == 1.0
    assert PhysParams(charge_sign="+").electrostatic_sign == -1.0


@pytest.mark.parametrize("law", ["linear", "gamma:1.4", "gamma:2.0"])
def test_pressure_prime_finite_difference(law, rng):
    p = PhysParams(pressure_law=law)
    rho = 0.5 + rng.uniform(0.0, 1.5, size=32)
    h = 1e-6
    fd = (p.pressure(rho + h) - p.pressure(rho - h)) / (2 * h)
    np.testing.assert_allclose(p.pressure_prime(rho), fd, rtol=1e-8)


@pytest.mark.parametrize("law", ["linear", "gamma:1.4", "gamma:2.0"])
def test_free_energy_gibbs_duhem(law, rng):
    """rho * omega'(rho) - omega(rho) = P(rho) for every admissible law."""
    p = PhysParams(pressure_law=law)
    rho = 0.5 + rng.uniform(0.0, 1.5, size=32)
    h = 1e-6
    omega_prime = (p.free_energy(rho + h) - p.free_energy(rho - h)) / (2 * h)
    np.testing.assert_allclose(rho * omega_prime - p.free_energy(rho),
                               p.pressure(rho), rtol=1e-7)


# ---------------------------------------------------------------------------
# equilibrium and floors


def test_equilibrium_rates_vanish(grid3d):
    bc = BoundarySpec("dirichlet", "dirichlet")
    s = FullState.equilibrium(grid3d)
    rho_dot, u_dot, F_dot, psi = rhs_unipolar(s, PhysParams(), bc)
    assert np.max(np.abs(rho_dot)) == 0.0
    assert np.max(np.abs(u_dot)) == 0.0
    assert np.max(np.abs(F_dot)) == 0.0
    assert np.max(np.abs(psi)) <= 1e-13


def test_equilibrium_rates_vanish_boltzmann(grid2d):
    bc = BoundarySpec("dirichlet", "dirichlet")
    s = FullState.equilibrium(grid2d)
    p = PhysParams(background="boltzmann")
    rho_dot, u_dot, F_dot, psi = rhs_unipolar(s, p, bc)
    assert np.max(np.abs(psi)) <= 1e-11
    assert np.max(np.abs(u_dot)) <= 1e-10
    assert np.max(np.abs(rho_dot)) == 0.0


def test_equilibrium_rates_vanish_bipolar(grid3d):
    bc = BoundarySpec("dirichlet", "dirichlet")
    s = BipolarState.equilibrium(grid3d)
    (rm, um, Fm), (rp, up, Fp), psi = rhs_bipolar(
        s, PhysParams(charge_sign="-"), PhysParams(charge_sign="+"), bc)
    for arr in (rm, um, Fm, rp, up, Fp, psi):
        assert np.max(np.abs(arr)) == 0.0


def test_bipolar_sign_mismatch_rejected(grid3d):
    bc = BoundarySpec("dirichlet", "dirichlet")
    s = BipolarState.equilibrium(grid3d)
    with pytest.raises(ValueError):
        rhs_bipolar(s, PhysParams(charge_sign="+"), PhysParams(charge_sign="+"), bc)


def test_density_floor_reports_location(grid3d):
    rho = grid3d.scalar(1.0)
    rho[3, 1, 4] = 0.05
    with pytest.raises(DensityFloor) as ei:
        check_density(rho)
    assert ei.value.node == (3, 1, 4)
    assert ei.value.rho == pytest.approx(0.05)


def test_rhs_checks_density(grid3d):
    bc = BoundarySpec("dirichlet", "dirichlet")
    s = FullState.equilibrium(grid3d)
    s.rho[0, 0, 3] = 0.01
    with pytest.raises(DensityFloor):
        rhs_unipolar(s, PhysParams(), bc)


def test_zero_walls():
    v = np.ones((3, 4, 4, 5))
    zero_walls(v)
    assert np.max(np.abs(v[..., 0])) == 0.0
    assert np.max(np.abs(v[..., -1])) == 0.0
    assert np.min(v[..., 1:-1]) == 1.0


# ---------------------------------------------------------------------------
# deformation transport patch test


def test_deformation_transport_patch():
    """With u = A x linear and F constant, the transport rate is exactly
    A F at nodes whose stencils avoid the periodic wrap."""
    grid = Grid(8, 8, 9)
    A = np.array([[0.1, -0.2, 0.3], [0.0, 0.25, -0.1], [0.2, 0.1, -0.15]])
    X, Y, Z = grid.meshgrid()
    coords = np.stack([X, Y, Z])
    u = np.einsum("ij,jxyz->ixyz", A, coords)
    F0 = np.array([[1.0, 0.2, 0.0], [0.0, 0.9, 0.1], [0.1, 0.0, 1.1]])
    F = np.broadcast_to(F0[..., None, None, None], (3, 3) + grid.shape).copy()
    rho = grid.scalar(1.0)
    psi = grid.scalar()
    p = PhysParams(alpha=1.0)
    _, _, F_dot = species_rates(grid, rho, u, F, psi, p)
    want = (A @ F0)[..., None, None, None]
    inner = np.s_[..., 1:-1, 1:-1, 1:-1]
    np.testing.assert_allclose(F_dot[inner],
                               np.broadcast_to(want, F_dot.shape)[inner],
                               atol=1e-12)


# ---------------------------------------------------------------------------
# fused kernel pinned to the operator-composition reference


@pytest.mark.parametrize("shape", [(12, 12, 13), (16, 1, 17)],
                         ids=["3d", "2d"])
@pytest.mark.parametrize("law,sign", [("linear", "-"), ("gamma:1.4", "+")])
def test_kernel_matches_reference(shape, law, sign):
    grid = Grid(*shape)
    p = PhysParams(mu=0.07, lam=0.03, c2=1.3, alpha=0.8,
                   pressure_law=law, charge_sign=sign)
    full, _ = well_prepared_init(grid, 2e-2, seed=11)
    X, _, Z = grid.meshgrid()
    psi = 0.1 * np.sin(2 * np.pi * X) * np.sin(np.pi * Z)

    u_ref, grad_u = _momentum_rate(grid, full.rho, full.u, full.F, psi, p)
    rho_ref, F_ref = _transport_rates(grid, full.rho, full.u, full.F, grad_u)
    rho_dot, u_dot, F_dot = species_rates(grid, full.rho, full.u, full.F, psi, p)

    scale = max(np.max(np.abs(u_ref)), 1.0)
    assert np.max(np.abs(u_dot - u_ref)) <= 1e-13 * scale
    assert np.max(np.abs(rho_dot - rho_ref)) <= 1e-13
    assert np.max(np.abs(F_dot - F_ref)) <= 1e-13


def test_kernel_without_transport(grid2d):
    p = PhysParams()
    full, _ = well_prepared_init(grid2d, 1e-2, seed=2)
    psi = grid2d.scalar()
    rho_dot, u_dot, F_dot = species_rates(grid2d, full.rho, full.u, full.F,
                                          psi, p, with_transport=False)
    u_ref, _ = _momentum_rate(grid2d, full.rho, full.u, full.F, psi, p)
    assert np.max(np.abs(u_dot - u_ref)) <= 1e-13
    assert np.max(np.abs(rho_dot)) == 0.0
    assert np.max(np.abs(F_dot)) == 0.0


# ---------------------------------------------------------------------------
# stress identities


def test_stress_divergence_identity_consistent_vs_random():
    """Both Piola routes agree at O(h^2) on constraint-satisfying fields
    and disagree at O(1) on random ones."""
    mismatches = []
    for n in (12, 24):
        grid = Grid(n, 1, n + 1)
        full, _ = well_prepared_init(grid, 1e-2, seed=4)
        _, _, m = stress_divergence_identity(grid, full.rho, full.F)
        mismatches.append(m)
    assert mismatches[0] / mismatches[1] >= 3.0  # ~4x per refinement

    grid = Grid(12, 1, 13)
    rng = np.random.default_rng(0)
    rho = 1.0 + 0.1 * rng.standard_normal(grid.shape)
    F = grid.identity_tensor() + 0.1 * rng.standard_normal((3, 3) + grid.shape)
    _, _, m_rand = stress_divergence_identity(grid, rho, F)
    assert m_rand > 10.0 * mismatches[0]


def test_elastic_stress_is_symmetric(grid2d, rng):
    rho = 1.0 + 0.1 * rng.random(grid2d.shape)
    F = grid2d.identity_tensor() + 0.05 * rng.standard_normal((3, 3) + grid2d.shape)
    S = elastic_stress(rho, F, 1.3)
    np.testing.assert_allclose(S, ops.transpose3(S), atol=1e-14)


def test_steady_positive_check_refines():
    """The force balance of the Boltzmann profile rho = exp(-psi) vanishes
    at second order."""
    vals = []
    for n in (16, 32):
        grid = Grid(n, 1, n + 1)
        X, _, Z = grid.meshgrid()
        psi = 0.1 * np.sin(2 * np.pi * X) * np.sin(np.pi * Z)
        vals.append(steady_positive_check(grid, np.exp(-psi), psi))
    assert vals[0] / vals[1] >= 3.0

    grid = Grid(16, 1, 17)
    X, _, Z = grid.meshgrid()
    psi = 0.1 * np.sin(2 * np.pi * X) * np.sin(np.pi * Z)
    assert steady_positive_check(grid, np.exp(+psi), psi) > 10.0 * vals[0]
