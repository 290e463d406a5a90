"""Reduced deformation-vector formulation.

Evolves (u, phi) where phi is the deformation vector X(x,t) - x; density
and deformation gradient are reconstructed exactly from I + grad(phi), so
the algebraic constraints hold to round-off by construction.  The linear /
remainder split of the reformulated momentum equation is exposed purely as
a diagnostic (the remainder is computed by subtraction, never by Taylor
truncation).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import operators as ops
from .errors import NormalizationError, SingularTensor
from .grid import BoundarySpec, Grid
from .kernels import species_rates
from .model_full import FullState, PhysParams, solve_potential, zero_walls
from .poisson import PoissonProblem, solve_linear

GRAD_PHI_BOUND = 0.5


@dataclass
class ReducedState:
    grid: Grid
    u: np.ndarray
    phi: np.ndarray           # deformation vector, zero at the walls
    psi: np.ndarray | None = None

    @classmethod
    def equilibrium(cls, grid: Grid) -> "ReducedState":
        return cls(grid, grid.vector(), grid.vector(), grid.scalar())

    def copy(self) -> "ReducedState":
        return ReducedState(self.grid, self.u.copy(), self.phi.copy(),
                            None if self.psi is None else self.psi.copy())


def deformation_tensor(r: ReducedState) -> np.ndarray:
    """K with row i equal to grad(phi^i); checked against the pointwise
    invertibility bound on its Frobenius norm."""
    K = ops.vector_gradient(r.grid, r.phi)
    frob = np.sqrt(np.sum(K * K, axis=(0, 1)))
    worst = np.max(frob)
    if worst >= GRAD_PHI_BOUND:
        node = np.unravel_index(np.argmax(frob), frob.shape)
        raise SingularTensor(node, worst)
    return K


def reconstruct_full(r: ReducedState) -> FullState:
    """Exact map to the full variables: F = (I + K)^-1, rho = det(I + K)."""
    grid = r.grid
    A = deformation_tensor(r)
    for i in range(3):
        A[i, i] += 1.0
    F = ops.inv3(A)
    rho = ops.det3(A)
    return FullState(grid, rho, r.u.copy(), F,
                     None if r.psi is None else r.psi.copy())


def project_reduced(s: FullState, bc: BoundarySpec | None = None) -> ReducedState:
    """Recover phi from F by three scalar Poisson solves of
    Delta phi^i = d_j (F^-1 - I)^{ij}, Dirichlet-zero at both walls."""
    grid = s.grid
    K = ops.inv3(s.F)
    for i in range(3):
        K[i, i] -= 1.0
    src = ops.tensor_divergence(grid, K)
    dbc = BoundarySpec("dirichlet", "dirichlet")
    phi = np.stack([
        solve_linear(PoissonProblem(grid, dbc, f=src[i])) for i in range(3)
    ])
    return ReducedState(grid, s.u.copy(), phi,
                        None if s.psi is None else s.psi.copy())


def rhs_reduced(r: ReducedState, p: PhysParams, bc: BoundarySpec, mean_tol=1e-5):
    """(u_dot, phi_dot, psi); momentum is evaluated on the exact
    reconstruction, transport is phi_t = -u . grad(phi) - u."""
    grid = r.grid
    full = reconstruct_full(r)
    psi = solve_potential(grid, bc, full.rho - p.rho_bar, p, rho=full.rho,
                          mean_tol=mean_tol)
    _, u_dot, _ = species_rates(grid, full.rho, full.u, full.F, psi, p,
                                with_transport=False)
    zero_walls(u_dot)
    phi_dot = -ops.advect(grid, r.u, r.phi) - r.u
    r.psi = psi
    return u_dot, phi_dot, psi


def linear_split(r: ReducedState, p: PhysParams, bc: BoundarySpec):
    """Linear-operator / remainder split of the reformulated momentum and
    transport equations, valid only at the unit normalization.

    Returns (L1, L2, R1, R2).  R1 is the exact nonlinear remainder obtained
    by evaluating L1 with the computed u_t, so L1 == R1 identically; the
    diagnostic content is the size of R1 against the linear terms.
    """
    one = np.ones(1)
    if p.c2 != 1.0 or p.alpha != 1.0 or abs(float(p.pressure_prime(one)[0]) - 1.0) > 1e-12:
        raise NormalizationError("linear_split requires c^2 = P'(1) = alpha = 1")
    grid = r.grid
    u_dot, phi_dot, psi = rhs_reduced(r, p, bc)
    lin = reduced_linear_terms(r, p, psi)
    L1 = u_dot + lin
    R1 = L1.copy()
    L2 = phi_dot + r.u
    R2 = -ops.advect(grid, r.u, r.phi)
    return L1, L2, R1, R2


def reduced_linear_terms(r: ReducedState, p: PhysParams, psi: np.ndarray) -> np.ndarray:
    """The linear operator applied to (u, phi, psi), without the u_t part:
    -mu Lap u - (mu+lam) grad div u + Lap phi + grad div phi - grad psi + u."""
    grid = r.grid
    out = -p.mu * ops.laplacian(grid, r.u)
    out -= (p.mu + p.lam) * ops.gradient(grid, ops.divergence(grid, r.u))
    out += ops.laplacian(grid, r.phi)
    out += ops.gradient(grid, ops.divergence(grid, r.phi))
    out -= ops.gradient(grid, psi)
    out += r.u
    return out


def material_div_identity(r: ReducedState) -> float:
    """L-inf defect of div u = -D(div phi)/Dt - (grad u)^T : grad phi."""
    grid = r.grid
    grad_u = ops.vector_gradient(grid, r.u)
    K = ops.vector_gradient(grid, r.phi)
    div_u = grad_u[0, 0] + grad_u[1, 1] + grad_u[2, 2]
    div_phi = K[0, 0] + K[1, 1] + K[2, 2]
    phi_dot = -ops.advect(grid, r.u, r.phi) - r.u
    d_dt_div_phi = ops.divergence(grid, phi_dot) + ops.advect(grid, r.u, div_phi)
    cross = np.einsum("kixyz,ikxyz->xyz", grad_u, K)
    return float(np.max(np.abs(div_u + d_dt_div_phi + cross)))
