"""Electrostatic subproblem on the slab.

Linear case: Delta psi = f with periodic tangential directions and
Dirichlet-zero / Neumann-zero walls (mixed allowed).  Nonlinear Boltzmann
case: Delta psi = rho - exp(-psi), solved by Newton iteration where each
step is a screened linear solve.

The direct path does a real tangential FFT per (kx, ky) mode followed by a
tridiagonal solve in z; a sparse symmetric Krylov fallback cross-validates
it and carries the spatially varying screened problems of the Newton loop.
Both paths discretize the identical stencil, so they agree to solver
tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NegativeDensity, NeumannIncompatible, NonConvergence
from .grid import DIRICHLET, NEUMANN, BoundarySpec, Grid


@dataclass
class PoissonProblem:
    grid: Grid
    bc: BoundarySpec
    f: np.ndarray | None = None          # right-hand side (linear mode)
    mode: str = "linear"                  # "linear" | "boltzmann"
    rho: np.ndarray | None = None         # density (boltzmann mode)
    newton_tol: float = 1e-10
    newton_max_iter: int = 25
    mean_tol: float = 1e-8

    def __post_init__(self):
        if self.mode not in ("linear", "boltzmann"):
            raise ValueError(f"unknown Poisson mode {self.mode!r}")
        if self.mode == "linear" and self.f is None:
            raise ValueError("linear mode needs a right-hand side")
        if self.mode == "boltzmann":
            if self.rho is None:
                raise ValueError("boltzmann mode needs a density")
            if np.min(self.rho) <= 0.0:
                raise NegativeDensity("rho must be positive pointwise")


def weighted_mean(grid: Grid, f: np.ndarray) -> float:
    w = grid.cell_weights()
    return float(np.sum(np.sum(f, axis=(0, 1)) * w) / grid.volume)


# ---------------------------------------------------------------------------
# direct transform solver


def _tangential_eigenvalues(grid: Grid) -> np.ndarray:
    """Positive eigenvalues of minus the tangential second-difference
    operator, on the rfft2 mode layout, shape (nx, ny//2 + 1)."""
    kx = np.arange(grid.nx)
    ky = np.arange(grid.ny // 2 + 1)
    lx = (2.0 - 2.0 * np.cos(2.0 * np.pi * kx / grid.nx)) / grid.hx**2
    ly = (2.0 - 2.0 * np.cos(2.0 * np.pi * ky / grid.ny)) / grid.hy**2
    if grid.nx == 1:
        lx = np.zeros(1)
    if grid.ny == 1:
        ly = np.zeros(1)
    return lx[:, None] + ly[None, :]


@lru_cache(maxsize=8)
def _modal_inverse(grid: Grid, bc: BoundarySpec, shift: float):
    """Dense per-mode inverses of the z tridiagonal systems, cached per
    (grid, bc, shift).  Returns (inv, lo, hi, singular) where inv has shape
    (nx, ny//2 + 1, n, n).

    Pure-Neumann with shift == 0 is singular in the zero tangential mode;
    that block is replaced by the pinned system (psi[0] = 0), whose result
    is re-normalized by the caller.
    """
    nz, hz = grid.nz, grid.hz
    lam = _tangential_eigenvalues(grid)
    lo = 1 if bc.psi_lo == DIRICHLET else 0
    hi = nz - 2 if bc.psi_hi == DIRICHLET else nz - 1
    n = hi - lo + 1
    inv_h2 = 1.0 / hz**2

    sub = np.full(n, inv_h2)
    sup = np.full(n, inv_h2)
    if bc.psi_lo == NEUMANN:
        sup[0] = 2.0 * inv_h2  # mirror ghost at the lower wall
    if bc.psi_hi == NEUMANN:
        sub[-1] = 2.0 * inv_h2

    M = np.zeros(lam.shape + (n, n))
    idx = np.arange(n)
    M[..., idx, idx] = -2.0 * inv_h2 - shift - lam[..., None]
    M[..., idx[1:], idx[:-1]] = sub[1:]
    M[..., idx[:-1], idx[1:]] = sup[:-1]

    singular = bc.pure_neumann and shift == 0.0
    if singular:
        M[0, 0, 0, :] = 0.0
        M[0, 0, 0, 0] = 1.0  # pin the first value of the zero mode
    return np.linalg.inv(M), lo, hi, singular


def solve_modal(
    grid: Grid,
    bc: BoundarySpec,
    f: np.ndarray,
    shift: float = 0.0,
    mean_tol: float = 1e-8,
) -> np.ndarray:
    """Solve Delta psi - shift * psi = f by tangential FFT + per-mode solve
    in z (cached dense inverses).

    Pure-Neumann walls with shift == 0 require |volume mean of f| <= mean_tol;
    the solution is then normalized to zero discrete (trapezoidal) mean.
    """
    inv, lo, hi, singular = _modal_inverse(grid, bc, float(shift))
    if singular:
        m = weighted_mean(grid, f)
        if abs(m) > mean_tol * (1.0 + float(np.max(np.abs(f)))):
            raise NeumannIncompatible(m)
        f = f - m

    fhat = np.fft.rfft2(f, axes=(0, 1))
    rhs = fhat[..., lo : hi + 1].copy()

    if singular:
        # project the zero tangential mode onto the compatible range; the
        # pinned row then carries psi[0] = 0
        wz = np.full(grid.nz, 1.0)
        wz[0] = wz[-1] = 0.5
        rhs[0, 0] -= np.sum(wz * rhs[0, 0]) / np.sum(wz)
        rhs[0, 0, 0] = 0.0

    psihat = (inv @ rhs[..., None])[..., 0]

    out = np.zeros((grid.nx, grid.ny // 2 + 1, grid.nz), dtype=complex)
    out[..., lo : hi + 1] = psihat
    psi = np.fft.irfft2(out, s=(grid.nx, grid.ny), axes=(0, 1))

    if singular:
        psi -= weighted_mean(grid, psi)
    return psi


# ---------------------------------------------------------------------------
# sparse assembly (iterative fallback, residuals, Newton Jacobians)


def _roll_matrix(n: int) -> sp.csr_matrix:
    rows = np.arange(n)
    cols = (rows + 1) % n
    return sp.csr_matrix((np.ones(n), (rows, cols)), shape=(n, n))


@lru_cache(maxsize=16)
def _assembly(grid: Grid, bc: BoundarySpec):
    """Full-grid operator: interior and Neumann-wall rows carry the Poisson
    stencil, Dirichlet-wall rows are identity.  Returns (A, eq_mask)."""
    nx, ny, nz = grid.nx, grid.ny, grid.nz
    Ix, Iy, Iz = (sp.identity(n, format="csr") for n in (nx, ny, nz))

    Px = _roll_matrix(nx)
    Py = _roll_matrix(ny)
    Lxp = (Px + Px.T - 2.0 * Ix) / grid.hx**2 if nx > 1 else sp.csr_matrix((nx, nx))
    Lyp = (Py + Py.T - 2.0 * Iy) / grid.hy**2 if ny > 1 else sp.csr_matrix((ny, ny))

    inv_h2 = 1.0 / grid.hz**2
    Lz = sp.lil_matrix((nz, nz))
    for j in range(1, nz - 1):
        Lz[j, j - 1] = inv_h2
        Lz[j, j] = -2.0 * inv_h2
        Lz[j, j + 1] = inv_h2
    eq_z = np.ones(nz, dtype=bool)
    if bc.psi_lo == DIRICHLET:
        Lz[0, 0] = 1.0
        eq_z[0] = False
    else:
        Lz[0, 0] = -2.0 * inv_h2
        Lz[0, 1] = 2.0 * inv_h2
    if bc.psi_hi == DIRICHLET:
        Lz[-1, -1] = 1.0
        eq_z[-1] = False
    else:
        Lz[-1, -1] = -2.0 * inv_h2
        Lz[-1, -2] = 2.0 * inv_h2
    Lz = Lz.tocsr()
    Mz = sp.diags(eq_z.astype(float))

    A = (
        sp.kron(sp.kron(Ix, Iy), Lz)
        + sp.kron(sp.kron(Lxp, Iy), Mz)
        + sp.kron(sp.kron(Ix, Lyp), Mz)
    ).tocsr()
    eq_mask = np.broadcast_to(eq_z, (nx, ny, nz)).copy()
    return A, eq_mask


def operator_residual(grid: Grid, bc: BoundarySpec, psi: np.ndarray, f: np.ndarray) -> float:
    """Max-norm residual of the discrete equations at the nodes where the
    Poisson stencil is imposed (Dirichlet wall rows excluded)."""
    A, eq = _assembly(grid, bc)
    r = (A @ psi.ravel()).reshape(grid.shape) - np.where(eq, f, 0.0)
    return float(np.max(np.abs(r[eq]))) if eq.any() else 0.0


def solve_linear(p: PoissonProblem) -> np.ndarray:
    """Direct transform solve of Delta psi = f."""
    return solve_modal(p.grid, p.bc, p.f, shift=0.0, mean_tol=p.mean_tol)


def solve_linear_iterative(p: PoissonProblem, rtol: float = 1e-12, maxiter: int = 20000) -> np.ndarray:
    """Symmetric Krylov (MINRES) fallback on the assembled operator."""
    grid, bc = p.grid, p.bc
    f = p.f
    singular = bc.pure_neumann
    if singular:
        m = weighted_mean(grid, f)
        if abs(m) > p.mean_tol * (1.0 + float(np.max(np.abs(f)))):
            raise NeumannIncompatible(m)
        f = f - m

    A, eq = _assembly(grid, bc)
    idx = np.flatnonzero(eq.ravel())
    Ar = A[idx][:, idx]
    b = f.ravel()[idx]
    # half-weight the Neumann wall rows so the restricted operator is symmetric
    wall_weight = np.ones(grid.nz)
    wall_weight[0] = 0.5 if bc.psi_lo == NEUMANN else 1.0
    wall_weight[-1] = 0.5 if bc.psi_hi == NEUMANN else 1.0
    s = np.broadcast_to(wall_weight, grid.shape).ravel()[idx]
    S = sp.diags(s)
    M = (S @ Ar).tocsr()
    rhs = s * b
    if singular:
        rhs = rhs - s * (np.sum(rhs) / np.sum(s))
    try:
        x, info = spla.minres(M, rhs, rtol=rtol, maxiter=maxiter)
    except TypeError:  # older scipy spells the tolerance 'tol'
        x, info = spla.minres(M, rhs, tol=rtol, maxiter=maxiter)
    if info != 0:
        res = float(np.max(np.abs(M @ x - rhs)))
        raise NonConvergence(maxiter, res)
    psi = np.zeros(grid.shape).ravel()
    psi[idx] = x
    psi = psi.reshape(grid.shape)
    if singular:
        psi -= weighted_mean(grid, psi)
    return psi


def solve_boltzmann(p: PoissonProblem, psi0: np.ndarray | None = None) -> np.ndarray:
    """Newton iteration on G(psi) = Delta psi - rho + exp(-psi).

    Each step solves the screened problem (Delta - diag(exp(-psi_k))) delta
    = -G(psi_k) with a sparse direct factorization; terminates when
    ||G||_inf <= newton_tol.
    """
    grid, bc, rho = p.grid, p.bc, p.rho
    A, eq = _assembly(grid, bc)
    eqf = eq.ravel()
    psi = np.zeros(grid.shape) if psi0 is None else psi0.copy()
    for _ in range(p.newton_max_iter):
        w = np.exp(-psi)
        G = (A @ psi.ravel()) - np.where(eqf, (rho - w).ravel(), 0.0)
        res = float(np.max(np.abs(G)))
        if res <= p.newton_tol:
            return psi
        J = A - sp.diags(np.where(eqf, w.ravel(), 0.0))
        delta = spla.spsolve(J.tocsc(), -G)
        psi = psi + delta.reshape(grid.shape)
    w = np.exp(-psi)
    G = (A @ psi.ravel()) - np.where(eqf, (rho - w).ravel(), 0.0)
    res = float(np.max(np.abs(G)))
    if res <= p.newton_tol:
        return psi
    raise NonConvergence(p.newton_max_iter, res)


def solve_boltzmann_linearized(p: PoissonProblem) -> np.ndarray:
    """Taylor-truncated comparison problem Delta psi - psi = rho - 1.

    Diagnostic only; the dynamics always use the exact nonlinear form.
    """
    return solve_modal(p.grid, p.bc, p.rho - 1.0, shift=1.0, mean_tol=p.mean_tol)


def poisson_residual(psi: np.ndarray, p: PoissonProblem) -> float:
    """||Delta_h psi - (rho - rho_plus(psi))||_inf at the stencil nodes."""
    if p.mode == "linear":
        f = p.f
        if p.bc.pure_neumann:
            f = f - weighted_mean(p.grid, f)
    else:
        f = p.rho - np.exp(-psi)
    return operator_residual(p.grid, p.bc, psi, f)
