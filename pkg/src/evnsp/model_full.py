"""Right-hand sides for the full formulations.

Unipolar: mass transport, velocity-form momentum with pressure, viscosity,
Hookean elastic stress, electrostatic force and friction damping, and the
deformation-gradient transport equation, closed by the Poisson coupling
(constant or Boltzmann background).  Bipolar: two such species with
opposite electrostatic signs sharing one potential.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from .errors import DensityFloor
from .grid import BoundarySpec, Grid
from .kernels import species_rates
from .poisson import PoissonProblem, solve_boltzmann, solve_linear

RHO_FLOOR = 0.1

CONSTANT = "constant"
BOLTZMANN = "boltzmann"


@dataclass(frozen=True)
class PhysParams:
    mu: float = 0.1
    lam: float = 0.0
    c2: float = 1.0
    alpha: float = 1.0
    pressure_law: str = "linear"       # "linear" | "gamma:<g>"
    background: str = CONSTANT          # "constant" | "boltzmann"
    rho_bar: float = 1.0
    charge_sign: str = "-"

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        if 3.0 * self.lam + 2.0 * self.mu < 0:
            raise ValueError("3*lambda + 2*mu must be nonnegative")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.alpha == 0:
            warnings.warn("alpha = 0: damping disabled, outside the modeled regime")
        if self.background not in (CONSTANT, BOLTZMANN):
            raise ValueError(f"unknown background {self.background!r}")
        if self.charge_sign not in ("-", "+"):
            raise ValueError("charge_sign must be '-' or '+'")
        self._gamma()  # validate the law string eagerly

    def _gamma(self) -> float | None:
        if self.pressure_law == "linear":
            return None
        if self.pressure_law.startswith("gamma:"):
            g = float(self.pressure_law.split(":", 1)[1])
            if g <= 1.0:
                raise ValueError("gamma-law exponent must exceed 1")
            return g
        raise ValueError(f"unknown pressure law {self.pressure_law!r}")

    def pressure(self, rho: np.ndarray) -> np.ndarray:
        g = self._gamma()
        return rho.copy() if g is None else rho**g / g

    def pressure_prime(self, rho: np.ndarray) -> np.ndarray:
        g = self._gamma()
        return np.ones_like(rho) if g is None else rho ** (g - 1.0)

    def free_energy(self, rho: np.ndarray) -> np.ndarray:
        """Helmholtz density omega with rho*omega' - omega = P."""
        g = self._gamma()
        if g is None:
            return rho * np.log(rho)
        return rho**g / (g * (g - 1.0))

    @property
    def electrostatic_sign(self) -> float:
        # Eq-form convention: the negative fluid carries +rho*grad(psi)
        return 1.0 if self.charge_sign == "-" else -1.0


@dataclass
class FullState:
    grid: Grid
    rho: np.ndarray
    u: np.ndarray
    F: np.ndarray
    psi: np.ndarray | None = None

    @classmethod
    def equilibrium(cls, grid: Grid) -> "FullState":
        return cls(grid, grid.scalar(1.0), grid.vector(), grid.identity_tensor(),
                   grid.scalar())

    def copy(self) -> "FullState":
        return FullState(self.grid, self.rho.copy(), self.u.copy(), self.F.copy(),
                         None if self.psi is None else self.psi.copy())


@dataclass
class BipolarState:
    minus: FullState
    plus: FullState
    psi: np.ndarray | None = None

    @property
    def grid(self) -> Grid:
        return self.minus.grid

    @classmethod
    def equilibrium(cls, grid: Grid) -> "BipolarState":
        return cls(FullState.equilibrium(grid), FullState.equilibrium(grid),
                   grid.scalar())

    def copy(self) -> "BipolarState":
        return BipolarState(self.minus.copy(), self.plus.copy(),
                            None if self.psi is None else self.psi.copy())


def check_density(rho: np.ndarray, floor: float = RHO_FLOOR):
    m = np.min(rho)
    if m < floor:
        node = np.unravel_index(np.argmin(rho), rho.shape)
        raise DensityFloor(node, m)


def elastic_stress(rho: np.ndarray, F: np.ndarray, c2: float) -> np.ndarray:
    """Hookean stress c^2 * rho * F F^T, pointwise."""
    return c2 * rho * ops.matmul3(F, ops.transpose3(F))


def stress_divergence_identity(grid: Grid, rho: np.ndarray, F: np.ndarray):
    """Both routes of the Piola decomposition of div(rho F F^T).

    a is the direct tensor divergence, b the pointwise contraction
    rho * F^{jk} d_j F^{ik}; their gap is O(h^2) when div(rho F^T) = 0
    holds analytically, O(1) otherwise.
    """
    a = ops.tensor_divergence(grid, rho * ops.matmul3(F, ops.transpose3(F)))
    gradF = ops.gradient(grid, F)  # gradF[j, i, k] = d_j F^{ik}
    b = rho * np.einsum("jkxyz,jikxyz->ixyz", F, gradF)
    mismatch = float(np.max(np.abs(a - b)))
    return a, b, mismatch


def _momentum_rate(grid, rho, u, F, psi, p: PhysParams, grad_u=None):
    """Reference du/dt of the velocity-form momentum equation, composed
    from the whole-field operators (walls not yet zeroed).  The dynamics
    use the fused kernel path; tests pin the two together."""
    if grad_u is None:
        grad_u = ops.vector_gradient(grid, u)
    conv = np.einsum("ikxyz,kxyz->ixyz", grad_u, u)
    div_u = grad_u[0, 0] + grad_u[1, 1] + grad_u[2, 2]

    force = -ops.gradient(grid, p.pressure(rho))
    force += p.mu * ops.laplacian(grid, u)
    force += (p.mu + p.lam) * ops.gradient(grid, div_u)
    force += ops.tensor_divergence(grid, elastic_stress(rho, F, p.c2))
    force += p.electrostatic_sign * rho * ops.gradient(grid, psi)
    force -= p.alpha * rho * u
    return -conv + force / rho, grad_u


def _transport_rates(grid, rho, u, F, grad_u):
    """Reference mass / deformation-gradient transport (see _momentum_rate)."""
    rho_dot = -ops.divergence(grid, rho * u)
    F_dot = -ops.advect(grid, u, F) + ops.matmul3(grad_u, F)
    return rho_dot, F_dot


def zero_walls(v: np.ndarray) -> np.ndarray:
    v[..., 0] = 0.0
    v[..., -1] = 0.0
    return v


def solve_potential(grid, bc, source, p: PhysParams, rho=None, mean_tol=1e-5):
    if p.background == BOLTZMANN:
        prob = PoissonProblem(grid, bc, mode="boltzmann", rho=rho)
        return solve_boltzmann(prob)
    return solve_linear(PoissonProblem(grid, bc, f=source, mean_tol=mean_tol))


def rhs_unipolar(s: FullState, p: PhysParams, bc: BoundarySpec, mean_tol=1e-5):
    """Rates (rho_dot, u_dot, F_dot) and refreshed potential psi."""
    grid = s.grid
    check_density(s.rho)
    psi = solve_potential(grid, bc, s.rho - p.rho_bar, p, rho=s.rho,
                          mean_tol=mean_tol)
    rho_dot, u_dot, F_dot = species_rates(grid, s.rho, s.u, s.F, psi, p)
    zero_walls(u_dot)
    s.psi = psi
    return rho_dot, u_dot, F_dot, psi


def rhs_bipolar(s: BipolarState, p_minus: PhysParams, p_plus: PhysParams,
                bc: BoundarySpec, mean_tol=1e-5):
    """Per-species rates and the shared potential of the two-fluid system."""
    grid = s.grid
    check_density(s.minus.rho)
    check_density(s.plus.rho)
    psi = solve_linear(PoissonProblem(grid, bc, f=s.minus.rho - s.plus.rho,
                                      mean_tol=mean_tol))
    rates = []
    for sp, p, sign in ((s.minus, p_minus, 1.0), (s.plus, p_plus, -1.0)):
        if p.electrostatic_sign != sign:
            raise ValueError("species params must carry the matching charge sign")
        rho_dot, u_dot, F_dot = species_rates(grid, sp.rho, sp.u, sp.F, psi, p)
        zero_walls(u_dot)
        sp.psi = psi
        rates.append((rho_dot, u_dot, F_dot))
    s.psi = psi
    return rates[0], rates[1], psi


def steady_positive_check(grid: Grid, rho_plus: np.ndarray, psi: np.ndarray) -> float:
    """||grad p_+(rho_+) + rho_+ grad psi||_inf for p_+(rho) = rho.

    Vanishes (to O(h^2)) exactly when rho_+ is the Boltzmann profile
    C * exp(-psi)."""
    r = ops.gradient(grid, rho_plus) + rho_plus * ops.gradient(grid, psi)
    return float(np.max(np.abs(r)))
