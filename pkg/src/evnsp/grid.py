"""Uniform structured grid on a periodic-in-(x,y), walled-in-z slab.

Fields are plain float64 numpy arrays on the grid:
  scalar  (nx, ny, nz)
  vector  (3, nx, ny, nz)
  tensor  (3, 3, nx, ny, nz)

The z direction includes both wall nodes z = 0 and z = Lz; x and y wrap, so
their last node is Lx - hx (resp. Ly - hy).  Setting ny = 1 selects 2D mode:
all y-derivatives vanish identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DIRICHLET = "dirichlet"
NEUMANN = "neumann"


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    nz: int
    Lx: float = 1.0
    Ly: float = 1.0
    Lz: float = 1.0

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("nx and ny must be >= 1")
        if self.nz < 5:
            raise ValueError("nz must be >= 5 for second-order wall stencils")
        if min(self.Lx, self.Ly, self.Lz) <= 0:
            raise ValueError("box lengths must be positive")

    @property
    def hx(self) -> float:
        return self.Lx / self.nx

    @property
    def hy(self) -> float:
        return self.Ly / self.ny

    @property
    def hz(self) -> float:
        return self.Lz / (self.nz - 1)

    @property
    def shape(self):
        return (self.nx, self.ny, self.nz)

    @property
    def two_d(self) -> bool:
        return self.ny == 1

    @property
    def dim(self) -> int:
        return 2 if self.two_d else 3

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.nx) * self.hx

    @property
    def y(self) -> np.ndarray:
        return np.arange(self.ny) * self.hy

    @property
    def z(self) -> np.ndarray:
        # linspace guarantees the endpoints 0 and Lz exactly
        return np.linspace(0.0, self.Lz, self.nz)

    def meshgrid(self):
        return np.meshgrid(self.x, self.y, self.z, indexing="ij")

    @property
    def volume(self) -> float:
        return self.Lx * self.Ly * self.Lz

    def cell_weights(self) -> np.ndarray:
        """Quadrature weights: uniform in x,y, trapezoidal in z. Shape (nz,)."""
        wz = np.full(self.nz, self.hz)
        wz[0] = wz[-1] = 0.5 * self.hz
        return self.hx * self.hy * wz

    def scalar(self, fill: float = 0.0) -> np.ndarray:
        return np.full(self.shape, fill, dtype=np.float64)

    def vector(self) -> np.ndarray:
        return np.zeros((3,) + self.shape, dtype=np.float64)

    def tensor(self) -> np.ndarray:
        return np.zeros((3, 3) + self.shape, dtype=np.float64)

    def identity_tensor(self) -> np.ndarray:
        t = self.tensor()
        for i in range(3):
            t[i, i] = 1.0
        return t


@dataclass(frozen=True)
class BoundarySpec:
    """Wall conditions.  Velocity is always no-slip (u = 0 at both walls);
    the electrostatic potential takes Dirichlet-zero or Neumann-zero at each
    wall independently."""

    psi_lo: str = DIRICHLET
    psi_hi: str = DIRICHLET

    def __post_init__(self):
        for side in (self.psi_lo, self.psi_hi):
            if side not in (DIRICHLET, NEUMANN):
                raise ValueError(f"unknown wall condition {side!r}")

    @property
    def pure_neumann(self) -> bool:
        return self.psi_lo == NEUMANN and self.psi_hi == NEUMANN


def assert_finite(arr: np.ndarray, what: str = "field"):
    if not np.all(np.isfinite(arr)):
        raise FloatingPointError(f"non-finite values in {what}")
