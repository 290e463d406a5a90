"""Field snapshot files.

Layout: one text header line `EVNSP1 <nx> <ny> <nz> <ncomp> <Lx> <Ly> <Lz>`
followed by raw little-endian float64, node-major (x fastest, then y, then
z) and component-minor.  The component manifest is fixed per snapshot kind:

  full          rho(1) u(3) F(9) psi(1)                  -> 14
  reduced       u(3) phi_def(3) psi(1)                   -> 7
  both          rho(1) u(3) F(9) psi(1) phi_def(3)       -> 17
  bipolar       rho-(1) u-(3) F-(9) rho+(1) u+(3) F+(9) psi(1) -> 27
"""

from __future__ import annotations

import numpy as np

from .grid import Grid
from .model_full import BipolarState, FullState
from .model_reduced import ReducedState

MAGIC = "EVNSP1"

KIND_NCOMP = {"full": 14, "reduced": 7, "both": 17, "bipolar": 27}


def _flatten(components: np.ndarray) -> np.ndarray:
    """(ncomp, nx, ny, nz) -> file order (z, y, x, comp)."""
    return np.ascontiguousarray(components.transpose(3, 2, 1, 0))


def _unflatten(raw: np.ndarray, nx: int, ny: int, nz: int, ncomp: int) -> np.ndarray:
    return np.ascontiguousarray(raw.reshape(nz, ny, nx, ncomp).transpose(3, 2, 1, 0))


def write_snapshot(path, grid: Grid, components: np.ndarray):
    ncomp = components.shape[0]
    header = f"{MAGIC} {grid.nx} {grid.ny} {grid.nz} {ncomp} {grid.Lx!r} {grid.Ly!r} {grid.Lz!r}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        _flatten(components).astype("<f8").tofile(fh)


def read_snapshot(path):
    """Returns (grid, components) with components shaped (ncomp, nx, ny, nz)."""
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        if not header or header[0] != MAGIC:
            raise ValueError(f"{path}: not an {MAGIC} snapshot")
        nx, ny, nz, ncomp = (int(v) for v in header[1:5])
        Lx, Ly, Lz = (float(v) for v in header[5:8])
        raw = np.fromfile(fh, dtype="<f8", count=nx * ny * nz * ncomp)
    grid = Grid(nx, ny, nz, Lx, Ly, Lz)
    return grid, _unflatten(raw, nx, ny, nz, ncomp)


def pack_state(state, reduced: ReducedState | None = None) -> np.ndarray:
    grid = state.grid if not isinstance(state, ReducedState) else state.grid
    psi = state.psi if state.psi is not None else grid.scalar()
    if isinstance(state, BipolarState):
        parts = [state.minus.rho[None], state.minus.u, state.minus.F.reshape((9,) + grid.shape),
                 state.plus.rho[None], state.plus.u, state.plus.F.reshape((9,) + grid.shape),
                 psi[None]]
    elif isinstance(state, FullState):
        parts = [state.rho[None], state.u, state.F.reshape((9,) + grid.shape), psi[None]]
        if reduced is not None:
            parts.append(reduced.phi)
    elif isinstance(state, ReducedState):
        parts = [state.u, state.phi, psi[None]]
    else:
        raise TypeError(f"cannot snapshot {type(state).__name__}")
    return np.concatenate(parts, axis=0)


def unpack_state(grid: Grid, comp: np.ndarray):
    """Inverse of pack_state; dispatches on the component count."""
    ncomp = comp.shape[0]
    if ncomp == 14 or ncomp == 17:
        full = FullState(grid, comp[0], comp[1:4].copy(),
                         comp[4:13].reshape((3, 3) + grid.shape).copy(), comp[13].copy())
        if ncomp == 17:
            red = ReducedState(grid, comp[1:4].copy(), comp[14:17].copy(), comp[13].copy())
            return full, red
        return full
    if ncomp == 7:
        return ReducedState(grid, comp[0:3].copy(), comp[3:6].copy(), comp[6].copy())
    if ncomp == 27:
        psi = comp[26].copy()
        minus = FullState(grid, comp[0], comp[1:4].copy(),
                          comp[4:13].reshape((3, 3) + grid.shape).copy(), psi)
        plus = FullState(grid, comp[13], comp[14:17].copy(),
                         comp[17:26].reshape((3, 3) + grid.shape).copy(), psi)
        return BipolarState(minus, plus, psi)
    raise ValueError(f"unrecognized component count {ncomp}")
