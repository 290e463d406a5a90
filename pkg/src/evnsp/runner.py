"""Experiment orchestration: the time loop, diagnostics cadence, snapshot
and manifest output, and restart support."""

from __future__ import annotations

import dataclasses
import os

import numpy as np

from . import __version__
from . import operators as ops
from .config import RunConfig, dump_config
from .diagnostics import make_record, write_csv
from .grid import Grid
from .model_full import (BipolarState, FullState, CONSTANT, rhs_bipolar,
                         rhs_unipolar)
from .model_reduced import ReducedState, reconstruct_full, rhs_reduced
from .poisson import weighted_mean
from .snapshot import pack_state, write_snapshot
from .timestepper import (cfl_dt, step_bipolar, step_full, step_reduced,
                          well_prepared_init)


def build_initial_state(cfg: RunConfig):
    """(state, reduced_or_None, phys) for the configured model.

    With pure-Neumann electrostatics the constant background is re-centered
    on the discrete mean of the initial density so the Poisson right-hand
    side starts with zero mean.
    """
    grid = cfg.grid()
    bc = cfg.bc()
    p = cfg.phys()

    if cfg.bipolar:
        p_minus = cfg.phys(charge_sign="-")
        p_plus = cfg.phys(charge_sign="+")
        minus, _ = well_prepared_init(grid, cfg.amplitude, cfg.profile,
                                      cfg.kx, cfg.ky, cfg.seed)
        plus, _ = well_prepared_init(grid, cfg.amplitude, cfg.profile,
                                     cfg.kx, cfg.ky, cfg.seed + 1)
        state = BipolarState(minus, plus)
        return state, None, (p_minus, p_plus)

    full, red = well_prepared_init(grid, cfg.amplitude, cfg.profile,
                                   cfg.kx, cfg.ky, cfg.seed)
    if p.background == CONSTANT and bc.pure_neumann:
        p = dataclasses.replace(p, rho_bar=weighted_mean(grid, full.rho))
    if cfg.formulation == "reduced":
        return red, None, p
    if cfg.formulation == "both":
        return full, red, p
    return full, None, p


def ensure_potential(state, p, bc):
    """Populate state.psi in place (initial data carries none); the rates
    are discarded."""
    if state.psi is not None:
        return
    if isinstance(state, BipolarState):
        rhs_bipolar(state, p[0], p[1], bc)
    elif isinstance(state, ReducedState):
        rhs_reduced(state, p, bc)
    else:
        rhs_unipolar(state, p, bc)


def _advance(state, reduced, p, bc, dt, cfg):
    if isinstance(state, BipolarState):
        return step_bipolar(state, p[0], p[1], bc, dt), None
    if isinstance(state, ReducedState):
        return step_reduced(state, p, bc, dt), None
    new = step_full(state, p, bc, dt)
    new_red = step_reduced(reduced, p, bc, dt) if reduced is not None else None
    return new, new_red


def run(cfg: RunConfig, out_dir: str | None = None, state=None, reduced=None,
        t0: float = 0.0):
    """Advance the configured system to t_end.

    Returns (state, reduced, records).  `state`/`t0` allow restarting from
    a snapshot; out_dir=None suppresses all file output.
    """
    grid = cfg.grid()
    bc = cfg.bc()
    if state is None:
        state, reduced, p = build_initial_state(cfg)
    else:
        _, _, p = build_initial_state(cfg)

    primary = state.minus if isinstance(state, BipolarState) else state
    if isinstance(state, ReducedState):
        rho_mean0 = weighted_mean(grid, reconstruct_full(state).rho)
    elif isinstance(state, BipolarState):
        rho_mean0 = 0.5 * (weighted_mean(grid, state.minus.rho)
                           + weighted_mean(grid, state.plus.rho))
    else:
        rho_mean0 = weighted_mean(grid, primary.rho)

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "run_manifest.txt"), "w") as fh:
            fh.write(f"# evnsp {__version__}\n")
            fh.write(f"# grid {grid.nx} {grid.ny} {grid.nz} "
                     f"{grid.Lx!r} {grid.Ly!r} {grid.Lz!r}\n")
            fh.write(dump_config(cfg))

    records = []
    divergence_rows = []
    diag_p = p

    def record(t, st, red):
        diag_state = reconstruct_full(st) if isinstance(st, ReducedState) else st
        if isinstance(st, ReducedState):
            diag_state.psi = st.psi if st.psi is not None else grid.scalar()
        records.append(make_record(t, diag_state, diag_p, rho_mean0,
                                   reduced=red if red is not None
                                   else (st if isinstance(st, ReducedState) else None)))
        if red is not None and isinstance(st, FullState):
            rec_full = reconstruct_full(red)
            divergence_rows.append((
                t,
                float(np.max(np.abs(st.rho - rec_full.rho))),
                float(np.max(np.abs(st.u - red.u))),
            ))

    t = t0
    step = 0
    ensure_potential(state, p, bc)
    if reduced is not None:
        ensure_potential(reduced, p, bc)
    record(t, state, reduced)
    while t < cfg.t_end - 1e-14:
        dt = cfl_dt(state, p[0] if isinstance(p, tuple) else p, grid,
                    cfg.cfl_advective, cfg.cfl_diffusive, cfg.dt_max)
        dt = min(dt, cfg.t_end - t)
        state, new_red = _advance(state, reduced, p, bc, dt, cfg)
        if new_red is not None:
            reduced = new_red
        t += dt
        step += 1
        if cfg.diag_every and step % cfg.diag_every == 0:
            record(t, state, reduced)
        if out_dir is not None and cfg.snapshot_every and step % cfg.snapshot_every == 0:
            comp = pack_state(state, reduced)
            write_snapshot(os.path.join(out_dir, f"snap_{step:08d}.bin"), grid, comp)

    if cfg.diag_every and step % cfg.diag_every != 0:
        record(t, state, reduced)

    if out_dir is not None:
        write_csv(os.path.join(out_dir, "diag.csv"), records)
        if divergence_rows:
            with open(os.path.join(out_dir, "formulation_divergence.csv"), "w") as fh:
                fh.write("time,rho_gap,u_gap\n")
                for row in divergence_rows:
                    fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
        comp = pack_state(state, reduced)
        write_snapshot(os.path.join(out_dir, "snap_final.bin"), grid, comp)

    return state, reduced, records
