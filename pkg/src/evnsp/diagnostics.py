"""Constraint residuals, energy functionals, and monitored scalar series.

Everything here is a pure read-only computation on a state; records are
written to CSV with full 17-significant-digit precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from .grid import Grid
from .model_full import BipolarState, FullState, PhysParams
from .model_reduced import ReducedState, project_reduced

CSV_COLUMNS = [
    "time", "det_res", "piola_res", "compat_res", "curlK_res",
    "E_kin", "E_free", "E_elastic", "E_elec", "E_total",
    "D_visc", "D_div", "D_fric", "D_total",
    "mass_drift", "sobolev_H", "lemma31_E", "lemma31_D", "lemma33_X",
]

BIPOLAR_EXTRA_COLUMNS = [
    f"{name}_{sp}"
    for sp in ("minus", "plus")
    for name in ("det_res", "piola_res", "compat_res", "curlK_res",
                 "E_kin", "E_free", "E_elastic", "D_visc", "D_div", "D_fric")
]


def integrate(grid: Grid, f: np.ndarray) -> float:
    w = grid.cell_weights()
    s = np.sum(f, axis=tuple(range(f.ndim - 3)))
    return float(np.sum(np.sum(s, axis=(0, 1)) * w))


def constraint_residuals(s: FullState):
    """(det, piola, compat, curlK) residuals in the max norm."""
    grid, rho, F = s.grid, s.rho, s.F
    det_res = float(np.max(np.abs(rho * ops.det3(F) - 1.0)))

    piola = ops.tensor_divergence(grid, rho * ops.transpose3(F))
    piola_res = float(np.max(np.abs(piola)))

    gradF = ops.gradient(grid, F)  # gradF[l, i, j] = d_l F^{ij}
    comp = np.einsum("lkxyz,lijxyz->ijkxyz", F, gradF)
    compat_res = 0.0
    for j in range(3):
        for k in range(j + 1, 3):  # identity is antisymmetric in (j, k)
            compat_res = max(compat_res, float(np.max(np.abs(comp[:, j, k] - comp[:, k, j]))))

    K = ops.inv3(F)
    for i in range(3):
        K[i, i] -= 1.0
    gradK = ops.gradient(grid, K)  # gradK[l, i, j] = d_l K^{ij}
    curl_res = 0.0
    for j in range(3):
        for k in range(j + 1, 3):
            curl_res = max(curl_res, float(np.max(np.abs(gradK[j, :, k] - gradK[k, :, j]))))
    return det_res, piola_res, compat_res, curl_res


def _species_energy(grid, sp: FullState, p: PhysParams):
    gu = ops.vector_gradient(grid, sp.u)
    div_u = gu[0, 0] + gu[1, 1] + gu[2, 2]
    usq = np.sum(sp.u * sp.u, axis=0)
    return {
        "E_kin": integrate(grid, 0.5 * sp.rho * usq),
        "E_free": integrate(grid, p.free_energy(sp.rho)),
        "E_elastic": integrate(grid, 0.5 * p.c2 * sp.rho * np.sum(sp.F * sp.F, axis=(0, 1))),
        "D_visc": p.mu * integrate(grid, np.sum(gu * gu, axis=(0, 1))),
        "D_div": (p.mu + p.lam) * integrate(grid, div_u * div_u),
        "D_fric": p.alpha * integrate(grid, sp.rho * usq),
    }


def energy_report(s, p):
    """Energy components and dissipation components.

    For a FullState, p is its PhysParams; for a BipolarState, p is the
    (p_minus, p_plus) pair and per-species parts are reported alongside
    their sums.
    """
    if isinstance(s, BipolarState):
        p_minus, p_plus = p
        grid = s.grid
        out = {}
        parts = {"minus": _species_energy(grid, s.minus, p_minus),
                 "plus": _species_energy(grid, s.plus, p_plus)}
        for key in parts["minus"]:
            out[key] = parts["minus"][key] + parts["plus"][key]
            for sp in ("minus", "plus"):
                out[f"{key}_{sp}"] = parts[sp][key]
        psi = s.psi if s.psi is not None else grid.scalar()
        gpsi = ops.gradient(grid, psi)
        out["E_elec"] = integrate(grid, 0.5 * np.sum(gpsi * gpsi, axis=0))
    else:
        grid = s.grid
        out = _species_energy(grid, s, p)
        psi = s.psi if s.psi is not None else grid.scalar()
        gpsi = ops.gradient(grid, psi)
        out["E_elec"] = integrate(grid, 0.5 * np.sum(gpsi * gpsi, axis=0))
    out["E_total"] = out["E_kin"] + out["E_free"] + out["E_elastic"] + out["E_elec"]
    out["D_total"] = out["D_visc"] + out["D_div"] + out["D_fric"]
    return out


def dissipation_balance(rec1, rec2, d_mid: float) -> float:
    """|dE/dt + dissipation| over the record interval, with the
    dissipation evaluated at the interval midpoint."""
    dt = rec2.time - rec1.time
    return abs((rec2.values["E_total"] - rec1.values["E_total"]) / dt + d_mid)


def sobolev_monitor(s: FullState, psi: np.ndarray | None = None) -> float:
    """Discrete surrogate of the theorem-level monitored norm: two
    derivatives of (rho-1, u, F-I) plus first and second derivatives of
    psi."""
    grid = s.grid
    psi = psi if psi is not None else (s.psi if s.psi is not None else grid.scalar())
    total = 0.0
    for f in (s.rho - 1.0, s.u, s.F - grid.identity_tensor()):
        total += ops.norm_l2(grid, f) ** 2
        total += ops.seminorm_grad_k(grid, f, 1) ** 2
        total += ops.seminorm_grad_k(grid, f, 2) ** 2
    total += ops.seminorm_grad_k(grid, psi, 1) ** 2
    total += ops.seminorm_grad_k(grid, psi, 2) ** 2
    return float(np.sqrt(total))


def lemma_energy_brackets(r: ReducedState, psi: np.ndarray | None = None):
    """Monitored scalar brackets of the lower-order energy estimates:
    the (u, div phi, grad phi, grad psi) energy, its (u, grad u)
    dissipation partner, and the cross functional int(|phi|^2/2 - u.phi)."""
    grid = r.grid
    psi = psi if psi is not None else (r.psi if r.psi is not None else grid.scalar())
    K = ops.vector_gradient(grid, r.phi)
    div_phi = K[0, 0] + K[1, 1] + K[2, 2]
    gpsi = ops.gradient(grid, psi)
    e = (ops.norm_l2(grid, r.u) ** 2 + ops.norm_l2(grid, div_phi) ** 2
         + ops.norm_l2(grid, K) ** 2 + ops.norm_l2(grid, gpsi) ** 2)
    d = ops.norm_l2(grid, r.u) ** 2 + ops.seminorm_grad_k(grid, r.u, 1) ** 2
    x = integrate(grid, 0.5 * np.sum(r.phi * r.phi, axis=0) - np.sum(r.u * r.phi, axis=0))
    return {"lemma31_E": e, "lemma31_D": d, "lemma33_X": x}


@dataclass
class DiagnosticsRecord:
    time: float
    values: dict
    bipolar: bool = False

    @property
    def columns(self):
        return CSV_COLUMNS + (BIPOLAR_EXTRA_COLUMNS if self.bipolar else [])

    def row(self):
        vals = dict(self.values)
        vals["time"] = self.time
        return [vals.get(c, float("nan")) for c in self.columns]


def make_record(time: float, s, p, rho_mean0: float,
                reduced: ReducedState | None = None) -> DiagnosticsRecord:
    """Assemble one diagnostics row for a FullState or BipolarState.

    The lemma brackets need the deformation vector; when no co-evolved
    reduced state is supplied it is recovered by projection (negative
    species for bipolar states).
    """
    bipolar = isinstance(s, BipolarState)
    primary = s.minus if bipolar else s
    grid = primary.grid
    vals = {}

    if bipolar:
        for sp_name, sp in (("minus", s.minus), ("plus", s.plus)):
            det, pio, com, curl = constraint_residuals(sp)
            vals[f"det_res_{sp_name}"] = det
            vals[f"piola_res_{sp_name}"] = pio
            vals[f"compat_res_{sp_name}"] = com
            vals[f"curlK_res_{sp_name}"] = curl
        for name in ("det_res", "piola_res", "compat_res", "curlK_res"):
            vals[name] = max(vals[f"{name}_minus"], vals[f"{name}_plus"])
    else:
        det, pio, com, curl = constraint_residuals(s)
        vals.update(det_res=det, piola_res=pio, compat_res=com, curlK_res=curl)

    vals.update(energy_report(s, p))

    w_mean = integrate(grid, primary.rho) / grid.volume
    if bipolar:
        w_mean = 0.5 * (w_mean + integrate(grid, s.plus.rho) / grid.volume)
    vals["mass_drift"] = w_mean - rho_mean0

    vals["sobolev_H"] = sobolev_monitor(primary)

    r = reduced if reduced is not None else project_reduced(primary)
    vals.update(lemma_energy_brackets(r, primary.psi))

    return DiagnosticsRecord(time, vals, bipolar=bipolar)


def write_csv(path, records):
    if not records:
        return
    cols = records[0].columns
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for rec in records:
            fh.write(",".join(f"{v:.17g}" for v in rec.row()) + "\n")
