import numpy as np
import pytest

from evnsp import operators as ops
from evnsp.diagnostics import (BIPOLAR_EXTRA_COLUMNS, CSV_COLUMNS,
                               constraint_residuals, dissipation_balance,
                               energy_report, integrate,
                               lemma_energy_brackets, make_record,
                               sobolev_monitor, write_csv)
from evnsp.grid import BoundarySpec, Grid
from evnsp.model_full import BipolarState, FullState, PhysParams
from evnsp.model_reduced import ReducedState
from evnsp.poisson import PoissonProblem, solve_linear
from evnsp.timestepper import well_prepared_init


def test_integrate_constant():
    grid = Grid(5, 6, 9, Lx=2.0, Ly=0.5, Lz=3.0)
    assert integrate(grid, grid.scalar(2.0)) == pytest.approx(2.0 * grid.volume,
                                                             rel=1e-13)


def test_equilibrium_energies(grid3d):
    s = FullState.equilibrium(grid3d)
    p = PhysParams()
    rep = energy_report(s, p)
    # rho = 1: free energy rho*log(rho) = 0; |F|^2 = 3 so elastic = 1.5 V
    assert rep["E_kin"] == 0.0
    assert rep["E_free"] == pytest.approx(0.0, abs=1e-14)
    assert rep["E_elastic"] == pytest.approx(1.5 * grid3d.volume, rel=1e-13)
    assert rep["E_elec"] == 0.0
    assert rep["D_total"] == 0.0
    assert rep["E_total"] == pytest.approx(1.5 * grid3d.volume, rel=1e-13)


def test_equilibrium_constraints_and_monitor(grid3d):
    s = FullState.equilibrium(grid3d)
    det, pio, com, curl = constraint_residuals(s)
    assert det == pio == com == curl == 0.0
    assert sobolev_monitor(s) == 0.0


def test_constraint_residuals_well_prepared():
    """Well-prepared data satisfies the algebraic constraint to round-off
    and the differential ones to O(h^2)."""
    grid = Grid(24, 1, 25)
    full, _ = well_prepared_init(grid, 1e-2, seed=6)
    det, pio, com, curl = constraint_residuals(full)
    assert det <= 1e-13
    assert max(pio, com, curl) <= 1e-2  # discretization scale, not O(1)


def test_bipolar_record_extra_columns(grid2d):
    s = BipolarState.equilibrium(grid2d)
    p = (PhysParams(charge_sign="-"), PhysParams(charge_sign="+"))
    rec = make_record(0.0, s, p, rho_mean0=1.0)
    assert rec.bipolar
    assert rec.columns == CSV_COLUMNS + BIPOLAR_EXTRA_COLUMNS
    row = rec.row()
    assert len(row) == len(rec.columns)
    assert row[rec.columns.index("E_elastic_minus")] == pytest.approx(
        1.5 * grid2d.volume, rel=1e-12)


def test_csv_round_trip(tmp_path, grid2d):
    s = FullState.equilibrium(grid2d)
    full, _ = well_prepared_init(grid2d, 1e-2, seed=8)
    full.psi = grid2d.scalar()
    recs = [make_record(t, full, PhysParams(), 1.0) for t in (0.0, 0.5)]
    path = tmp_path / "diag.csv"
    write_csv(path, recs)
    data = np.genfromtxt(path, delimiter=",", names=True)
    assert list(data.dtype.names) == CSV_COLUMNS
    for i, rec in enumerate(recs):
        got = np.array([data[c][i] for c in CSV_COLUMNS])
        np.testing.assert_array_equal(got, np.array(rec.row()))


def test_dissipation_balance_definition():
    r1 = make_dummy_record(0.0, 10.0)
    r2 = make_dummy_record(0.5, 9.0)
    assert dissipation_balance(r1, r2, d_mid=2.0) == pytest.approx(0.0)
    assert dissipation_balance(r1, r2, d_mid=2.5) == pytest.approx(0.5)


def make_dummy_record(t, e_total):
    from evnsp.diagnostics import DiagnosticsRecord
    return DiagnosticsRecord(t, {"E_total": e_total})


def test_lemma_brackets_zero_at_equilibrium(grid2d):
    r = ReducedState.equilibrium(grid2d)
    b = lemma_energy_brackets(r)
    assert b["lemma31_E"] == 0.0
    assert b["lemma31_D"] == 0.0
    assert b["lemma33_X"] == 0.0


def test_electrostatic_cancellation_oracle():
    """The discrete surrogate of the exact electrostatic cancellation:
    d/dt of the field energy plus the electrostatic work on the fluid is
    O(h^2), vanishing under refinement.  This identity is what makes the
    energy-dissipation defect refine."""
    defects = []
    bc = BoundarySpec("dirichlet", "dirichlet")
    p = PhysParams()  # "-" species: force +rho grad(psi), source rho - 1
    for n in (16, 32):
        grid = Grid(n, 1, n + 1)
        full, _ = well_prepared_init(grid, 1e-2, seed=12)
        psi = solve_linear(PoissonProblem(grid, bc, f=full.rho - p.rho_bar))
        rho_dot = -ops.divergence(grid, full.rho * full.u)
        psi_dot = solve_linear(PoissonProblem(grid, bc, f=rho_dot))
        dE_elec = integrate(grid, np.sum(ops.gradient(grid, psi)
                                         * ops.gradient(grid, psi_dot), axis=0))
        work = integrate(grid, full.rho * np.sum(full.u
                                                 * ops.gradient(grid, psi), axis=0))
        defects.append(abs(dE_elec + work))
    assert defects[0] / defects[1] >= 3.0


def test_sobolev_monitor_scales_linearly(grid2d):
    vals = []
    for eps in (1e-3, 2e-3):
        full, _ = well_prepared_init(grid2d, eps, seed=3)
        full.psi = grid2d.scalar()
        vals.append(sobolev_monitor(full))
    assert vals[1] / vals[0] == pytest.approx(2.0, rel=0.05)
