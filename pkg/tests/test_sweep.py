import numpy as np
import pytest

from dcgrid.errors import NoFeasibleTau
from dcgrid.simulator import ClassifyControls
from dcgrid.stability import assess
from dcgrid.sweep import (Criterion, SweepGrid, min_cap_curves, min_capacitance, rmax_map,
                          satisfies, scan_values, sufficiency_check, tune_tau, write_minc_csv,
                          write_rmax_csv, write_tau_csv)

from conftest import make_op1, make_op2

MF = 1e-3
L_AXIS = (0.1e-3, 0.2e-3, 0.5e-3, 1e-3, 2e-3, 5e-3)


def test_scan_values_are_exact_multiples():
    v = scan_values(0.1e-3, 10e-3, 0.2e-3)
    assert len(v) == 50
    assert v[0] == 0.1e-3 and v[-1] == pytest.approx(9.9e-3, rel=1e-14)
    assert np.allclose(np.diff(v), 0.2e-3, rtol=1e-12)
    assert len(scan_values(1.0, 2.0, 0.5)) == 3
    with pytest.raises(ValueError):
        scan_values(0.0, 1.0, 0.1)


def test_grid_validation():
    with pytest.raises(ValueError):
        SweepGrid((2e-3, 1e-3), (1e-3,), (0.1,))
    with pytest.raises(ValueError):
        SweepGrid((), (1e-3,), (0.1,))
    with pytest.raises(ValueError):
        SweepGrid((1e-3,), (-1e-3,), (0.1,))
    g = SweepGrid((1e-3, 2e-3), (1e-3,), (0.1, 0.2))
    assert len(g) == 4 and g.triples()[1] == (0.1, 1e-3, 2e-3)


def test_criterion_parse():
    assert Criterion.parse("SSASC") is Criterion.SSASC
    assert Criterion.parse("sim") is Criterion.SIMULATION
    with pytest.raises(ValueError):
        Criterion.parse("dig")


def test_first_element_case():
    r = min_capacitance(make_op1(), 0.1e-3, 0.5, (20 * MF, 30 * MF), 0.2 * MF)
    assert r.c_min == 20 * MF and r.below_satisfies is None


def test_not_found():
    r = min_capacitance(make_op1(), 5e-3, 0.1, (0.1 * MF, 10 * MF), 0.2 * MF)
    assert not r.found and r.c_min is None


@pytest.mark.parametrize("droop", [0.1, 0.2, 0.5])
def test_bracketing_and_bisection(droop):
    base = make_op1()
    lin = min_capacitance(base, 0.5e-3, droop, (0.1 * MF, 100 * MF), 0.2 * MF)
    bis = min_capacitance(base, 0.5e-3, droop, (0.1 * MF, 100 * MF), 0.2 * MF, bisect=True)
    assert lin.found and lin.c_min == bis.c_min
    assert lin.below_satisfies is False
    cell = base.with_design(l_b=0.5e-3, droop=droop)
    assert assess(cell.with_design(c=lin.c_min)).ssasc
    assert not assess(cell.with_design(c=lin.c_min - 0.2 * MF)).ssasc


def test_regression_baseline_operating_point_one():
    res = min_cap_curves(make_op1(), L_AXIS, (0.5,), (0.1 * MF, 100 * MF), 0.2 * MF)
    got = [round(r.c_min / MF, 6) for r in res]
    assert got == [13.5, 15.5, 18.7, 23.3, 32.5, 61.1]


def test_infeasible_cells_do_not_satisfy():
    heavy = make_op1().with_design(p_load=40.0)
    assert satisfies(heavy, Criterion.SSASC) is False
    rows = rmax_map({"heavy": heavy}, SweepGrid((1 * MF,), (1e-3,), (0.5,)))
    assert np.isnan(rows[0].r_max) and rows[0].error.startswith("NoPhysicalRoot")


def test_rmax_order_and_csv(tmp_path):
    grid = SweepGrid((5 * MF, 20 * MF), (0.1e-3, 1e-3), (0.2, 0.5))
    rows = rmax_map({"a": make_op1(), "b": make_op2()}, grid)
    assert [(r.op, r.droop, r.l_b, r.c) for r in rows][:3] == [
        ("a", 0.2, 0.1e-3, 5 * MF), ("a", 0.2, 0.1e-3, 20 * MF), ("a", 0.2, 1e-3, 5 * MF)]
    assert len(rows) == 16
    write_rmax_csv(rows, tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "op,D,L_H,C_F,r_max,error" and len(lines) == 17


def test_parallel_results_identical(tmp_path):
    base = make_op1()
    a = min_cap_curves(base, (0.1e-3, 1e-3), (0.2, 0.5), (1 * MF, 60 * MF), 0.2 * MF, jobs=1)
    b = min_cap_curves(base, (0.1e-3, 1e-3), (0.2, 0.5), (1 * MF, 60 * MF), 0.2 * MF, jobs=2)
    write_minc_csv(a, tmp_path / "a.csv")
    write_minc_csv(b, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_tau_single_feasible_candidate():
    grid = SweepGrid((20 * MF, 40 * MF), (0.1e-3,), (0.5,), Criterion.SIMULATION)
    res = tune_tau(make_op1(), grid, [1e-3])
    assert res.tau_star == 1e-3 and res.table == ((1e-3, 0),)


def test_tau_vacuous_grid_returns_smallest():
    # every cell fails the eigenvalue test, so no simulation is needed
    grid = SweepGrid((0.1 * MF, 0.3 * MF), (5e-3,), (0.1,), Criterion.SIMULATION)
    res = tune_tau(make_op1(), grid, [0.2e-3, 0.5e-3, 0.9e-3])
    assert res.tau_star == 0.2e-3


def test_tau_no_feasible(tmp_path):
    # a horizon too short to decide turns every passing cell into a counterexample
    grid = SweepGrid((20 * MF,), (0.1e-3,), (0.5,), Criterion.SIMULATION)
    hasty = ClassifyControls(t_end=0.2, max_t_end=0.2)
    with pytest.raises(NoFeasibleTau) as info:
        tune_tau(make_op1(), grid, [0.5e-3, 0.9e-3], classify_controls=hasty)
    assert info.value.result.table == ((0.5e-3, 1), (0.9e-3, 1))
    write_tau_csv(info.value.result, tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == "tau_s,counterexamples"


def test_tau_candidates_validated():
    grid = SweepGrid((20 * MF,), (0.1e-3,), (0.5,))
    for bad in ([], [2e-3], [0.9e-3, 0.5e-3]):
        with pytest.raises(ValueError):
            tune_tau(make_op1(), grid, bad)


@pytest.mark.slow
@pytest.mark.parametrize("make", [make_op1, make_op2], ids=["op1", "op2"])
def test_sufficiency_on_large_capacitors(make):
    grid = SweepGrid((15 * MF, 30 * MF, 60 * MF, 90 * MF), (0.1e-3, 1e-3, 5e-3), (0.1, 0.5))
    cells = sufficiency_check(make(), grid)
    assert sum(c.ssasc for c in cells) >= 6
    assert not any(c.counterexample for c in cells)
