import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from dcgrid.equilibrium import solve_equilibrium
from dcgrid.errors import BatteryOverload, NoPhysicalRoot
from dcgrid.linearization import analytic_jacobian
from dcgrid.model import EssParams
from dcgrid.stability import assess, eigenvalues, report_from_matrix

from conftest import grid_params, make_op1, make_op2


def spectrum(params):
    try:
        eq = solve_equilibrium(params)
    except (NoPhysicalRoot, BatteryOverload):
        assume(False)
    A = analytic_jacobian(params, eq).entries
    return A, eigenvalues(A)


def test_diagonal():
    lam = eigenvalues(np.diag([-1.0, -2.0]))
    assert np.allclose(lam, [-1.0, -2.0], atol=1e-15)


def test_rotation_generator():
    lam = eigenvalues(np.array([[0.0, 1.0], [-1.0, 0.0]]))
    assert np.allclose(lam, [1j, -1j], atol=1e-15)


def test_companion_quartic():
    # companion matrix of l^4 - 1
    C = np.zeros((4, 4))
    C[1:, :3] = np.eye(3)
    C[0, 3] = 1.0
    lam = eigenvalues(C)
    assert np.allclose(lam, [1.0, 1j, -1j, -1.0], atol=1e-10)


def test_sort_order():
    lam = eigenvalues(np.diag([-3.0, 2.0, 0.5]))
    assert lam.real.tolist() == [2.0, 0.5, -3.0]


@given(grid_params())
def test_trace_and_conjugate_pairs(params):
    A, lam = spectrum(params)
    scale = max(np.sum(np.abs(lam.real)), 1.0)
    assert abs(np.sum(lam.real) - np.trace(A)) <= 1e-8 * scale
    for z in lam[np.abs(lam.imag) > 0]:
        assert np.min(np.abs(lam - np.conj(z))) <= 1e-10 * abs(z)


@given(st.floats(0.1e-3, 5e-3), st.floats(0.1e-3, 5e-3), st.floats(1e-3, 60e-3))
def test_swapping_units_keeps_spectrum(l1, l2, c):
    from dataclasses import replace

    params = replace(make_op1(c=c), ess=(EssParams(0.924, 0.0177, l1),
                                         EssParams(0.93, 0.025, l2)))
    swapped = replace(params, ess=params.ess[::-1])
    _, a = spectrum(params)
    _, b = spectrum(swapped)
    scale = np.max(np.abs(a))
    assert np.allclose(np.sort_complex(a), np.sort_complex(b), rtol=0, atol=1e-9 * scale)


@given(grid_params())
def test_r_max_continuous_in_capacitance(params):
    A, lam = spectrum(params)
    _, lam2 = spectrum(params.with_design(c=params.c * 1.01))
    # a 1 % change of one parameter moves the rightmost real part by a small
    # fraction of the spectral radius
    assert abs(lam2.real.max() - lam.real.max()) <= 0.05 * np.max(np.abs(lam))


def test_marginal_flag():
    rep = report_from_matrix(np.diag([0.0, -1.0]))
    assert rep.marginal and not rep.ssasc and rep.margin == 0.0
    rep = report_from_matrix(np.diag([-0.5, -1.0]))
    assert rep.ssasc and not rep.marginal and rep.margin == 0.5


def test_rejects_bad_matrix():
    with pytest.raises(ValueError):
        eigenvalues(np.ones((2, 3)))
    with pytest.raises(ValueError):
        eigenvalues(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_stable_design_operating_point_one():
    rep = assess(make_op1(c=20e-3, l_b=0.1e-3, droop=0.5))
    assert rep.ssasc and rep.r_max < 0
    assert rep.eigenvalues.shape == (7,)


def test_below_minimum_capacitance_is_unstable():
    # 13.5 mF is the first capacitance on the 0.2 mF scan that passes here
    assert assess(make_op1(c=13.5e-3, l_b=0.1e-3, droop=0.5)).ssasc
    assert not assess(make_op1(c=13.3e-3, l_b=0.1e-3, droop=0.5)).ssasc


def test_published_layout_rejects_small_capacitors_at_tiny_delay():
    # With the coupling terms of the published matrix removed, no bus
    # capacitor up to 10 mF passes at a 0.1 us delay for operating point 1.
    for droop in (0.1, 0.2, 0.5):
        for l_b in (0.1e-3, 0.5e-3, 2e-3, 5e-3):
            for c in np.arange(0.1e-3, 10.05e-3, 0.1e-3):
                p = make_op1(c=c, l_b=l_b, droop=droop, tau=1e-7)
                assert not assess(p, paper_layout=True).ssasc


def test_csv(tmp_path):
    rep = assess(make_op2(c=20e-3))
    rep.to_csv(tmp_path / "e.csv")
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines[0] == "kind,re,im,ssasc,marginal"
    assert len(lines) == 1 + 7 + 1
    assert lines[-1].startswith("r_max,") and lines[-1].endswith(",1,0")
