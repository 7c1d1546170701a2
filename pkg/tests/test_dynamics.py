import cmath

import numpy as np
import pytest

from aqrm import dynamics as dyn
from aqrm import fluctuations as fl
from aqrm import meanfield as mf
from aqrm.lines import dashed_line

KB = 0.5

FIG_CASES = [
    # (g_r, g_cr, alpha0, expected attractor family)
    (0.3, 2.0, 0.3 + 0.3j, "NP"),
    (1.0, 1.5, 0.05 - 0.05j, "SP"),
    (1.0, 2.1, 0.05 - 0.05j, "NP"),
    (1.0, 2.1, 0.1 - 0.05j, "SP"),
]


def family(label):
    return "NP" if label.startswith("NP") else "SP" if label.startswith("SP") else label


def test_np_fixed_point_is_stationary():
    assert np.all(dyn.full_rhs(0, [0, 0, 0, 0, -1], 0.7, 1.3, KB, 50.0) == 0)


def test_sp_fixed_point_is_stationary():
    sol = mf.sp_solution(1, 0.5, KB, 1)
    state = [sol.x_bar, sol.y_bar, sol.s_x, sol.s_y, sol.s_z]
    assert np.max(np.abs(dyn.full_rhs(0, state, 1, 0.5, KB, 1e4))) < 1e-6
    assert abs(dyn.adiabatic_rhs(sol.alpha_bar, 1, 0.5, KB)) < 1e-10
    assert dyn.adiabatic_rhs(0j, 1, 0.5, KB) == 0


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(0)
    y = rng.normal(size=5)
    args = (0.4, 1.1, KB, 7.0)
    J = dyn.full_jacobian(0, y, *args)
    h = 1e-6
    num = np.column_stack([
        (dyn.full_rhs(0, y + h * e, *args) - dyn.full_rhs(0, y - h * e, *args)) / (2 * h) for e in np.eye(5)
    ])
    assert np.max(np.abs(J - num)) < 1e-7


def test_adiabatic_linearization_is_np_matrix():
    # d alpha/dt and d alpha*/dt as functions of (alpha, alpha*)
    g_r, g_cr = 0.35, 0.6
    h = 1e-7
    f = lambda a: dyn.adiabatic_rhs(a, g_r, g_cr, KB)
    d_re = (f(h) - f(-h)) / (2 * h)
    d_im = (f(1j * h) - f(-1j * h)) / (2 * h)
    d_a = 0.5 * (d_re - 1j * d_im)
    d_ac = 0.5 * (d_re + 1j * d_im)
    J = np.array([[d_a, d_ac], [np.conj(d_ac), np.conj(d_a)]])
    assert np.max(np.abs(J - fl.np_matrix(g_r, g_cr, KB))) < 1e-8


def test_decoupled_oscillator_exact():
    a0 = 0.3 - 0.2j
    init = dyn.SemiclassicalState(a0, 0.0, 0.0, -1.0)
    for kwargs in ({"eta": 5.0, "method": "DOP853"}, {"adiabatic": True}):
        tr = dyn.integrate(init, 0, 0, KB, 1.0, rtol=1e-12, atol=1e-14, **kwargs)
        assert abs(tr.alpha_bar[-1] - a0 * cmath.exp(-1j - KB)) < 1e-8
    tr = dyn.integrate(init, 0, 0, KB, 1.0, eta=5.0, step=1e-4)
    assert abs(tr.alpha_bar[-1] - a0 * cmath.exp(-1j - KB)) < 1e-8


@pytest.mark.parametrize("g_r,g_cr,a0,expected", FIG_CASES)
def test_fig_cases_adiabatic(g_r, g_cr, a0, expected):
    tr = dyn.integrate(a0, g_r, g_cr, KB, 200.0, adiabatic=True)
    assert family(tr.attractor) == expected


@pytest.mark.parametrize("g_r,g_cr,a0,expected", FIG_CASES)
def test_fig_cases_full_eta(g_r, g_cr, a0, expected):
    full = dyn.integrate(a0, g_r, g_cr, KB, 200.0, eta=1e4, step=0.02)
    ad = dyn.integrate(a0, g_r, g_cr, KB, 200.0, adiabatic=True)
    assert family(full.attractor) == expected
    assert full.attractor == ad.attractor
    assert full.spin_norm_drift() < 1e-6
    assert abs(full.alpha_bar[-1] - ad.alpha_bar[-1]) < 1e-3


def test_spin_norm_conserved_long_run():
    tr = dyn.integrate(0.2 + 0.1j, 0.7, 0.9, KB, 1000.0, eta=50.0, step=0.01)
    assert tr.spin_norm_drift() < 1e-6


def test_up_sheet_start_reports_np_up():
    tr = dyn.integrate(dyn.initial_state(0.1, 0.3, 0.3, sz_sign=1), 0.3, 0.3, KB, 200.0, adiabatic=True)
    assert tr.attractor == dyn.NP_UP


def test_short_run_is_unresolved():
    tr = dyn.integrate(0.5 + 0.5j, 1.0, 1.5, KB, 0.5, adiabatic=True)
    assert tr.attractor == dyn.UNRESOLVED and tr.note


def test_random_starts_converge_to_stable_fixed_points():
    rng = np.random.default_rng(11)
    for g_r in np.linspace(0.1, 2.4, 6):
        for g_cr in np.linspace(0.1, 2.4, 6):
            r, phi = 0.5 * np.sqrt(rng.random()), 2 * np.pi * rng.random()
            tr = dyn.integrate(r * np.exp(1j * phi), g_r, g_cr, KB, 400.0, adiabatic=True, n_samples=401)
            if tr.attractor == dyn.UNRESOLVED:
                # slow approach near a boundary is allowed; a limit cycle is not
                assert "non-stationary" not in tr.note
                continue
            phase = mf.classify_phase(g_r, g_cr, KB).phase
            if family(tr.attractor) == "NP":
                assert phase in ("NP", "Bistable", "boundary")
            else:
                assert phase in ("SP", "Bistable", "boundary")


def test_hysteresis_on_dashed_line():
    g = np.round(np.arange(0.4, 2.8, 0.05), 10)
    # critical slowing near g_c-: the decay rate at g = 0.60 is only ~0.03
    res = dyn.hysteresis_scan(dashed_line(), KB, g, t_max=800.0)
    fwd_on = g[np.argmax(res.forward > 1e-3)]
    assert 0.6 <= fwd_on <= 0.65
    # forward stays on the SP branch until it ceases to exist at g_eps_min
    assert np.all(res.forward[(g > 0.7) & (g < 2.5)] > 0.1)
    assert np.all(res.forward[g > 2.6] < 1e-6)
    # backward stays NP down to g_c+ then jumps to SP
    assert np.all(res.backward[(g > 1.55) & (g < 2.5)] < 1e-6)
    assert np.all(res.backward[(g > 0.7) & (g < 1.5)] > 0.1)
    outside = (g < 1.45) | (g > 2.6)
    assert np.max(np.abs(res.forward[outside] - res.backward[outside])) < 1e-6


def test_basin_map_bistable_has_both_basins():
    axis = np.linspace(-0.6, 0.6, 5)
    labels = dyn.basin_map(1.0, 2.1, KB, axis, axis, t_max=300.0)
    found = {family(x) for x in labels.ravel()}
    assert {"NP", "SP"} <= found
