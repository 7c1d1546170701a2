"""Acceptance criteria 1-9, one PASS/FAIL line each.

The lines are printed as each check finishes and repeated in the pytest
terminal summary. Run ``python3 tests/test_acceptance.py`` for the lines alone.
Quantum criteria run at desk scale; the full-size variants are marked
``paper_scale`` and enabled by ``AQRM_PAPER_SCALE=1``.
"""

import math
import sys
import time
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))
from conftest import ACCEPTANCE_LINES  # noqa: E402

from aqrm import dynamics as dyn
from aqrm import fluctuations as fl
from aqrm import meanfield as mf
from aqrm import quantum as q
from aqrm import wigner as wg
from aqrm.lines import dashed_line, epsilon_min_ray, tangent_line
from aqrm.params import ModelParams

KB = 0.5


def report(n, ok, detail, elapsed, budget):
    ok = bool(ok) and elapsed < budget
    line = f"ACCEPTANCE {n}: {'PASS' if ok else 'FAIL'} ({elapsed:.1f}s / budget {budget:g}s) {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


# ---------------------------------------------------------------------------


def test_criterion_1_transition_landmarks():
    t0 = time.perf_counter()
    got = {t.kind: t.g for t in mf.line_transitions(dashed_line(), KB)}
    want = {"g_c_minus": 0.61, "g_c_plus": 1.51, "g_eps_min": 2.55}
    ok = set(got) == set(want) and all(abs(got[k] - v) <= 0.01 for k, v in want.items())
    detail = ", ".join(f"{k}={got.get(k, float('nan')):.5f} (target {v}±0.01)" for k, v in want.items())
    report(1, ok, detail, time.perf_counter() - t0, 1.0)


def test_criterion_2_symmetric_limit():
    t0 = time.perf_counter()
    err = max(abs(mf.critical_couplings(1.0, kb)[0] - math.sqrt(1 + kb**2) / 2) for kb in (0.1, 0.5, 1, 2))
    gp = [mf.critical_couplings(1 + d, KB)[1] for d in (-9.9e-7, -1e-7, 1e-8, 1e-7, 9.9e-7)]
    ok = err < 1e-12 and min(gp) > 1e6
    detail = f"max |g_c- - sqrt(1+k^2)/2| = {err:.1e}; min g_c+ for |eps-1|<1e-6 = {min(gp):.3g}"
    report(2, ok, detail, time.perf_counter() - t0, 1.0)


def _exponent_suite():
    line = dashed_line()
    trans = {t.kind: t.g for t in mf.line_transitions(line, KB)}
    cases = [
        ("g_c- below", line, trans["g_c_minus"], "below", "NP", 1.0),
        ("g_c- above", line, trans["g_c_minus"], "above", "SP", 1.0),
        ("g_c+ NP side", line, trans["g_c_plus"], "above", "NP", 1.0),
        ("g_eps_min SP side", line, trans["g_eps_min"], "below", "SP", 0.5),
    ]
    ray = epsilon_min_ray(KB)
    g0 = mf.tricritical_points(KB)[0][0]
    for side in ("below", "above"):
        cases.append((f"tricritical tangent {side}", ray, g0, side, "NP", 2.0))
    for eps in (0.5, 2.0):
        tl, gt = tangent_line(eps, KB)
        for side in ("below", "above"):
            cases.append((f"tangent eps={eps} {side}", tl, gt, side, "NP", 2.0))
    out = []
    for name, ln, g_c, side, phase, target in cases:
        nu_adr = fl.scaling_fit(ln, KB, g_c, side, phase, "adr").nu
        nu_x = fl.scaling_fit(ln, KB, g_c, side, phase, "n").nu
        out.append((name, target, nu_adr, nu_x))
    return out


def test_criterion_3_exponent_suite():
    t0 = time.perf_counter()
    rows = _exponent_suite()
    worst = max(max(abs(a - t), abs(x - t)) for _, t, a, x in rows)
    ok = worst <= 0.05
    detail = f"{len(rows)} fits, worst |nu - target| = {worst:.4f}; " + "; ".join(
        f"{n}: {a:.3f}/{x:.3f}" for n, _, a, x in rows)
    report(3, ok, detail, time.perf_counter() - t0, 10.0)


def test_criterion_4_root_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst_np = worst_sp = 0.0
    n_sp = 0
    for _ in range(1000):
        kb = rng.uniform(0.05, 2.0)
        lo, hi = mf.epsilon_bounds(kb)
        eps = rng.uniform(lo, hi)
        if abs(eps - 1) < 1e-6:
            continue
        # roots of the excitation-number denominator, a quadratic in g^2
        c = [(1 - eps**2) ** 2, -2 * (1 + eps**2), 1 + kb**2]
        roots = np.sort(np.sqrt(np.roots(c).real))
        gm, gp = mf.critical_couplings(eps, kb)
        worst_np = max(worst_np, abs(roots[0] - gm) / gm, abs(roots[1] - gp) / gp)
        # SP: denominator of the excitation number equals |l+|^2-type product of the eigenvalues
        g = rng.uniform(gm, min(gp, 3 * gm) if math.isfinite(gp) else 3 * gm)
        try:
            coeffs = fl.sp_coefficients(g, eps, kb)
        except mf.NoSolution:
            continue
        lp, lm = fl.sp_eigenvalues(coeffs, kb)
        den = fl.sp_excitation_denominator(coeffs, kb)
        worst_sp = max(worst_sp, abs((lp * lm).real - den) / max(1.0, abs(den)))
        n_sp += 1
    ok = worst_np < 1e-10 and worst_sp < 1e-10 and n_sp > 100
    detail = (f"NP denominator roots vs g_c+-: max rel err {worst_np:.1e}; "
              f"SP l+ l- vs denominator over {n_sp} points: max err {worst_sp:.1e}")
    report(4, ok, detail, time.perf_counter() - t0, 5.0)


def test_criterion_5_appendix_forms():
    t0 = time.perf_counter()
    lo, hi = mf.epsilon_bounds(KB)
    worst, n = 0.0, 0
    for eps in np.linspace(lo + 1e-3, hi - 1e-3, 50):
        gm, gp = mf.critical_couplings(eps, KB)
        top = min(gp, 4.0) if math.isfinite(gp) else 4.0
        for g in np.linspace(gm * 1.001, top, 50):
            try:
                a = fl.sp_coefficients(g, eps, KB, form="simplified")
                b = fl.sp_coefficients(g, eps, KB, form="general")
            except mf.NoSolution:
                continue
            worst = max(worst, abs(a.u_bar - b.u_bar), abs(a.v_bar - b.v_bar))
            n += 1
    ok = worst < 1e-10 and n >= 2000
    report(5, ok, f"{n} SP grid points, max |general - simplified| = {worst:.1e}", time.perf_counter() - t0, 2.0)


def test_criterion_6_trajectories():
    t0 = time.perf_counter()
    cases = [
        (0.3, 2.0, 0.3 + 0.3j, "NP"),
        (1.0, 1.5, 0.05 - 0.05j, "SP"),
        (1.0, 2.1, 0.05 - 0.05j, "NP"),
        (1.0, 2.1, 0.1 - 0.05j, "SP"),
    ]
    ok = True
    parts = []
    for g_r, g_cr, a0, want in cases:
        full = dyn.integrate(a0, g_r, g_cr, KB, 200.0, eta=1e4, step=0.02)
        ad = dyn.integrate(a0, g_r, g_cr, KB, 200.0, adiabatic=True)
        drift = full.spin_norm_drift()
        diff = abs(full.alpha_bar[-1] - ad.alpha_bar[-1])
        good = full.attractor.startswith(want) and ad.attractor == full.attractor and drift < 1e-6 and diff < 1e-3
        ok &= good
        parts.append(f"({g_r},{g_cr}) {full.attractor} drift {drift:.0e} |full-adiabatic| {diff:.0e}")
    report(6, ok, "; ".join(parts), time.perf_counter() - t0, 30.0)


# ---------------------------------------------------------------------------
# quantum criteria


@lru_cache(maxsize=None)
def desk_state(g_r, g_cr, eta, N, gamma_over_omega=0.0):
    p = ModelParams.from_renormalized(g_r, g_cr, KB, eta, gamma_spin=gamma_over_omega * eta)
    return q.steady_state(q.liouvillian(p, N), N, check_gap=False)


def modality(state, n_points=161):
    block, _ = q.project_spin_down(state)
    return wg.wigner(block, n_points=n_points).modality()


DESK_SETS = {
    # label: (g_r, g_cr, eta, N, Gamma/Omega, expected modality)
    "NP": (0.3, 0.488, 50, 120, 0.0, 1),
    "SP": (0.5, 0.8, 50, 120, 0.0, 2),
    "bistable": (0.65, 2.009, 50, 120, 0.0, 3),
    "damping off": (0.35, 1.7, 100, 160, 0.0, 1),
    "damping on": (0.35, 1.7, 100, 160, 0.15, 3),
}


def test_criterion_7_quantum_modality():
    t0 = time.perf_counter()
    ok, parts = True, []
    for label, (g_r, g_cr, eta, N, gam, want) in DESK_SETS.items():
        got = modality(desk_state(g_r, g_cr, eta, N, gam))
        ok &= got == want
        parts.append(f"{label} ({g_r},{g_cr}) eta={eta} N={N} G/W={gam}: {got} (want {want})")
    report(7, ok, "; ".join(parts), time.perf_counter() - t0, 300.0)


def test_criterion_8_density_matrix_hygiene():
    t0 = time.perf_counter()
    states = [desk_state(*v[:5]) for v in DESK_SETS.values()]
    # g = 0 with spin damping: decoupled cascade to vacuum x down
    N0 = 30
    L0 = q.liouvillian(ModelParams.from_renormalized(0, 0, KB, 10.0, gamma_spin=0.3), N0)
    ss0 = q.steady_state(L0, N0)
    # reduced NP case
    N1 = 16
    L1 = q.liouvillian(ModelParams.from_renormalized(0.4, 0.64, KB, 50.0), N1)
    ss1 = q.steady_state(L1, N1, check_gap=True)
    states += [ss0, ss1]
    worst = {"trace": 0.0, "herm": 0.0, "min_eig": 0.0, "top": 0.0}
    for s in states:
        d = s.check()
        worst["trace"] = max(worst["trace"], abs(d["trace"] - 1))
        worst["herm"] = max(worst["herm"], d["hermiticity_error"])
        worst["min_eig"] = min(worst["min_eig"], d["min_eig"])
        worst["top"] = max(worst["top"], d["top_fock_pop"])
    hygiene = worst["trace"] < 1e-10 and worst["herm"] < 1e-10 and worst["min_eig"] > -1e-8 and worst["top"] < 1e-6

    vac = np.zeros((N0, N0), complex)
    vac[3, 3] = 1
    start0 = q.product_state("up", vac)
    d0 = q.time_evolve(start0, L0, 60.0).trace_distance(ss0)
    slow = abs(q.slowest_eigenvalues(L1, k=2)[1].real)
    start1 = q.product_state("down", np.eye(N1, dtype=complex) / N1)
    d1 = q.time_evolve(start1, L1, 30.0 / slow).trace_distance(ss1)
    ok = hygiene and d0 < 1e-6 and d1 < 1e-6
    detail = (f"{len(states)} states: max|tr-1| {worst['trace']:.0e}, herm {worst['herm']:.0e}, "
              f"min eig {worst['min_eig']:.0e}, top Fock {worst['top']:.0e}; two-solver trace distance "
              f"g=0 {d0:.1e}, NP(N={N1}, t={30.0 / slow:.0f}) {d1:.1e}")
    report(8, ok, detail, time.perf_counter() - t0, 300.0)


def test_criterion_9_gap_convergence():
    t0 = time.perf_counter()
    g_r, g_cr, N = 0.4, 0.64, 30
    target = fl.adr(g_r, g_cr, KB, "NP")
    devs = []
    for eta in (25.0, 50.0, 100.0):
        L = q.liouvillian(ModelParams.from_renormalized(g_r, g_cr, KB, eta), N)
        gap = -q.cavity_gap(L, N, eta).real
        devs.append((eta, gap, abs(gap - target) / target))
    ok = all(devs[i][2] > devs[i + 1][2] for i in range(len(devs) - 1))
    detail = f"kappa_ADR={target:.5f}; " + ", ".join(f"eta={e:g}: gap {g:.4f} rel dev {d:.3f}" for e, g, d in devs)
    report(9, ok, detail, time.perf_counter() - t0, 600.0)


# ---------------------------------------------------------------------------
# opt-in full scale


PAPER_SETS = [
    (0.43, 0.7, 0.0, 1),
    (0.5, 0.8, 0.0, 2),
    (0.55, 1.7, 0.0, 3),
    (0.35, 1.7, 0.0, 1),
    (0.35, 1.7, 0.15, 3),
]


@pytest.mark.paper_scale
@pytest.mark.parametrize("g_r,g_cr,gam,want", PAPER_SETS)
def test_paper_scale_modality(g_r, g_cr, gam, want):
    state = desk_state(g_r, g_cr, 200, 300, gam)
    got = modality(state, n_points=201)
    print(f"paper scale ({g_r},{g_cr}) G/W={gam}: modality {got}, want {want}, diagnostics {state.check()}")
    assert got == want


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
