import numpy as np
import pytest
from scipy.linalg import expm

from aqrm import quantum as q
from aqrm import wigner as wg


def coherent_rho(beta, N):
    psi = q.coherent_vector(beta, N)
    return np.outer(psi, psi.conj())


def displaced_parity_oracle(rho, alpha, pad=80):
    # displace in a larger space so truncation does not distort D(alpha)
    N = rho.shape[0] + pad
    rho = np.pad(rho, (0, pad))
    a = np.diag(np.sqrt(np.arange(1, N)), 1)
    D = expm(alpha * a.conj().T - np.conj(alpha) * a)
    parity = np.diag((-1.0) ** np.arange(N))
    return (2 / np.pi) * np.trace(D.conj().T @ rho @ D @ parity).real


def test_vacuum_peak_and_gaussian():
    rho = np.zeros((10, 10), complex)
    rho[0, 0] = 1
    axis = np.linspace(-3, 3, 61)
    g = wg.wigner(rho, axis, axis)
    assert g.values[30, 30] == pytest.approx(2 / np.pi, abs=1e-14)
    X, Y = np.meshgrid(axis, axis)
    assert np.max(np.abs(g.values - 2 / np.pi * np.exp(-2 * (X**2 + Y**2)))) < 1e-14
    assert g.integral() == pytest.approx(1, abs=1e-2)


def test_coherent_state_centered():
    beta = 1.5 - 0.75j
    g = wg.wigner(coherent_rho(beta, 40), np.linspace(-2, 4, 121), np.linspace(-3.5, 2.5, 121))
    (x, y, v), = g.maxima()
    assert (x, y) == pytest.approx((beta.real, beta.imag), abs=0.026)
    assert v == pytest.approx(2 / np.pi, abs=1e-3)
    assert g.modality() == 1


def test_fock_one_negative_at_origin():
    rho = np.zeros((4, 4), complex)
    rho[1, 1] = 1
    g = wg.wigner(rho, np.array([0.0]), np.array([0.0]))
    assert g.values[0, 0] == pytest.approx(-2 / np.pi)


def test_matches_displaced_parity_oracle():
    rng = np.random.default_rng(0)
    N = 12
    m = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    rho = m @ m.conj().T
    rho /= np.trace(rho)
    pts = rng.normal(scale=1.2, size=(6, 2))
    for x, y in pts:
        w = wg.wigner(rho, np.array([x]), np.array([y])).values[0, 0]
        assert w == pytest.approx(displaced_parity_oracle(rho, complex(x, y)), abs=1e-12)


def test_stable_at_large_dimension():
    beta = 9.0
    re, im = np.linspace(6, 12, 61), np.linspace(-3, 3, 61)
    g = wg.wigner(coherent_rho(beta, 300), re, im)
    X, Y = np.meshgrid(re, im)
    exact = 2 / np.pi * np.exp(-2 * ((X - beta) ** 2 + Y**2))
    assert np.max(np.abs(g.values - exact)) < 1e-6


def test_cat_fringes_count_as_maxima():
    N = 60
    psi = q.coherent_vector(2.5, N) + q.coherent_vector(-2.5, N)
    psi /= np.linalg.norm(psi)
    assert wg.wigner(np.outer(psi, psi.conj()), n_points=161).modality() > 2


def test_mixture_is_bimodal_and_integrates_to_trace():
    N = 60
    rho = 0.2 * (coherent_rho(2.5, N) + coherent_rho(-2.5, N))
    g = wg.wigner(rho, n_points=161)
    assert g.modality() == 2
    assert g.integral() == pytest.approx(0.4, abs=1e-2)
    hdr = g.header()
    assert hdr["nx"] == 161 and hdr["re_min"] == -hdr["re_max"]


def test_prominence_filter_drops_ridge_steps():
    # a tilted squeezed lobe, three grid steps across its narrow axis, leaves
    # shallow staircase maxima along the ridge
    axis = np.linspace(-3, 3, 121)
    X, Y = np.meshgrid(axis, axis)
    t = 0.37
    u = (Y - t * X) / np.hypot(1, t)
    v = (X + t * Y) / np.hypot(1, t)
    grid = wg.WignerGrid(axis, axis, np.exp(-u**2 / (2 * 0.15**2) - v**2 / (2 * 1.5**2)))
    assert len(wg.local_maxima(grid, prominence=0.0)) > 1
    assert grid.modality() == 1
