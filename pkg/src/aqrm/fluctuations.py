"""Linearized quantum fluctuations around the mean-field phases.

In the limit eta -> infinity the oscillator obeys a quadratic master equation
in either phase.  This module evaluates its first-moment (dynamical) matrix,
the asymptotic decay rate (ADR) ``-Re l^+``, the steady-state excitation number
and, in the superradiant phase, the effective-Hamiltonian coefficients
``P a^dag a + Q a a + Q^* a^dag a^dag`` obtained in the displaced frame.

Everything is in units of omega0.  Excitation numbers are fluctuations only:
in the SP the coherent part ``eta |alpha_bar|^2`` is not included.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import meanfield
from .errors import BoundaryDivergence, FitDegenerate
from .lines import Line

DIVERGENCE_TOL = 1e-12


@dataclass(frozen=True)
class FluctuationResult:
    phase: str
    eigenvalues: tuple  # (l_plus, l_minus)
    adr: float
    excitation_number: float

    @property
    def stable(self) -> bool:
        return self.eigenvalues[0].real < 0


@dataclass(frozen=True)
class SpCoefficients:
    """Displaced-frame coefficients of the superradiant phase (units of omega0)."""

    xi: float
    u_bar: complex
    v_bar: complex
    w_bar: complex
    P: float
    Q: complex
    s_z: float
    alpha_bar: complex

    def ground_energy(self, eta: float) -> float:
        """``E_sp / omega0 = eta |alpha_bar|^2 - eta / (2 |s_z|) - |s_z| |v_bar|^2``."""
        return eta * abs(self.alpha_bar) ** 2 - eta / (2.0 * abs(self.s_z)) - abs(self.s_z) * abs(self.v_bar) ** 2


def _sqrt(z):
    return np.sqrt(complex(z))


# ---------------------------------------------------------------------------
# normal phase


def np_matrix(g_r, g_cr, kappa_bar) -> np.ndarray:
    """First-moment matrix ``L_np / omega0`` acting on ``(<a>, <a^dag>)``."""
    G = g_r**2 + g_cr**2
    c = 2.0 * g_r * g_cr
    return np.array([
        [1j * (G - 1.0) - kappa_bar, 1j * c],
        [-1j * c, 1j * (1.0 - G) - kappa_bar],
    ])


def _np_radicand(g_r, g_cr):
    # 2 g^2 (1 + e^2) - g^4 (1 - e^2)^2 - 1
    return 4.0 * g_r**2 * g_cr**2 - (g_r**2 + g_cr**2 - 1.0) ** 2


def np_eigenvalues(g, epsilon, kappa_bar):
    """``l^± = -k ± sqrt(2 g^2 (1 + e^2) - g^4 (1 - e^2)^2 - 1)``, principal root."""
    root = _sqrt(2.0 * g**2 * (1.0 + epsilon**2) - g**4 * (1.0 - epsilon**2) ** 2 - 1.0)
    return -kappa_bar + root, -kappa_bar - root


def np_moment_system(g_r, g_cr, kappa_bar):
    """``(M, Y)`` with ``d/dt (<a^dag a>, <a^2>, <a^dag 2>) = M s + Y``."""
    c = g_r * g_cr
    G = g_r**2 + g_cr**2
    M = np.array([
        [-2.0 * kappa_bar, -2j * c, 2j * c],
        [4j * c, 2j * (G - 1.0) - 2.0 * kappa_bar, 0.0],
        [-4j * c, 0.0, 2j * (1.0 - G) - 2.0 * kappa_bar],
    ])
    Y = np.array([0.0, 2j * c, -2j * c])
    return M, Y


def np_excitation(g, epsilon, kappa_bar, method="closed"):
    """Steady-state ``<a^dag a>`` in the normal phase.

    ``method="closed"`` evaluates ``2 g^4 e^2 / A_np``; ``method="moments"``
    solves the linear second-moment system.  Returns ``inf`` where the normal
    phase is unstable and raises :class:`BoundaryDivergence` on the boundary.
    """
    den = np_excitation_denominator(g, epsilon, kappa_bar)
    if abs(den) < DIVERGENCE_TOL:
        raise BoundaryDivergence(f"NP excitation number diverges (denominator {den:.3g})")
    if den < 0:
        return math.inf
    if method == "closed":
        return 2.0 * g**4 * epsilon**2 / den
    if method == "moments":
        M, Y = np_moment_system(g, epsilon * g, kappa_bar)
        s = -np.linalg.solve(M, Y)
        return float(s[0].real)
    raise ValueError(f"unknown method {method!r}")


def np_excitation_denominator(g, epsilon, kappa_bar):
    return g**4 * (1.0 - epsilon**2) ** 2 - 2.0 * g**2 * (1.0 + epsilon**2) + kappa_bar**2 + 1.0


def np_fluctuations(g_r, g_cr, kappa_bar) -> FluctuationResult:
    l_plus, l_minus = np_eigenvalues_gr(g_r, g_cr, kappa_bar)
    den = meanfield.np_stability_A_gr(g_r, g_cr, kappa_bar)
    n = math.inf if den <= DIVERGENCE_TOL else 2.0 * g_r**2 * g_cr**2 / den
    return FluctuationResult("NP", (l_plus, l_minus), _adr_from_radicand(_np_radicand(g_r, g_cr), den, kappa_bar), n)


def np_eigenvalues_gr(g_r, g_cr, kappa_bar):
    root = _sqrt(_np_radicand(g_r, g_cr))
    return -kappa_bar + root, -kappa_bar - root


def _adr_from_radicand(radicand, kappa2_minus_radicand, kappa_bar):
    """``k - Re sqrt(radicand)`` without cancellation near a boundary."""
    if radicand <= 0:
        return kappa_bar
    return kappa2_minus_radicand / (kappa_bar + math.sqrt(radicand))


# ---------------------------------------------------------------------------
# superradiant phase


def general_uv(g_r, g_cr, alpha_bar, s_z):
    """``(u_bar, v_bar, w_bar)`` from the mean-field coherence (general form).

    The combination entering u, v is ``(2 b)^2`` with ``b = g_r a^* + g_cr a``,
    the off-diagonal entry of the unitary that diagonalizes the spin part.
    """
    root_xi = 1.0 / abs(s_z)
    xi = root_xi**2
    b = g_r * np.conj(alpha_bar) + g_cr * alpha_bar
    corr = (2.0 * b) ** 2 / (xi + root_xi)
    u = 0.5 * (g_r * (1.0 + 1.0 / root_xi) - g_cr * corr)
    v = 0.5 * (g_cr * (1.0 + 1.0 / root_xi) - g_r * corr)
    w = (g_r * b + g_cr * (g_r * alpha_bar + g_cr * np.conj(alpha_bar))) / root_xi
    return complex(u), complex(v), complex(w)


def simplified_uv(g, epsilon, kappa_bar, s_z):
    """``(u_bar, v_bar)`` after inserting the closed-form SP coherence.

    The imaginary parts carry the signed factor ``1 - e^2``, which matches the
    coherence convention ``sign(y) = sign(x)``.
    """
    a = abs(s_z)
    root = math.sqrt(max(meanfield.discriminant(epsilon, kappa_bar), 0.0))
    im = 0.25 * g * (1.0 - a) * (1.0 - epsilon**2) * kappa_bar
    u = complex(0.5 * g * (1.0 + a - 0.5 * (1.0 - a) * root), im)
    v = complex(0.5 * g * (epsilon * (1.0 + a) - 0.5 / epsilon * (1.0 - a) * root), im / epsilon)
    return u, v


def sp_coefficients(g, epsilon, kappa_bar, sign=1, form="simplified") -> SpCoefficients:
    """Effective quadratic Hamiltonian of the SP at ``(g, epsilon, kappa_bar)``.

    ``form`` selects how ``u_bar, v_bar`` are evaluated: ``"simplified"`` (closed
    form in g, epsilon, kappa_bar) or ``"general"`` (from the mean-field
    coherence).  Raises :class:`~aqrm.errors.NoSolution` outside the SP.
    """
    sol = meanfield.sp_solution(g, epsilon, kappa_bar, sign)
    s_z, alpha = sol.s_z, sol.alpha_bar
    u_gen, v_gen, w = general_uv(g, epsilon * g, alpha, s_z)
    if form == "simplified":
        u, v = simplified_uv(g, epsilon, kappa_bar, s_z)
    elif form == "general":
        u, v = u_gen, v_gen
    else:
        raise ValueError(f"unknown form {form!r}")
    a = abs(s_z)
    P = 1.0 - a * (abs(u) ** 2 + abs(v) ** 2)
    Q = -a * np.conj(u) * v
    return SpCoefficients(1.0 / s_z**2, u, v, w, P, complex(Q), s_z, alpha)


def sp_matrix(coeffs: SpCoefficients, kappa_bar) -> np.ndarray:
    """``L_sp / omega0`` acting on ``(<a>, <a^dag>)`` in the displaced frame."""
    P, Q = coeffs.P, coeffs.Q
    return np.array([
        [-1j * P - kappa_bar, -2j * np.conj(Q)],
        [2j * Q, 1j * P - kappa_bar],
    ])


def sp_eigenvalues(coeffs: SpCoefficients, kappa_bar):
    root = _sqrt(4.0 * abs(coeffs.Q) ** 2 - coeffs.P**2)
    return -kappa_bar + root, -kappa_bar - root


def sp_excitation_denominator(coeffs: SpCoefficients, kappa_bar):
    return coeffs.P**2 - 4.0 * abs(coeffs.Q) ** 2 + kappa_bar**2


def sp_excitation(coeffs: SpCoefficients, kappa_bar):
    """``2 |Q|^2 / (P^2 - 4 |Q|^2 + k^2)``; fluctuation part only."""
    den = sp_excitation_denominator(coeffs, kappa_bar)
    if abs(den) < DIVERGENCE_TOL:
        raise BoundaryDivergence(f"SP excitation number diverges (denominator {den:.3g})")
    if den < 0:
        return math.inf
    return 2.0 * abs(coeffs.Q) ** 2 / den


def quadratic_moment_system(P, Q, kappa_bar):
    """Second-moment equations for ``H = P a^dag a + Q a a + Q^* a^dag a^dag`` with ``k D[a]``.

    Same layout as :func:`np_moment_system`.
    """
    Qc = np.conj(Q)
    M = np.array([
        [-2.0 * kappa_bar, 2j * Q, -2j * Qc],
        [-4j * Qc, -2j * P - 2.0 * kappa_bar, 0.0],
        [4j * Q, 0.0, 2j * P - 2.0 * kappa_bar],
    ])
    Y = np.array([0.0, -2j * Qc, 2j * Q])
    return M, Y


def sp_fluctuations(g_r, g_cr, kappa_bar, sign=1) -> FluctuationResult:
    coeffs = sp_coefficients(g_r, g_cr / g_r, kappa_bar, sign)
    l_plus, l_minus = sp_eigenvalues(coeffs, kappa_bar)
    den = sp_excitation_denominator(coeffs, kappa_bar)
    n = math.inf if den <= DIVERGENCE_TOL else 2.0 * abs(coeffs.Q) ** 2 / den
    radicand = 4.0 * abs(coeffs.Q) ** 2 - coeffs.P**2
    return FluctuationResult("SP", (l_plus, l_minus), _adr_from_radicand(radicand, den, kappa_bar), n)


def adr(g_r, g_cr, kappa_bar, phase, sign=1):
    """Asymptotic decay rate ``-Re l^+`` of the given phase (``"NP"`` or ``"SP"``).

    Raises ``ValueError`` when that phase is unstable at the point.
    """
    if phase == "NP":
        res = np_fluctuations(g_r, g_cr, kappa_bar)
    elif phase == "SP":
        res = sp_fluctuations(g_r, g_cr, kappa_bar, sign)
    else:
        raise ValueError(f"unknown phase {phase!r}")
    if res.adr < -DIVERGENCE_TOL:
        raise ValueError(f"{phase} is unstable at g_r={g_r}, g_cr={g_cr}")
    return max(res.adr, 0.0)


# ---------------------------------------------------------------------------
# critical exponents


@dataclass(frozen=True)
class ExponentFit:
    nu: float
    r2: float
    g_c: float
    side: str
    window: tuple
    n_samples: int

    def to_dict(self) -> dict:
        return {"g_c": self.g_c, "side": self.side, "nu": self.nu, "r2": self.r2, "window": list(self.window)}


def approach_points(g_c, side, window=(1e-4, 1e-2), n=16):
    """Log-spaced couplings at distances ``window`` from ``g_c`` on ``side`` ("below"/"above")."""
    offsets = np.geomspace(window[0], window[1], n)
    if side == "below":
        return g_c - offsets
    if side == "above":
        return g_c + offsets
    raise ValueError("side must be 'below' or 'above'")


def fit_exponent(samples, g_c, side, diverging=False) -> ExponentFit:
    """Least-squares power law ``value ~ |g - g_c|^(±nu)`` in log-log coordinates.

    ``samples`` is a sequence of ``(g, value)`` pairs on one side of ``g_c``.
    For diverging quantities the fitted slope is negated.
    """
    g = np.array([s[0] for s in samples], dtype=float)
    v = np.array([s[1] for s in samples], dtype=float)
    dist = np.abs(g - g_c)
    if len(g) < 8:
        raise FitDegenerate(f"need >= 8 samples, got {len(g)}")
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise FitDegenerate("values must be finite and positive")
    if np.any(dist == 0) or np.log10(dist.max() / dist.min()) < 1.0:
        raise FitDegenerate("samples span less than one decade in |g - g_c|")
    lx, ly = np.log(dist), np.log(v)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    nu = -slope if diverging else slope
    return ExponentFit(float(nu), float(r2), float(g_c), side, (float(dist.min()), float(dist.max())), len(g))


def line_quantity(line: Line, kappa_bar, phase, quantity):
    """``g -> ADR`` or ``g -> excitation number`` of ``phase`` along ``line``."""

    def f(g):
        g_r, g_cr = line.point(g)
        res = np_fluctuations(g_r, g_cr, kappa_bar) if phase == "NP" else sp_fluctuations(g_r, g_cr, kappa_bar)
        return res.adr if quantity == "adr" else res.excitation_number

    return f


def scaling_fit(line: Line, kappa_bar, g_c, side, phase, quantity, window=(1e-4, 1e-2), n=16) -> ExponentFit:
    f = line_quantity(line, kappa_bar, phase, quantity)
    samples = [(g, f(g)) for g in approach_points(g_c, side, window, n)]
    return fit_exponent(samples, g_c, side, diverging=(quantity == "n"))
