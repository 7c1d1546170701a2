"""Mean-field steady states, their stability and the phase diagram.

All quantities are dimensionless: couplings in units of sqrt(omega0 * Omega),
the damping in units of omega0 and the coherence is the renormalized
``alpha_bar = sqrt(omega0 / Omega) <a>``.  The anisotropy is
``epsilon = g_cr / g_r`` with ``g = g_r``.

Internally the closed forms are written in ``(g_r, g_cr)`` after rationalizing,
e.g. the superradiant spin polarization

    s_z = -(1 + k^2) / (g_r^2 + g_cr^2 + sqrt(4 g_r^2 g_cr^2 - k^2 (g_r^2 - g_cr^2)^2))

which is algebraically identical to the textbook ``[(1 + e^2) - sqrt(..)] / ((1 - e^2)^2 g^2)``
but has no 0/0 at the isotropic point epsilon = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import NoSolution
from .lines import Line

# Below this |epsilon - 1| the isotropic closed forms are used.
SYMMETRIC_BAND = 1e-7
# |A| below this is treated as a phase boundary.
STABILITY_TOL = 1e-12
# relative band in which the SP existence discriminant counts as zero
EXISTENCE_TOL = 1e-12

NP_DOWN = "NP_down"
NP_UP = "NP_up"
SP_MINUS = "SP_minus"
SP_PLUS = "SP_plus"


@dataclass(frozen=True)
class MeanFieldSolution:
    alpha_bar: complex
    s_x: float
    s_y: float
    s_z: float
    branch: str
    sign: int = 0
    stable: bool = False
    stability_A: float = math.nan
    stability_B: float = math.nan

    @property
    def x_bar(self) -> float:
        return self.alpha_bar.real

    @property
    def y_bar(self) -> float:
        return self.alpha_bar.imag

    @property
    def is_normal(self) -> bool:
        return self.branch in (NP_DOWN, NP_UP)


@dataclass(frozen=True)
class PhasePoint:
    g_r: float
    g_cr: float
    kappa_bar: float
    phase: str  # "NP", "SP", "Bistable" or "boundary"
    solutions: list = field(default_factory=list)
    np_up: MeanFieldSolution | None = None


@dataclass(frozen=True)
class PhaseBoundaries:
    g_c_minus: float | None
    g_c_plus: float | None
    epsilon_min: float
    epsilon_max: float
    tricritical: tuple


# ---------------------------------------------------------------------------
# closed forms


def _discriminant(g_r, g_cr, kappa_bar):
    """g^4 (4 e^2 - k^2 (1 - e^2)^2), the SP existence discriminant scaled by g^4."""
    return 4.0 * g_r**2 * g_cr**2 - kappa_bar**2 * (g_r**2 - g_cr**2) ** 2


def _marginal_existence(g_r, g_cr, kappa_bar):
    """True where the point lies on the first-order line eps = eps_min or eps_max."""
    d = _discriminant(g_r, g_cr, kappa_bar)
    scale = (1.0 + kappa_bar**2) * (g_r**2 + g_cr**2) ** 2
    return np.abs(d) <= EXISTENCE_TOL * scale


def discriminant(epsilon, kappa_bar):
    """4 e^2 - k^2 (1 - e^2)^2; the SP solution is real iff this is >= 0."""
    return 4.0 * epsilon**2 - kappa_bar**2 * (1.0 - epsilon**2) ** 2


def np_stability_A(g, epsilon, kappa_bar):
    """Stability coefficient of the s_z = -1 normal phase; stable iff positive."""
    return 1.0 + kappa_bar**2 - 2.0 * (1.0 + epsilon**2) * g**2 + (1.0 - epsilon**2) ** 2 * g**4


def np_stability_A_gr(g_r, g_cr, kappa_bar):
    """Same as :func:`np_stability_A` in (g_r, g_cr) coordinates; vectorizes."""
    return 1.0 + kappa_bar**2 - 2.0 * (g_r**2 + g_cr**2) + (g_r**2 - g_cr**2) ** 2


def epsilon_bounds(kappa_bar):
    """Anisotropy window ``(epsilon_min, epsilon_max)`` in which the SP exists.

    ``epsilon_max, min = (±1 + sqrt(1 + k^2)) / k``; at ``k = 0`` returns ``(0, inf)``.
    """
    if kappa_bar < 0:
        raise ValueError("kappa_bar must be >= 0")
    if kappa_bar == 0.0:
        return 0.0, math.inf
    root = math.sqrt(1.0 + kappa_bar**2)
    # (root - 1) / k cancels badly for small k
    eps_min = kappa_bar / (root + 1.0)
    eps_max = (root + 1.0) / kappa_bar
    return eps_min, eps_max


def _in_window(epsilon, kappa_bar):
    eps_min, eps_max = epsilon_bounds(kappa_bar)
    return eps_min <= epsilon <= eps_max


def critical_couplings(epsilon, kappa_bar):
    """Roots ``(g_c_minus, g_c_plus)`` of ``A_np(g) = 0`` or ``None`` outside the window.

    At the isotropic point ``g_c_plus`` is ``inf``.
    """
    if not math.isfinite(epsilon) or not _in_window(epsilon, kappa_bar):
        return None
    d = max(discriminant(epsilon, kappa_bar), 0.0)
    root = math.sqrt(d)
    s = 1.0 + epsilon**2
    g_minus = math.sqrt((1.0 + kappa_bar**2) / (s + root))
    if abs(epsilon - 1.0) < SYMMETRIC_BAND:
        return math.sqrt(1.0 + kappa_bar**2) / 2.0, math.inf
    g_plus = math.sqrt((s + root) / (1.0 - epsilon**2) ** 2)
    return g_minus, g_plus


def tricritical_points(kappa_bar):
    """The two tricritical points ``((g_r, g_cr), (g_r, g_cr))`` for ``epsilon_min`` and ``epsilon_max``.

    There the discriminant vanishes and ``g_c_minus = g_c_plus = sqrt(1 + e^2) / |1 - e^2|``.
    """
    if not kappa_bar > 0:
        raise ValueError("tricritical points need kappa_bar > 0")
    points = []
    for eps in epsilon_bounds(kappa_bar):
        g = math.sqrt(1.0 + eps**2) / abs(1.0 - eps**2)
        points.append((g, eps * g))
    return tuple(points)


def phase_boundaries(epsilon, kappa_bar) -> PhaseBoundaries:
    eps_min, eps_max = epsilon_bounds(kappa_bar)
    cc = critical_couplings(epsilon, kappa_bar)
    g_minus, g_plus = cc if cc is not None else (None, None)
    tri = tricritical_points(kappa_bar) if kappa_bar > 0 else ()
    return PhaseBoundaries(g_minus, g_plus, eps_min, eps_max, tri)


# ---------------------------------------------------------------------------
# fixed points


def sp_spin_z(g, epsilon, kappa_bar):
    """Spin polarization of the superradiant branch.

    Raises :class:`NoSolution` when the discriminant is negative or the value is
    not in the open interval (-1, 0).
    """
    if not g > 0:
        raise NoSolution("SP needs g > 0")
    if abs(epsilon - 1.0) < SYMMETRIC_BAND:
        s_z = -(1.0 + kappa_bar**2) / (4.0 * g**2)
    else:
        d = discriminant(epsilon, kappa_bar)
        if d < 0:
            raise NoSolution(f"epsilon={epsilon} outside the SP window")
        s_z = -(1.0 + kappa_bar**2) / (g**2 * ((1.0 + epsilon**2) + math.sqrt(d)))
    if not -1.0 < s_z < 0.0:
        raise NoSolution(f"s_z={s_z} is unphysical (g below g_c_minus)")
    return s_z


def sp_plus_spin_z(g, epsilon, kappa_bar):
    """The other root ``s_z^+`` of ``det L_cl = 0``.  Must lie in (-1, 1)."""
    if not g > 0 or abs(epsilon - 1.0) < SYMMETRIC_BAND:
        raise NoSolution("s_z^+ needs g > 0 and epsilon != 1")
    d = discriminant(epsilon, kappa_bar)
    if d < 0:
        raise NoSolution(f"epsilon={epsilon} outside the SP window")
    s_z = -((1.0 + epsilon**2) + math.sqrt(d)) / ((1.0 - epsilon**2) ** 2 * g**2)
    if not -1.0 < s_z < 1.0:
        raise NoSolution(f"s_z^+={s_z} is outside (-1, 1)")
    return s_z


def _spin_from_coherence(alpha_bar, s_z, g_r, g_cr):
    # s_+ = -(g_r alpha* + g_cr alpha) s_z, s_x = 2 Re s_+, s_y = 2 Im s_+
    s_plus = -(g_r * np.conj(alpha_bar) + g_cr * alpha_bar) * s_z
    return 2.0 * s_plus.real, 2.0 * s_plus.imag


def _coherence_minus(g, epsilon, kappa_bar, s_z, sign):
    one_plus = 1.0 + g**2 * (1.0 + epsilon) ** 2 * s_z
    one_minus = 1.0 + g**2 * (1.0 - epsilon) ** 2 * s_z
    num = 1.0 - s_z**2
    x = sign * math.sqrt(
        num / (4.0 * g**2 * s_z**2 * ((1.0 + epsilon) ** 2 + kappa_bar**2 * (1.0 - epsilon) ** 2 / one_minus**2))
    )
    # |y| from the companion closed form; sign(y) = sign(x) because one_minus > 0 on this branch.
    # At kappa_bar = 0 that form is 0/0, the row relation y = k x / one_minus is not.
    if kappa_bar > 0 and abs(one_plus) > 1e-8:
        y = math.copysign(
            math.sqrt(
                num / (4.0 * g**2 * s_z**2 * ((1.0 - epsilon) ** 2 + kappa_bar**2 * (1.0 + epsilon) ** 2 / one_plus**2))
            ),
            x,
        )
    else:
        y = kappa_bar * x / one_minus
    return complex(x, y)


def _coherence_nullspace(g, epsilon, kappa_bar, s_z, sign):
    """Solve ``L_cl (x, y, s_x, s_y) = 0`` for a given s_z and fix the norm from |s| = 1."""
    a = 1.0 + g**2 * (1.0 + epsilon) ** 2 * s_z
    b = 1.0 + g**2 * (1.0 - epsilon) ** 2 * s_z
    # rows: a x + k y = 0 and k x - b y = 0, consistent since a b + k^2 = 0
    v1 = np.array([b, kappa_bar])
    v2 = np.array([kappa_bar, -a])
    x, y = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
    s_x = -2.0 * g * (1.0 + epsilon) * x * s_z
    s_y = 2.0 * g * (1.0 - epsilon) * y * s_z
    scale = math.sqrt((1.0 - s_z**2) / (s_x**2 + s_y**2))
    x, y = x * scale, y * scale
    if x < 0 or (x == 0 and y < 0):
        x, y = -x, -y
    return complex(sign * x, sign * y)


def stability_coefficients(sol: MeanFieldSolution, g, epsilon, kappa_bar):
    """Coefficients ``(A, B)`` of the slow characteristic polynomial ``A + 2 k B mu + B mu^2``.

    Valid to leading order in Omega / omega0. ``B > 0`` always, so the fixed
    point is stable iff ``A > 0``.
    """
    x, y, s_z = sol.alpha_bar.real, sol.alpha_bar.imag, sol.s_z
    k2 = kappa_bar**2
    q = (1.0 - epsilon) ** 2 * y**2 + (1.0 + epsilon) ** 2 * x**2
    A = (
        1.0
        + k2
        + 4.0 * g**2 * (1.0 + k2) * q
        + 2.0 * g**2 * (1.0 + epsilon**2) * s_z
        + g**4 * (epsilon**2 - 1.0) ** 2 * (s_z**2 + 4.0 * s_z * (x**2 + y**2))
    )
    B = 1.0 + 4.0 * g**2 * q
    return A, B


def slow_eigenvalues(A, B, kappa_bar):
    """``mu / omega0 = -k ± sqrt(k^2 - A / B)`` (principal complex root)."""
    root = np.sqrt(complex(kappa_bar**2 - A / B))
    return -kappa_bar + root, -kappa_bar - root


def _with_stability(sol, g, epsilon, kappa_bar):
    A, B = stability_coefficients(sol, g, epsilon, kappa_bar)
    return MeanFieldSolution(
        sol.alpha_bar, sol.s_x, sol.s_y, sol.s_z, sol.branch, sol.sign,
        stable=bool(A > STABILITY_TOL), stability_A=A, stability_B=B,
    )


def np_solution(g, epsilon, kappa_bar, up=False) -> MeanFieldSolution:
    s_z = 1.0 if up else -1.0
    sol = MeanFieldSolution(0j, 0.0, 0.0, s_z, NP_UP if up else NP_DOWN)
    return _with_stability(sol, g, epsilon, kappa_bar)


def sp_solution(g, epsilon, kappa_bar, sign=1) -> MeanFieldSolution:
    """Symmetry-broken superradiant fixed point with ``sign(x_bar) = sign``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    s_z = sp_spin_z(g, epsilon, kappa_bar)
    alpha = _coherence_minus(g, epsilon, kappa_bar, s_z, sign)
    s_x, s_y = _spin_from_coherence(alpha, s_z, g, epsilon * g)
    sol = MeanFieldSolution(alpha, float(s_x), float(s_y), s_z, SP_MINUS, sign)
    return _with_stability(sol, g, epsilon, kappa_bar)


def sp_plus_branch(g, epsilon, kappa_bar, sign=1) -> MeanFieldSolution:
    s_z = sp_plus_spin_z(g, epsilon, kappa_bar)
    alpha = _coherence_nullspace(g, epsilon, kappa_bar, s_z, sign)
    s_x, s_y = _spin_from_coherence(alpha, s_z, g, epsilon * g)
    sol = MeanFieldSolution(alpha, float(s_x), float(s_y), s_z, SP_PLUS, sign)
    return _with_stability(sol, g, epsilon, kappa_bar)


def symmetric_sp_solution(g, kappa_bar, sign=1):
    """Isotropic closed forms ``(s_z, alpha_bar)``; raises NoSolution below g_c."""
    s_z = -(1.0 + kappa_bar**2) / (2.0 * g) ** 2
    if not -1.0 < s_z < 0.0:
        raise NoSolution("below the isotropic critical coupling")
    alpha = sign * g / (1.0 - 1j * kappa_bar) * math.sqrt(1.0 - (1.0 + kappa_bar**2) ** 2 / (2.0 * g) ** 4)
    return s_z, alpha


def fixed_point_residual(sol: MeanFieldSolution, g_r, g_cr, kappa_bar) -> float:
    """Max-norm residual of the three stationarity conditions."""
    a = sol.alpha_bar
    s_plus = 0.5 * complex(sol.s_x, sol.s_y)
    r1 = -(1.0 - 1j * kappa_bar) * a + g_r * s_plus.conjugate() + g_cr * s_plus
    r2 = s_plus + (g_r * a.conjugate() + g_cr * a) * sol.s_z
    r3 = (g_r * a + g_cr * a.conjugate()) * s_plus - (g_r * a.conjugate() + g_cr * a) * s_plus.conjugate()
    return max(abs(r1), abs(r2), abs(r3))


def mean_field_solutions(g_r, g_cr, kappa_bar) -> list[MeanFieldSolution]:
    """Every fixed point at a parameter point: NP_down, NP_up and both SP signs when present."""
    g, eps = _g_eps(g_r, g_cr)
    out = [np_solution(g, eps, kappa_bar), np_solution(g, eps, kappa_bar, up=True)]
    if g > 0 and math.isfinite(eps):
        for sign in (1, -1):
            try:
                out.append(sp_solution(g, eps, kappa_bar, sign))
            except NoSolution:
                break
    return out


def _g_eps(g_r, g_cr):
    if g_r == 0.0:
        return 0.0, (math.inf if g_cr > 0 else math.nan)
    return g_r, g_cr / g_r


# ---------------------------------------------------------------------------
# classification


def _label(A):
    if A > STABILITY_TOL:
        return True
    if A < -STABILITY_TOL:
        return False
    return None


def classify_phase(g_r, g_cr, kappa_bar) -> PhasePoint:
    """Phase label from the stability of NP_down and SP_minus.

    The s_z = +1 normal state is reported in ``np_up`` but never enters the label.
    """
    g, eps = _g_eps(g_r, g_cr)
    np_A = np_stability_A_gr(g_r, g_cr, kappa_bar)
    np_ok = _label(np_A)
    np_down = _with_stability_A(MeanFieldSolution(0j, 0.0, 0.0, -1.0, NP_DOWN), np_A)
    up_A = 1.0 + kappa_bar**2 + 2.0 * (g_r**2 + g_cr**2) + (g_r**2 - g_cr**2) ** 2
    np_up = _with_stability_A(MeanFieldSolution(0j, 0.0, 0.0, 1.0, NP_UP), up_A)

    sp_sols = []
    sp_ok = False
    if g > 0 and math.isfinite(eps):
        try:
            sp_sols = [sp_solution(g, eps, kappa_bar, s) for s in (1, -1)]
        except NoSolution:
            sp_sols = []
        sp_ok = bool(sp_sols) and _label(sp_sols[0].stability_A) is True
        if sp_sols and (_label(sp_sols[0].stability_A) is None or _marginal_existence(g_r, g_cr, kappa_bar)):
            sp_ok = None

    stable = []
    if np_ok is None or sp_ok is None:
        phase = "boundary"
    elif np_ok and sp_ok:
        phase = "Bistable"
    elif np_ok:
        phase = "NP"
    elif sp_ok:
        phase = "SP"
    else:
        phase = "boundary"
    if np_ok:
        stable.append(np_down)
    if sp_ok:
        stable.extend(sp_sols)
    return PhasePoint(g_r, g_cr, kappa_bar, phase, stable, np_up)


def _with_stability_A(sol, A):
    return MeanFieldSolution(
        sol.alpha_bar, sol.s_x, sol.s_y, sol.s_z, sol.branch, sol.sign,
        stable=bool(A > STABILITY_TOL), stability_A=A, stability_B=1.0,
    )


def classify_grid(g_r, g_cr, kappa_bar) -> np.ndarray:
    """Vectorized phase labels on broadcastable arrays of couplings.

    Returns an object array of "NP", "SP", "Bistable" or "boundary".  Agrees
    with :func:`classify_phase` (which additionally evaluates the SP stability
    coefficient) everywhere off the boundaries.
    """
    g_r, g_cr = np.broadcast_arrays(np.asarray(g_r, float), np.asarray(g_cr, float))
    A = np_stability_A_gr(g_r, g_cr, kappa_bar)
    d = _discriminant(g_r, g_cr, kappa_bar)
    with np.errstate(divide="ignore", invalid="ignore"):
        s_z = -(1.0 + kappa_bar**2) / (g_r**2 + g_cr**2 + np.sqrt(np.maximum(d, 0.0)))
    sp = (d >= 0) & (s_z > -1.0) & (g_r > 0)
    npok = A > STABILITY_TOL
    out = np.full(g_r.shape, "boundary", dtype=object)
    out[npok & ~sp] = "NP"
    out[~npok & sp & (A < -STABILITY_TOL)] = "SP"
    out[npok & sp] = "Bistable"
    out[sp & _marginal_existence(g_r, g_cr, kappa_bar)] = "boundary"
    return out


# ---------------------------------------------------------------------------
# transitions along a line


@dataclass(frozen=True)
class Transition:
    g: float
    kind: str  # "g_c_minus", "g_c_plus", "g_eps_min", "g_eps_max"
    epsilon: float


def line_transitions(line: Line, kappa_bar, g_min=1e-3, g_max=4.0, num=4001) -> list[Transition]:
    """Locate NP stability changes and SP-window crossings along ``line``.

    NP boundaries are sign changes of ``A_np``; first-order SP boundaries are
    sign changes of the existence discriminant where the SP is physical on the
    inside.  Each root is polished with Brent's method.
    """
    gs = np.linspace(g_min, g_max, num)

    def a_np(g):
        gr, gcr = line.point(g)
        return np_stability_A_gr(gr, gcr, kappa_bar)

    def disc(g):
        gr, gcr = line.point(g)
        return _discriminant(gr, gcr, kappa_bar)

    def disc_noise(g):
        gr, gcr = line.point(g)
        return EXISTENCE_TOL * (1.0 + kappa_bar**2) * (gr**2 + gcr**2) ** 2

    events = []
    for fn, tag in ((a_np, "np"), (disc, "sp")):
        vals = fn(gs)
        noise = disc_noise(gs[1:]) if tag == "sp" else STABILITY_TOL
        # sign flips inside the round-off band (a line lying on a boundary) are not crossings
        real = (np.sign(vals[:-1]) * np.sign(vals[1:]) < 0) & (np.maximum(np.abs(vals[:-1]), np.abs(vals[1:])) > noise)
        for i in np.nonzero(real)[0]:
            g0 = brentq(fn, gs[i], gs[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
            eps = line.epsilon(g0)
            if tag == "np":
                cc = critical_couplings(eps, kappa_bar)
                if cc is None:
                    continue
                kind = "g_c_minus" if abs(g0 - cc[0]) <= abs(g0 - cc[1]) else "g_c_plus"
            else:
                eps_min, eps_max = epsilon_bounds(kappa_bar)
                cc = critical_couplings(eps_min if abs(eps - eps_min) < abs(eps - eps_max) else eps_max, kappa_bar)
                # only a transition if the SP is physical where it exists
                if cc is None or g0 < cc[0]:
                    continue
                kind = "g_eps_min" if abs(eps - eps_min) < abs(eps - eps_max) else "g_eps_max"
            events.append(Transition(float(g0), kind, float(eps)))
    return sorted(events, key=lambda e: e.g)
