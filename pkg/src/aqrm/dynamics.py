"""Semiclassical trajectories of the mean-field equations of motion.

Time is measured in units of 1/omega0 (``t_bar = omega0 t``).  Two systems are
available:

* the full system for ``(alpha_bar, s_x, s_y, s_z)`` at finite frequency ratio
  ``eta = Omega / omega0`` (stiff for large eta: the spin precesses at rate eta);
* the cavity-only equation obtained by adiabatically eliminating the spin in the
  limit eta -> infinity.

The spin equation for ``s_z`` carries the factor 2 that follows from the
Heisenberg equations; it is the factor that makes ``|s|`` a constant of motion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import meanfield
from .lines import Line

ALPHA_CAP = 1e3
CONVERGENCE_TOL = 1e-4
LIMIT_CYCLE_VAR = 1e-6

NP_DOWN = "NP_down"
NP_UP = "NP_up"
SP_POS = "SP+"
SP_NEG = "SP-"
UNRESOLVED = "Unresolved"


@dataclass(frozen=True)
class SemiclassicalState:
    alpha_bar: complex
    s_x: float
    s_y: float
    s_z: float
    t_bar: float = 0.0

    def as_vector(self) -> np.ndarray:
        return np.array([self.alpha_bar.real, self.alpha_bar.imag, self.s_x, self.s_y, self.s_z])


@dataclass
class Trajectory:
    t_bar: np.ndarray
    alpha_bar: np.ndarray
    spin: np.ndarray  # shape (n, 3)
    attractor: str = UNRESOLVED
    overflow: bool = False
    note: str = ""
    params: dict = field(default_factory=dict)

    @property
    def samples(self) -> list[SemiclassicalState]:
        return [
            SemiclassicalState(complex(a), float(s[0]), float(s[1]), float(s[2]), float(t))
            for t, a, s in zip(self.t_bar, self.alpha_bar, self.spin)
        ]

    @property
    def final(self) -> SemiclassicalState:
        s = self.spin[-1]
        return SemiclassicalState(complex(self.alpha_bar[-1]), *map(float, s), float(self.t_bar[-1]))

    def spin_norm_drift(self) -> float:
        return float(np.max(np.abs(np.sum(self.spin**2, axis=1) - 1.0)))


# ---------------------------------------------------------------------------
# right-hand sides


def full_rhs(t, state, g_r, g_cr, kappa_bar, eta):
    """Derivatives of ``(x, y, s_x, s_y, s_z)`` with respect to t_bar."""
    x, y, sx, sy, sz = state
    bx = (g_r + g_cr) * x
    by = (g_cr - g_r) * y
    return np.array([
        -kappa_bar * x + y + 0.5 * (g_r - g_cr) * sy,
        -x - kappa_bar * y + 0.5 * (g_r + g_cr) * sx,
        -eta * (sy + 2.0 * by * sz),
        eta * (sx + 2.0 * bx * sz),
        2.0 * eta * (by * sx - bx * sy),
    ])


def full_jacobian(t, state, g_r, g_cr, kappa_bar, eta):
    x, y, sx, sy, sz = state
    gp, gm = g_r + g_cr, g_cr - g_r
    return np.array([
        [-kappa_bar, 1.0, 0.0, -0.5 * gm, 0.0],
        [-1.0, -kappa_bar, 0.5 * gp, 0.0, 0.0],
        [0.0, -2.0 * eta * gm * sz, 0.0, -eta, -2.0 * eta * gm * y],
        [2.0 * eta * gp * sz, 0.0, eta, 0.0, 2.0 * eta * gp * x],
        [-2.0 * eta * gp * sy, 2.0 * eta * gm * sx, 2.0 * eta * gm * y, -2.0 * eta * gp * x, 0.0],
    ])


def fluctuation_matrix(sol: meanfield.MeanFieldSolution, g_r, g_cr, kappa_bar, eta) -> np.ndarray:
    """Linearization in ``(dx, dy, ds_x, ds_y)`` with ``ds_z`` eliminated by the spin-norm constraint."""
    state = [sol.alpha_bar.real, sol.alpha_bar.imag, sol.s_x, sol.s_y, sol.s_z]
    J = full_jacobian(0.0, state, g_r, g_cr, kappa_bar, eta)
    # s . ds = 0  =>  ds_z = -(s_x ds_x + s_y ds_y) / s_z
    P = np.zeros((5, 4))
    P[:4, :4] = np.eye(4)
    P[4, 2] = -sol.s_x / sol.s_z
    P[4, 3] = -sol.s_y / sol.s_z
    return J[:4] @ P


def adiabatic_rhs(alpha_bar, g_r, g_cr, kappa_bar, sz_sign=-1):
    """Cavity equation with the spin slaved to the field (eta -> infinity)."""
    drive = (g_r**2 + g_cr**2) * alpha_bar + 2.0 * g_r * g_cr * np.conj(alpha_bar)
    denom = np.sqrt(1.0 + 4.0 * np.abs(g_cr * alpha_bar + g_r * np.conj(alpha_bar)) ** 2)
    return -1j * (1.0 - 1j * kappa_bar) * alpha_bar - sz_sign * 1j * drive / denom


def slaved_spin(alpha_bar, g_r, g_cr, sz_sign=-1):
    """Spin ``(s_x, s_y, s_z)`` that instantaneously follows ``alpha_bar``."""
    alpha_bar = np.asarray(alpha_bar, dtype=complex)
    b = g_cr * alpha_bar + g_r * np.conj(alpha_bar)
    s_z = sz_sign / np.sqrt(1.0 + 4.0 * np.abs(b) ** 2)
    s_plus = -b * s_z
    return np.stack([2.0 * s_plus.real, 2.0 * s_plus.imag, s_z], axis=-1)


def initial_state(alpha_bar, g_r, g_cr, sz_sign=-1) -> SemiclassicalState:
    """Point on the Bloch sphere paired with a given field, on the ``sign(s_z) = sz_sign`` sheet."""
    s = slaved_spin(complex(alpha_bar), g_r, g_cr, sz_sign)
    return SemiclassicalState(complex(alpha_bar), float(s[0]), float(s[1]), float(s[2]))


# ---------------------------------------------------------------------------
# integration


class _Result:
    def __init__(self, t, y, status, message=""):
        self.t, self.y, self.status, self.message = t, y, status, message


def _implicit_midpoint(y0, t_max, t_eval, args, step, newton_tol=1e-13, max_iter=20):
    """Fixed-step implicit midpoint rule for the full system.

    The spin obeys ``s' = w(alpha) x s``; the midpoint rule conserves every
    quadratic invariant, so ``|s|`` is kept to round-off, and it is A-stable,
    so a step much longer than the precession period is allowed.
    """
    n_steps = max(1, int(math.ceil(t_max / step)))
    h = t_max / n_steps
    eye = np.eye(5)
    y = np.array(y0, dtype=float)
    out = np.empty((5, len(t_eval)))
    out[:, 0] = y
    k = 1
    for n in range(1, n_steps + 1):
        y_new = y + h * full_rhs(0.0, y, *args)
        for _ in range(max_iter):
            mid = 0.5 * (y + y_new)
            resid = y_new - y - h * full_rhs(0.0, mid, *args)
            delta = np.linalg.solve(eye - 0.5 * h * full_jacobian(0.0, mid, *args), resid)
            y_new -= delta
            if np.max(np.abs(delta)) < newton_tol * (1.0 + np.max(np.abs(y_new))):
                break
        t_new = n * h
        while k < len(t_eval) and t_eval[k] <= t_new + 1e-12 * t_max:
            # linear interpolation between grid points
            w = (t_eval[k] - (t_new - h)) / h
            out[:, k] = (1.0 - w) * y + w * y_new
            k += 1
        y = y_new
        if math.hypot(y[0], y[1]) > ALPHA_CAP:
            return _Result(t_eval[:k], out[:, :k], 1, "field exceeded cap")
    return _Result(t_eval, out, 0)


def _fixed_points(g_r, g_cr, kappa_bar):
    labels = {meanfield.NP_DOWN: NP_DOWN, meanfield.NP_UP: NP_UP}
    out = []
    for sol in meanfield.mean_field_solutions(g_r, g_cr, kappa_bar):
        if sol.branch == meanfield.SP_MINUS:
            label = SP_POS if sol.sign > 0 else SP_NEG
        else:
            label = labels[sol.branch]
        out.append((label, np.array([sol.x_bar, sol.y_bar, sol.s_x, sol.s_y, sol.s_z])))
    return out


def classify_attractor(traj: Trajectory, g_r, g_cr, kappa_bar, tol=CONVERGENCE_TOL) -> tuple[str, str]:
    """Label the terminal fixed point, requiring proximity over the final 10% of the run.

    The field must sit within ``tol`` of the fixed point. The spin only within
    ``sqrt(tol)``: at finite eta its fast precession is undamped and leaves a
    small ripple around the slaved direction.
    """
    if traj.overflow:
        return UNRESOLVED, f"|alpha_bar| exceeded {ALPHA_CAP:g}"
    t = traj.t_bar
    window = t >= t[-1] - 0.1 * (t[-1] - t[0])
    states = np.column_stack([traj.alpha_bar.real, traj.alpha_bar.imag, traj.spin])[window]
    for label, fp in _fixed_points(g_r, g_cr, kappa_bar):
        dev = np.abs(states - fp)
        if np.max(dev[:, :2]) < tol and np.max(dev[:, 2:]) < math.sqrt(tol):
            return label, ""
    spread = float(np.var(np.abs(traj.alpha_bar[window])))
    if spread > LIMIT_CYCLE_VAR:
        return UNRESOLVED, f"non-stationary: var|alpha_bar| = {spread:.3g} over final window"
    return UNRESOLVED, "no fixed point reached by t_max"


def integrate(
    initial,
    g_r,
    g_cr,
    kappa_bar,
    t_max,
    eta=None,
    adiabatic=False,
    rtol=1e-9,
    atol=1e-12,
    n_samples=2001,
    method=None,
    step=0.01,
) -> Trajectory:
    """Integrate from ``initial`` to ``t_max`` and classify the attractor.

    Parameters
    ----------
    initial : SemiclassicalState or complex
        A bare complex number is mapped to the Bloch sphere with ``s_z < 0``.
    eta : float, optional
        Frequency ratio for the full system; required unless ``adiabatic``.
    adiabatic : bool
        Integrate the cavity-only equation instead; the spin sheet is taken
        from the sign of the initial ``s_z``.
    method : str, optional
        ``"midpoint"`` (default for the full system) or any ``solve_ivp``
        method. The adiabatic equation defaults to DOP853.
    step : float
        Step of the midpoint rule. Fixed points of the flow are fixed points of
        the scheme, so terminal states do not depend on it.
    """
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    if not isinstance(initial, SemiclassicalState):
        initial = initial_state(complex(initial), g_r, g_cr)
    t_eval = np.linspace(0.0, t_max, n_samples)

    def overflow(t, y, *args):
        return ALPHA_CAP - math.hypot(y[0], y[1])

    overflow.terminal = True

    if adiabatic:
        sz_sign = 1 if initial.s_z > 0 else -1

        def rhs(t, y):
            d = adiabatic_rhs(complex(y[0], y[1]), g_r, g_cr, kappa_bar, sz_sign)
            return [d.real, d.imag]

        y0 = [initial.alpha_bar.real, initial.alpha_bar.imag]
        res = solve_ivp(rhs, (0.0, t_max), y0, method=method or "DOP853", t_eval=t_eval,
                        rtol=rtol, atol=atol, events=overflow)
        alpha = res.y[0] + 1j * res.y[1]
        spin = slaved_spin(alpha, g_r, g_cr, sz_sign)
    else:
        if eta is None or not eta > 0:
            raise ValueError("full integration needs eta > 0")
        args = (g_r, g_cr, kappa_bar, eta)
        solver = method or "midpoint"
        if solver == "midpoint":
            res = _implicit_midpoint(initial.as_vector(), t_max, t_eval, args, step)
        else:
            kwargs = {"jac": full_jacobian} if solver in ("Radau", "BDF", "LSODA") else {}
            res = solve_ivp(full_rhs, (0.0, t_max), initial.as_vector(), method=solver,
                            t_eval=t_eval, rtol=rtol, atol=atol, args=args, events=overflow,
                            **kwargs)
        alpha = res.y[0] + 1j * res.y[1]
        spin = res.y[2:].T
    if res.status < 0:
        raise RuntimeError(f"integration failed: {res.message}")
    traj = Trajectory(res.t, alpha, np.atleast_2d(spin), overflow=res.status == 1,
                      params={"g_r": g_r, "g_cr": g_cr, "kappa_bar": kappa_bar,
                              "eta": eta, "adiabatic": adiabatic})
    traj.attractor, traj.note = classify_attractor(traj, g_r, g_cr, kappa_bar)
    return traj


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class HysteresisResult:
    g: np.ndarray
    forward: np.ndarray  # |alpha_bar| at the end of each forward step
    backward: np.ndarray  # same, indexed like g


def hysteresis_scan(line: Line, kappa_bar, g_values, t_max=300.0, kick=1e-4, rtol=1e-8, atol=1e-11):
    """Adiabatic sweep of ``g`` up and then down along ``line``.

    Each step starts from the endpoint of the previous one plus a small
    deterministic kick, so that an unstable normal state is left.
    """
    g_values = np.asarray(g_values, dtype=float)

    def sweep(order):
        out = np.empty(len(g_values))
        alpha = 0j
        for i in order:
            g_r, g_cr = line.point(g_values[i])
            start = alpha + kick * (1 + 1j)
            traj = integrate(start, g_r, g_cr, kappa_bar, t_max, adiabatic=True, rtol=rtol, atol=atol,
                             n_samples=11)
            alpha = complex(traj.alpha_bar[-1])
            # stay on the same symmetry-broken sheet
            if alpha.real < 0:
                alpha = -alpha
            out[i] = abs(alpha)
        return out

    idx = np.arange(len(g_values))
    return HysteresisResult(g_values, sweep(idx), sweep(idx[::-1]))


def basin_map(g_r, g_cr, kappa_bar, re_values, im_values, t_max=300.0, adiabatic=True, eta=None,
              sz_sign=-1, **kwargs):
    """Attractor label for each initial field on a grid; returns an object array ``[im, re]``."""
    labels = np.empty((len(im_values), len(re_values)), dtype=object)
    for j, im in enumerate(im_values):
        for i, re in enumerate(re_values):
            start = initial_state(complex(re, im), g_r, g_cr, sz_sign)
            traj = integrate(start, g_r, g_cr, kappa_bar, t_max, eta=eta, adiabatic=adiabatic,
                             n_samples=201, **kwargs)
            labels[j, i] = traj.attractor
    return labels
