"""Model parameters of the anisotropic open Rabi model.

Absolute parameters (hbar = 1) live in :class:`ModelParams`; everything in the
mean-field and fluctuation layers works with the dimensionless triple
``(g_r, g_cr, kappa_bar)`` held by :class:`RenormalizedParams`.

    g_r = lambda_r / sqrt(omega0 * Omega)
    g_cr = lambda_cr / sqrt(omega0 * Omega)
    kappa_bar = kappa / omega0
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

from .errors import InvalidParams


@dataclass(frozen=True)
class ModelParams:
    """Absolute model parameters.

    Parameters
    ----------
    omega0 : float
        Oscillator frequency.
    Omega : float
        Qubit transition frequency.
    lambda_r, lambda_cr : float
        Rotating and counterrotating coupling strengths.
    kappa : float
        Oscillator damping rate, entering as ``kappa * D[a]``.
    gamma_spin : float, optional
        Spin damping rate, entering as ``gamma_spin * D[sigma_-]``.
    """

    omega0: float
    Omega: float
    lambda_r: float
    lambda_cr: float
    kappa: float
    gamma_spin: float = 0.0

    @property
    def eta(self) -> float:
        """Frequency ratio Omega / omega0."""
        return self.Omega / self.omega0

    @classmethod
    def from_renormalized(cls, g_r, g_cr, kappa_bar, eta, omega0=1.0, gamma_spin=0.0):
        """Inverse of :func:`renormalize` at fixed ``omega0`` and ``Omega = eta * omega0``."""
        Omega = eta * omega0
        scale = math.sqrt(omega0 * Omega)
        return cls(
            omega0=omega0,
            Omega=Omega,
            lambda_r=g_r * scale,
            lambda_cr=g_cr * scale,
            kappa=kappa_bar * omega0,
            gamma_spin=gamma_spin,
        )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RenormalizedParams:
    g_r: float
    g_cr: float
    kappa_bar: float

    @property
    def g(self) -> float:
        return self.g_r

    @property
    def epsilon(self) -> float:
        """Anisotropy g_cr / g_r.

        ``inf`` for the anti-JC case (g_r = 0 < g_cr), ``nan`` when both couplings vanish.
        """
        if self.g_r == 0.0:
            return math.inf if self.g_cr > 0.0 else math.nan
        return self.g_cr / self.g_r


def validate(p: ModelParams) -> list[str]:
    """Return the list of violated invariants (empty when ``p`` is valid)."""
    violations = []
    checks = [
        (p.omega0, "omega0 > 0", lambda v: v > 0),
        (p.Omega, "Omega > 0", lambda v: v > 0),
        (p.lambda_r, "lambda_r ≥ 0", lambda v: v >= 0),
        (p.lambda_cr, "lambda_cr ≥ 0", lambda v: v >= 0),
        (p.kappa, "kappa ≥ 0", lambda v: v >= 0),
        (p.gamma_spin, "gamma_spin ≥ 0", lambda v: v >= 0),
    ]
    for value, label, ok in checks:
        if not (math.isfinite(value) and ok(value)):
            violations.append(label)
    return violations


def renormalize(p: ModelParams) -> RenormalizedParams:
    if not p.omega0 > 0:
        raise InvalidParams("omega0 > 0")
    if not p.Omega > 0:
        raise InvalidParams("Omega > 0")
    scale = math.sqrt(p.omega0 * p.Omega)
    return RenormalizedParams(p.lambda_r / scale, p.lambda_cr / scale, p.kappa / p.omega0)


_ABSOLUTE_KEYS = ("omega0", "Omega", "lambda_r", "lambda_cr", "kappa")
_RENORMALIZED_KEYS = ("g_r", "g_cr", "kappa_bar", "eta")


def params_from_dict(d: dict) -> ModelParams:
    """Build :class:`ModelParams` from either the absolute or the renormalized key set.

    The renormalized form takes ``g_r, g_cr, kappa_bar, eta`` with ``omega0 = 1``;
    an optional ``gamma_spin`` is accepted in both forms (absolute units).
    """
    gamma_spin = float(d.get("gamma_spin", 0.0))
    if all(k in d for k in _ABSOLUTE_KEYS):
        p = ModelParams(*(float(d[k]) for k in _ABSOLUTE_KEYS), gamma_spin=gamma_spin)
    elif all(k in d for k in _RENORMALIZED_KEYS):
        p = ModelParams.from_renormalized(
            float(d["g_r"]), float(d["g_cr"]), float(d["kappa_bar"]), float(d["eta"]),
            gamma_spin=gamma_spin,
        )
    else:
        raise InvalidParams(
            f"parameter block needs keys {_ABSOLUTE_KEYS} or {_RENORMALIZED_KEYS}, got {sorted(d)}"
        )
    bad = validate(p)
    if bad:
        raise InvalidParams("; ".join(bad))
    return p


def load_params(path) -> ModelParams:
    return params_from_dict(json.loads(Path(path).read_text()))
