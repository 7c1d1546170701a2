"""Straight paths through the (g_r, g_cr) plane, parametrized by g = g_r."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Line:
    """The line ``g_cr = intercept + slope * g_r``; the path parameter is ``g = g_r``."""

    slope: float
    intercept: float = 0.0
    name: str = ""

    def point(self, g):
        return g, self.intercept + self.slope * g

    def epsilon(self, g):
        return self.slope + self.intercept / g

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "name": self.name}

    @classmethod
    def from_dict(cls, d: dict) -> "Line":
        return cls(float(d["slope"]), float(d.get("intercept", 0.0)), str(d.get("name", "")))


def dashed_line() -> Line:
    """g_cr = 0.05 (g_r - 0.5) + 0.5, the cut through all three phases at kappa_bar = 0.5."""
    return Line(slope=0.05, intercept=0.5 - 0.05 * 0.5, name="dashed")


def ray(epsilon: float, name: str = "") -> Line:
    """Line of constant anisotropy through the origin."""
    return Line(slope=epsilon, intercept=0.0, name=name or f"ray({epsilon:g})")


def epsilon_min_ray(kappa_bar: float) -> Line:
    from .meanfield import epsilon_bounds

    return ray(epsilon_bounds(kappa_bar)[0], name="eps_min_ray")


def tangent_line(epsilon: float, kappa_bar: float) -> tuple[Line, float]:
    """Tangent to the second-order NP boundary at anisotropy ``epsilon``.

    Returns the line and the touching coupling ``g_r``. The NP boundary is the
    zero set of ``A_np(g_r, g_cr)``; its tangent is orthogonal to the gradient.
    """
    from .meanfield import critical_couplings

    cc = critical_couplings(epsilon, kappa_bar)
    if cc is None:
        raise ValueError(f"epsilon={epsilon} is outside the SP window at kappa_bar={kappa_bar}")
    g0 = cc[0]
    gr, gcr = g0, epsilon * g0
    # A = 1 + k^2 - 2 (gr^2 + gcr^2) + (gr^2 - gcr^2)^2
    dA_dgr = -4.0 * gr + 4.0 * gr * (gr**2 - gcr**2)
    dA_dgcr = -4.0 * gcr - 4.0 * gcr * (gr**2 - gcr**2)
    if abs(dA_dgcr) < 1e-14:
        raise ValueError("tangent is vertical in the (g_r, g_cr) plane")
    slope = -dA_dgr / dA_dgcr
    intercept = gcr - slope * gr
    return Line(slope=slope, intercept=intercept, name=f"tangent({epsilon:g})"), g0


def g_grid(start: float, stop: float, num: int, log: bool = False) -> np.ndarray:
    if num < 2:
        raise ValueError("resolution must be >= 2")
    if not stop > start:
        raise ValueError("empty range")
    if log:
        if start <= 0:
            raise ValueError("log range needs start > 0")
        return np.geomspace(start, stop, num)
    return np.linspace(start, stop, num)

