"""Wigner function of an oscillator density matrix.

Convention: ``W(alpha) = (2/pi) Tr[D(alpha)^dag rho D(alpha) Pi]`` with ``Pi`` the
photon parity, so the vacuum peaks at ``2/pi`` and ``W`` integrates to
``Tr rho`` over ``d^2 alpha = d(Re alpha) d(Im alpha)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

MODALITY_THRESHOLD = 0.1
MIN_PROMINENCE = 0.02


@dataclass(frozen=True)
class WignerGrid:
    re_axis: np.ndarray
    im_axis: np.ndarray
    values: np.ndarray  # indexed [im, re]

    def integral(self) -> float:
        dx = self.re_axis[1] - self.re_axis[0]
        dy = self.im_axis[1] - self.im_axis[0]
        return float(self.values.sum() * dx * dy)

    def maxima(self, threshold=MODALITY_THRESHOLD, prominence=MIN_PROMINENCE) -> list[tuple[float, float, float]]:
        return local_maxima(self, threshold, prominence)

    def modality(self, threshold=MODALITY_THRESHOLD, prominence=MIN_PROMINENCE) -> int:
        return len(local_maxima(self, threshold, prominence))

    def header(self) -> dict:
        return {
            "re_min": float(self.re_axis[0]),
            "re_max": float(self.re_axis[-1]),
            "im_min": float(self.im_axis[0]),
            "im_max": float(self.im_axis[-1]),
            "nx": int(self.re_axis.size),
            "ny": int(self.im_axis.size),
        }


def _effective_dim(rho: np.ndarray, tol=1e-14) -> int:
    # drop Fock levels whose population (and hence coherences) is negligible
    pops = np.abs(np.real(np.diag(rho)))
    tail = np.cumsum(pops[::-1])[::-1]
    keep = np.flatnonzero(tail > tol)
    return int(keep[-1]) + 1 if keep.size else 1


def auto_extent(rho: np.ndarray) -> float:
    """Half-width of a square grid covering the state with generous margin."""
    n = np.arange(rho.shape[0])
    n_mean = float(np.real(np.sum(n * np.diag(rho))) / max(np.real(np.trace(rho)), 1e-300))
    return 1.5 * math.sqrt(max(n_mean, 0.0)) + 3.0


def _laguerre_sum(L: int, x: np.ndarray, c: np.ndarray) -> np.ndarray:
    """``sum_k c_k sqrt(k!/(k+L)!) L_k^L(x)`` by Clenshaw recurrence (normalized Laguerre basis)."""
    if len(c) == 1:
        y0, y1 = c[0], 0.0
    elif len(c) == 2:
        y0, y1 = c[0], c[1]
    else:
        k = len(c)
        y0, y1 = c[-2], c[-1]
        for i in range(3, len(c) + 1):
            k -= 1
            y0, y1 = (
                c[-i] - y1 * math.sqrt((k - 1) * (L + k - 1) / ((L + k) * k)),
                y0 - y1 * ((L + 2 * k - 1) - x) / math.sqrt((L + k) * k),
            )
    return y0 - y1 * ((L + 1) - x) / math.sqrt(L + 1)


def wigner(rho: np.ndarray, re_axis=None, im_axis=None, n_points: int = 121) -> WignerGrid:
    """Evaluate ``W`` on a rectangular grid.

    ``W`` is a sum over the diagonals ``rho[m, m + L]`` of associated Laguerre
    polynomials in ``4 |alpha|^2``; each diagonal is summed by Clenshaw
    recurrence and the diagonals are combined by Horner's rule in ``2 alpha``.
    This stays accurate for Fock dimensions in the hundreds, where the direct
    two-index recursion loses all digits.
    """
    rho = np.asarray(rho, dtype=complex)
    if re_axis is None or im_axis is None:
        r = auto_extent(rho)
        re_axis = np.linspace(-r, r, n_points) if re_axis is None else re_axis
        im_axis = np.linspace(-r, r, n_points) if im_axis is None else im_axis
    re_axis = np.asarray(re_axis, dtype=float)
    im_axis = np.asarray(im_axis, dtype=float)
    M = _effective_dim(rho)
    rho = rho[:M, :M] * (2.0 - np.eye(M))  # off-diagonal pairs counted once
    X, Y = np.meshgrid(re_axis, im_axis)
    A2 = 2.0 * (X + 1j * Y)
    B = np.abs(A2) ** 2
    acc = np.full(A2.shape, rho[0, M - 1], dtype=complex)
    for L in range(M - 2, -1, -1):
        acc = _laguerre_sum(L, B, np.diag(rho, L)) + acc * A2 / math.sqrt(L + 1)
    return WignerGrid(re_axis, im_axis, (2.0 / np.pi) * acc.real * np.exp(-0.5 * B))


def local_maxima(grid: WignerGrid, threshold=MODALITY_THRESHOLD,
                 prominence=MIN_PROMINENCE) -> list[tuple[float, float, float]]:
    """Local maxima above ``threshold`` times the global maximum, as ``(re, im, W)``.

    A maximum only counts if it is separated from every higher point by a dip
    of at least ``prominence`` times the global maximum. This removes the
    staircase maxima that a grid produces along a tilted ridge, provided the
    grid puts about three points across the narrowest lobe.
    """
    W = grid.values
    peak = W.max()
    if not peak > 0:
        return []
    is_max = (W == ndimage.maximum_filter(W, size=3, mode="constant", cval=-np.inf)) & (W > threshold * peak)
    labels, count = ndimage.label(is_max)
    candidates = []
    for k in range(1, count + 1):
        iy, ix = np.argwhere(labels == k)[0]
        candidates.append((float(W[iy, ix]), iy, ix))
    out = []
    for value, iy, ix in candidates:
        region, _ = ndimage.label(W > value - prominence * peak)
        if W[region == region[iy, ix]].max() <= value:
            out.append((float(grid.re_axis[ix]), float(grid.im_axis[iy]), value))
    return sorted(out, key=lambda t: -t[2])
