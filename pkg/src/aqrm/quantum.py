"""Finite-eta Lindblad treatment on a truncated spin x Fock space.

Basis ordering is spin (outer) times Fock (inner): index ``s * N + n`` with
``s = 0`` for spin up and ``s = 1`` for spin down, so ``sigma_z = diag(1, -1)``.

Dissipators use the factor-2 convention ``D[c] rho = 2 c rho c^dag - c^dag c rho
- rho c^dag c``; with ``kappa D[a]`` the photon number decays at rate ``2 kappa``.

Superoperators act on column-stacked density matrices,
``vec(A rho B) = (B^T kron A) vec(rho)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp
from scipy.special import gammaln

from .errors import DegenerateSteadyState, DimensionMismatch, TruncationUnsafe
from .params import ModelParams

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
POSITIVITY_FLOOR = 1e-8
TOP_FOCK_FRACTION = 0.05
TOP_FOCK_TOL = 1e-6
GAP_RATIO = 1e3


@dataclass(frozen=True)
class TruncatedOperator:
    dim_fock: int
    matrix: sp.csr_matrix

    @property
    def dim(self) -> int:
        return 2 * self.dim_fock

    def hermiticity_error(self) -> float:
        diff = (self.matrix - self.matrix.conj().T).tocoo()
        return float(np.max(np.abs(diff.data))) if diff.nnz else 0.0

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass
class DensityMatrix:
    dim_fock: int
    matrix: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))[0])

    def top_fock_population(self, fraction=TOP_FOCK_FRACTION) -> float:
        """Population in the highest ``fraction`` of Fock levels, summed over both spin states."""
        N = self.dim_fock
        k = max(1, int(math.ceil(fraction * N)))
        diag = np.real(np.diag(self.matrix)).reshape(-1, N)
        return float(diag[:, N - k:].sum())

    def trace_distance(self, other: "DensityMatrix") -> float:
        d = self.matrix - other.matrix
        return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T)))))

    def check(self) -> dict:
        """Hygiene numbers: trace, Hermiticity, minimum eigenvalue, top-Fock population."""
        return {
            "trace": self.trace().real,
            "hermiticity_error": self.hermiticity_error(),
            "min_eig": self.min_eigenvalue(),
            "top_fock_pop": self.top_fock_population(),
        }


# ---------------------------------------------------------------------------
# operators


def fock_operators(dim_fock: int) -> dict:
    """Sparse ``a``, ``a^dag``, ``n`` on the Fock space alone."""
    if dim_fock < 2:
        raise ValueError("dim_fock must be >= 2")
    a = sp.diags(np.sqrt(np.arange(1, dim_fock, dtype=float)), 1, format="csr", dtype=complex)
    return {"a": a, "adag": a.T.conj().tocsr(), "n": sp.diags(np.arange(dim_fock, dtype=complex), 0, format="csr")}


def operators(dim_fock: int) -> dict:
    """Sparse operators on spin x Fock: ``a, adag, n, sz, sp, sm, parity, id``."""
    f = fock_operators(dim_fock)
    s_id = sp.identity(2, dtype=complex, format="csr")
    f_id = sp.identity(dim_fock, dtype=complex, format="csr")
    sz = sp.csr_matrix(np.diag([1.0, -1.0]).astype(complex))
    s_plus = sp.csr_matrix(np.array([[0, 1], [0, 0]], dtype=complex))
    fock_parity = sp.diags((-1.0) ** np.arange(dim_fock), 0, format="csr", dtype=complex)
    ops = {
        "a": sp.kron(s_id, f["a"], format="csr"),
        "adag": sp.kron(s_id, f["adag"], format="csr"),
        "n": sp.kron(s_id, f["n"], format="csr"),
        "sz": sp.kron(sz, f_id, format="csr"),
        "sp": sp.kron(s_plus, f_id, format="csr"),
        "sm": sp.kron(s_plus.T, f_id, format="csr"),
        # exp(i pi (a^dag a + (sigma_z + 1) / 2)) commutes with H
        "parity": sp.kron(-sz, fock_parity, format="csr"),
        "id": sp.identity(2 * dim_fock, dtype=complex, format="csr"),
    }
    return ops


def build_hamiltonian(params: ModelParams, dim_fock: int) -> TruncatedOperator:
    """``omega0 a^dag a + Omega/2 sigma_z - lambda_r (a s+ + a^dag s-) - lambda_cr (a s- + a^dag s+)``."""
    o = operators(dim_fock)
    H = (
        params.omega0 * o["n"]
        + 0.5 * params.Omega * o["sz"]
        - params.lambda_r * (o["a"] @ o["sp"] + o["adag"] @ o["sm"])
        - params.lambda_cr * (o["a"] @ o["sm"] + o["adag"] @ o["sp"])
    )
    return TruncatedOperator(dim_fock, H.tocsr())


def _dissipator(c: sp.csr_matrix) -> sp.csr_matrix:
    eye = sp.identity(c.shape[0], dtype=complex, format="csr")
    cdc = (c.conj().T @ c).tocsr()
    return 2.0 * sp.kron(c.conj(), c) - sp.kron(eye, cdc) - sp.kron(cdc.T, eye)


def build_liouvillian(H: TruncatedOperator, kappa: float, gamma_spin: float = 0.0) -> sp.csr_matrix:
    """Sparse generator ``L`` with ``d vec(rho)/dt = L vec(rho)``."""
    o = operators(H.dim_fock)
    eye = o["id"]
    L = -1j * (sp.kron(eye, H.matrix) - sp.kron(H.matrix.T, eye))
    if kappa:
        L = L + kappa * _dissipator(o["a"])
    if gamma_spin:
        L = L + gamma_spin * _dissipator(o["sm"])
    return L.tocsr()


def liouvillian(params: ModelParams, dim_fock: int) -> sp.csr_matrix:
    return build_liouvillian(build_hamiltonian(params, dim_fock), params.kappa, params.gamma_spin)


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    d = int(round(math.sqrt(v.size)))
    return np.asarray(v).reshape(d, d, order="F")


# ---------------------------------------------------------------------------
# steady state


def _sanitize(rho: np.ndarray) -> tuple[np.ndarray, float]:
    """Hermitize, clip round-off negativity and renormalize; returns the state and the raw minimum eigenvalue."""
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    w, v = np.linalg.eigh(rho)
    min_eig = float(w[0])
    if min_eig < -POSITIVITY_FLOOR:
        raise DegenerateSteadyState(f"steady state has eigenvalue {min_eig:.3g} < -{POSITIVITY_FLOOR:g}")
    if min_eig < 0:
        w = np.clip(w, 0.0, None)
        rho = (v * w) @ v.conj().T
        rho = 0.5 * (rho + rho.conj().T)
        rho = rho / np.trace(rho).real
    return rho, min_eig


def _trace_row(d: int) -> sp.csr_matrix:
    idx = np.arange(d) * (d + 1)
    return sp.csr_matrix((np.ones(d, dtype=complex), (np.zeros(d, dtype=int), idx)), shape=(1, d * d))


def slowest_eigenvalues(L: sp.spmatrix, k: int = 2, sigma: float = -1e-7) -> np.ndarray:
    """``k`` eigenvalues of ``L`` closest to zero, sorted by magnitude (shift-invert Arnoldi)."""
    vals = spla.eigs(L.tocsc(), k=k, sigma=sigma, which="LM", return_eigenvectors=False, tol=1e-12)
    return vals[np.argsort(np.abs(vals))]


def steady_state(L: sp.spmatrix, dim_fock: int, check_gap: bool = True, check_truncation: bool = True) -> DensityMatrix:
    """Unique trace-one null vector of ``L``.

    Solved by sparse LU with one equation replaced by the trace condition;
    falls back to shift-invert Arnoldi if the LU solve fails. ``check_gap``
    compares the two eigenvalues of ``L`` nearest zero and raises
    :class:`DegenerateSteadyState` unless their magnitudes differ by more
    than ``GAP_RATIO``.
    """
    dd = L.shape[0]
    d = int(round(math.sqrt(dd)))
    if d * d != dd or d != 2 * dim_fock:
        raise DimensionMismatch(f"Liouvillian of size {dd} does not match dim_fock={dim_fock}")
    A = sp.vstack([_trace_row(d), L.tocsr()[1:]]).tocsc()
    b = np.zeros(dd, dtype=complex)
    b[0] = 1.0
    method = "lu"
    try:
        x = spla.spsolve(A, b)
        if not np.all(np.isfinite(x)):
            raise RuntimeError("non-finite LU solution")
    except (RuntimeError, MemoryError):
        method = "eigs"
        _, vecs = spla.eigs(L.tocsc(), k=1, sigma=-1e-7, which="LM")
        x = vecs[:, 0]
    rho, raw_min = _sanitize(unvec(x))
    residual = float(np.max(np.abs(L @ vec(rho))))
    gap = math.nan
    if check_gap:
        lam = slowest_eigenvalues(L, k=2)
        gap = float(abs(lam[1]))
        if abs(lam[1]) <= GAP_RATIO * abs(lam[0]):
            raise DegenerateSteadyState(
                f"kernel not one-dimensional: |l0|={abs(lam[0]):.3g}, |l1|={abs(lam[1]):.3g}"
            )
    state = DensityMatrix(dim_fock, rho)
    diag = state.check()
    diag.update({"raw_min_eig": raw_min, "residual": residual, "gap_estimate": gap, "method": method,
                 "n_expect": expectation(state, operators(dim_fock)["n"]).real})
    state.diagnostics = diag
    if check_truncation and diag["top_fock_pop"] > TOP_FOCK_TOL:
        raise TruncationUnsafe(
            f"top {TOP_FOCK_FRACTION:.0%} Fock population {diag['top_fock_pop']:.3g} exceeds {TOP_FOCK_TOL:g}"
        )
    return state


def project_spin_down(rho: DensityMatrix) -> tuple[np.ndarray, float]:
    """The ``<down| rho |down>`` oscillator block (not renormalized) and its trace."""
    N = rho.dim_fock
    block = rho.matrix[N:, N:].copy()
    return block, float(np.trace(block).real)


def expectation(rho: DensityMatrix, op) -> complex:
    m = op.matrix if isinstance(op, TruncatedOperator) else op
    if m.shape != rho.matrix.shape:
        raise DimensionMismatch(f"operator {m.shape} vs state {rho.matrix.shape}")
    if sp.issparse(m):
        return complex((m.multiply(rho.matrix.T)).sum())
    return complex(np.sum(m * rho.matrix.T))


# ---------------------------------------------------------------------------
# dynamics and spectrum


def time_evolve(rho0: DensityMatrix, L: sp.spmatrix, t: float, method="expm", rtol=1e-10, atol=1e-12) -> DensityMatrix:
    """``rho(t)`` for ``d vec(rho)/dt = L vec(rho)``.

    ``method="expm"`` applies ``exp(L t)`` by truncated Taylor series with
    scaling (``scipy.sparse.linalg.expm_multiply``); it has no stability limit
    and its cost grows only linearly with ``t``. Any stiff ``solve_ivp``
    method (``"BDF"``, ``"Radau"``) may be given instead; they use the exact
    sparse Jacobian but must resolve the fast spin precession.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if rho0.matrix.shape[0] ** 2 != L.shape[0]:
        raise DimensionMismatch(f"state {rho0.matrix.shape} vs Liouvillian {L.shape}")
    if t == 0:
        return DensityMatrix(rho0.dim_fock, rho0.matrix.copy())
    y0 = vec(rho0.matrix).astype(complex)
    if method == "expm":
        y = spla.expm_multiply(L.tocsc() * t, y0)
    else:
        Lc = L.tocsr()
        res = solve_ivp(lambda _, y: Lc @ y, (0.0, t), y0, method=method, jac=Lc, rtol=rtol, atol=atol,
                        t_eval=[t])
        if not res.success:
            raise RuntimeError(f"time evolution failed: {res.message}")
        y = res.y[:, -1]
    return DensityMatrix(rho0.dim_fock, unvec(y))


def parity_sectors(dim_fock: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices of vec(rho) in the even and odd sectors of ``rho -> Pi rho Pi``."""
    p = np.real(operators(dim_fock)["parity"].diagonal())
    # column-stacked index k = j * d + i  holds rho[i, j]
    prod = np.outer(p, p).reshape(-1, order="F")
    return np.flatnonzero(prod > 0), np.flatnonzero(prod < 0)


def cavity_gap(L: sp.spmatrix, dim_fock: int, eta: float, k: int = 16) -> complex:
    """Slowest relaxation mode of the cavity on the spin-down sheet.

    Candidates are odd-parity eigenvalues near zero with ``|Im| < eta/2`` (no
    fast spin coherence) whose eigenoperator lives mostly in the
    ``<down|.|down>`` block; among those the one with smallest ``-Re`` is
    returned. Units are those of ``L``.
    """
    N = dim_fock
    d = 2 * N
    _, odd = parity_sectors(N)
    block = L.tocsr()[odd][:, odd]
    vals, vecs = spla.eigs(block.tocsc(), k=k, sigma=0.0, which="LM", tol=1e-10)
    rows, cols = odd % d, odd // d
    down = (rows >= N) & (cols >= N)
    best = None
    for lam, v in zip(vals, vecs.T):
        w = np.abs(v) ** 2
        if abs(lam.imag) < 0.5 * eta and w[down].sum() > 0.5 * w.sum():
            if best is None or -lam.real < -best.real:
                best = lam
    if best is None:
        raise RuntimeError("no spin-down cavity mode among the computed eigenvalues; increase k")
    return complex(best)


# ---------------------------------------------------------------------------
# simple states


def coherent_vector(beta: complex, dim_fock: int) -> np.ndarray:
    """Fock amplitudes of ``|beta>``, normalized on the truncated space."""
    psi = np.zeros(dim_fock, dtype=complex)
    if beta == 0:
        psi[0] = 1.0
        return psi
    n = np.arange(dim_fock)
    logs = n * math.log(abs(beta)) - 0.5 * gammaln(n + 1) - 0.5 * abs(beta) ** 2
    psi = np.exp(logs + 1j * n * np.angle(beta))
    return psi / np.linalg.norm(psi)


def product_state(spin: str, rho_osc: np.ndarray) -> DensityMatrix:
    """``|spin><spin| (x) rho_osc`` with ``spin`` in {"up", "down"}."""
    N = rho_osc.shape[0]
    proj = np.zeros((2, 2))
    proj[0 if spin == "up" else 1, 0 if spin == "up" else 1] = 1.0
    return DensityMatrix(N, np.kron(proj, rho_osc).astype(complex))
