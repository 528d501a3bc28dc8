"""Quantum Fisher information, variance and interferometric power.

The interferometric power of a state is the worst-case QFI (divided by 4)
over all local Hamiltonians on A with a fixed spectrum. For a qubit on A it
has a closed form through a 3x3 matrix built from the spectral
decomposition of the state; a direct numerical minimizer over directions is
kept alongside as an independent check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .qmat import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    DensityMatrix,
    PureState,
    ValidationError,
    gell_mann_basis,
    haar_unitary,
    hermitian_eig,
    is_unitary,
)

__all__ = [
    "Spectrum",
    "PhaseHamiltonian",
    "IpResult",
    "variance",
    "qfi",
    "qfi_batch",
    "m_matrix",
    "ip_closed",
    "ip_oracle",
    "ip_oracle_qudit",
    "interferometric_power",
    "cramer_rao_bound",
    "direction_from_angles",
]

ZERO_EIG = 1e-14
ZERO_PAIR = 1e-12

_PAULIS = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])


@dataclass(frozen=True)
class Spectrum:
    """Two-level spectrum ``{beta - alpha, beta + alpha}``."""

    alpha: float = 1.0
    beta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise ValidationError("spectrum parameters must be finite")
        if self.alpha <= 0:
            raise ValidationError(f"alpha must be > 0, got {self.alpha}")

    @property
    def levels(self) -> tuple[float, float]:
        return (self.beta - self.alpha, self.beta + self.alpha)


@dataclass(frozen=True)
class PhaseHamiltonian:
    """Local Hamiltonian on A with a fixed spectrum.

    Use :meth:`along` for a qubit (``alpha n.sigma + beta I``) and
    :meth:`from_eigenbasis` for a general ``V diag(levels) V^dag``.
    """

    matrix: np.ndarray
    spectrum: Spectrum | None = None
    direction: np.ndarray | None = None
    eigenbasis: np.ndarray | None = None

    @classmethod
    def along(cls, direction, spectrum: Spectrum = Spectrum()) -> "PhaseHamiltonian":
        n = np.asarray(direction, dtype=float).ravel()
        if n.shape != (3,):
            raise ValidationError("direction must be a real 3-vector")
        nrm = np.linalg.norm(n)
        if abs(nrm - 1.0) > 1e-12:
            raise ValidationError(f"direction must have unit norm, got {nrm!r}")
        h = spectrum.alpha * np.einsum("k,kij->ij", n, _PAULIS) + spectrum.beta * np.eye(2)
        return cls(h, spectrum=spectrum, direction=n)

    @classmethod
    def from_eigenbasis(cls, eigenbasis, levels: Sequence[float]) -> "PhaseHamiltonian":
        v = np.asarray(eigenbasis, dtype=complex)
        lv = np.asarray(levels, dtype=float)
        if v.shape != (lv.size, lv.size) or not is_unitary(v):
            raise ValidationError("eigenbasis must be a unitary matching the number of levels")
        h = (v * lv) @ v.conj().T
        spec = None
        if lv.size == 2 and lv[1] != lv[0]:
            lo, hi = sorted(lv)
            spec = Spectrum((hi - lo) / 2, (hi + lo) / 2)
        return cls((h + h.conj().T) / 2, spectrum=spec, eigenbasis=v)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class IpResult:
    value: float
    worst: np.ndarray
    method: str

    @property
    def worst_direction(self) -> np.ndarray:
        return self.worst


def direction_from_angles(polar: float, azimuth: float) -> np.ndarray:
    return np.array(
        [math.sin(polar) * math.cos(azimuth), math.sin(polar) * math.sin(azimuth), math.cos(polar)]
    )


def _as_hamiltonian(h) -> np.ndarray:
    return h.matrix if isinstance(h, PhaseHamiltonian) else np.asarray(h, dtype=complex)


def _spectral_data(rho: DensityMatrix):
    q, phi = hermitian_eig(rho.matrix)
    q = np.where(np.abs(q) < ZERO_EIG, 0.0, q)
    s = q[:, None] + q[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(s >= ZERO_PAIR, (q[:, None] - q[None, :]) ** 2 / s, 0.0)
    return w, phi


def _local(h_a: np.ndarray, dim_b: int) -> np.ndarray:
    # batched h_a (x) I_B
    eye = np.eye(dim_b)
    return np.einsum("...ij,kl->...ikjl", h_a, eye).reshape(
        h_a.shape[:-2] + (h_a.shape[-2] * dim_b, h_a.shape[-1] * dim_b)
    )


def qfi_batch(rho: DensityMatrix, hamiltonians: np.ndarray) -> np.ndarray:
    """QFI of ``rho`` for a stack of local Hamiltonians on A, shape ``(k, d_A, d_A)``."""
    hs = np.asarray(hamiltonians, dtype=complex)
    if hs.ndim == 2:
        hs = hs[None]
    if hs.shape[-1] != rho.dim_a:
        raise ValidationError(f"Hamiltonian dimension {hs.shape[-1]} != dim_a {rho.dim_a}")
    w, phi = _spectral_data(rho)
    full = _local(hs, rho.dim_b)
    hmn = np.einsum("im,kij,jn->kmn", phi.conj(), full, phi, optimize=True)
    return 2.0 * np.einsum("mn,kmn->k", w, np.abs(hmn) ** 2)


def qfi(rho: DensityMatrix, h) -> float:
    """Quantum Fisher information of ``rho`` for the phase generator ``h (x) I_B``.

    ``F = 2 sum_{m,n} (q_m - q_n)^2 / (q_m + q_n) |<phi_m|H (x) I|phi_n>|^2``,
    skipping pairs with ``q_m + q_n < 1e-12``.
    """
    return max(0.0, float(qfi_batch(rho, _as_hamiltonian(h))[0]))


def variance(psi: PureState, h) -> float:
    """``<H^2 (x) I> - <H (x) I>^2`` for a pure state."""
    hm = _as_hamiltonian(h)
    if hm.shape[0] != psi.dim_a:
        raise ValidationError(f"Hamiltonian dimension {hm.shape[0]} != dim_a {psi.dim_a}")
    full = np.kron(hm, np.eye(psi.dim_b))
    v = psi.amplitudes
    hv = full @ v
    mean = np.vdot(v, hv).real
    second = np.vdot(hv, hv).real
    return max(0.0, float(second - mean**2))


def m_matrix(rho: DensityMatrix) -> np.ndarray:
    """Real symmetric 3x3 matrix whose smallest eigenvalue is the IP at ``alpha = 1``."""
    if rho.dim_a != 2:
        raise ValidationError(f"M matrix needs a qubit on A, got dim_a = {rho.dim_a}")
    w, phi = _spectral_data(rho)
    s = np.einsum("im,kij,jn->kmn", phi.conj(), _local(_PAULIS, rho.dim_b), phi, optimize=True)
    m = 0.5 * np.einsum("mn,amn,bmn->ab", w, s, s.conj()).real
    return (m + m.T) / 2


def ip_closed(rho: DensityMatrix, spectrum: Spectrum = Spectrum()) -> IpResult:
    lam, vec = np.linalg.eigh(m_matrix(rho))
    value = max(0.0, spectrum.alpha**2 * float(lam[0]))
    return IpResult(value, vec[:, 0], "closed_form")


def _direction_hamiltonians(dirs: np.ndarray, spectrum: Spectrum) -> np.ndarray:
    return spectrum.alpha * np.einsum("nk,kij->nij", dirs, _PAULIS) + spectrum.beta * np.eye(2)


def ip_oracle(
    rho: DensityMatrix,
    spectrum: Spectrum = Spectrum(),
    grid: tuple[int, int] = (64, 128),
    refine_iters: int = 200,
    n_refine: int = 3,
) -> IpResult:
    """Brute-force IP for a qubit on A: grid search over directions plus Nelder-Mead.

    Directions cover the upper half-sphere (``n`` and ``-n`` give the same QFI).
    The QFI is evaluated from explicit Hamiltonians, independently of
    :func:`m_matrix`.
    """
    if rho.dim_a != 2:
        raise ValidationError(f"qubit oracle needs dim_a = 2, got {rho.dim_a}")
    n_polar, n_azimuth = grid
    if n_polar < 16 or n_azimuth < 32:
        raise ValidationError(f"grid must be at least 16x32, got {n_polar}x{n_azimuth}")
    polar = np.linspace(0.0, math.pi / 2, n_polar)
    azimuth = np.linspace(0.0, 2 * math.pi, n_azimuth, endpoint=False)
    pp, aa = np.meshgrid(polar, azimuth, indexing="ij")
    dirs = np.stack(
        [np.sin(pp) * np.cos(aa), np.sin(pp) * np.sin(aa), np.cos(pp)], axis=-1
    ).reshape(-1, 3)
    values = qfi_batch(rho, _direction_hamiltonians(dirs, spectrum)) / 4.0
    # stable sort: equal values keep the lexicographically smallest grid index first
    order = np.argsort(values, kind="stable")
    best_val = float(values[order[0]])
    best_dir = dirs[order[0]]

    def objective(x):
        n = direction_from_angles(x[0], x[1])
        return float(qfi_batch(rho, _direction_hamiltonians(n[None], spectrum))[0]) / 4.0

    if refine_iters > 0:
        for idx in order[:n_refine]:
            x0 = np.array([pp.ravel()[idx], aa.ravel()[idx]])
            res = minimize(
                objective,
                x0,
                method="Nelder-Mead",
                options={"maxiter": refine_iters, "xatol": 1e-10, "fatol": 1e-14},
            )
            if res.fun < best_val:
                best_val = float(res.fun)
                best_dir = direction_from_angles(*res.x)
    return IpResult(max(0.0, best_val), best_dir, "oracle")


def _qudit_objective(rho_w, phi, gammas, levels, dim_b):
    def hamiltonians(us):
        return np.einsum("kij,j,klj->kil", us, levels, us.conj())

    def values(us):
        full = _local(hamiltonians(us), dim_b)
        hmn = np.einsum("im,kij,jn->kmn", phi.conj(), full, phi, optimize=True)
        return 0.5 * np.einsum("mn,kmn->k", rho_w, np.abs(hmn) ** 2)

    return values


def ip_oracle_qudit(
    rho: DensityMatrix,
    levels: Sequence[float] | None = None,
    starts: int = 256,
    n_refine: int = 8,
    seed: int = 0,
) -> IpResult:
    """Numerical IP for a qudit on A, ``min_V F(rho, V diag(levels) V^dag) / 4``.

    Haar-random multistart followed by BFGS refinement of the best starts in
    a ``V exp(i sum_k c_k g_k)`` parameterization. This is an upper bound on
    the true minimum that tightens with more starts.
    """
    d = rho.dim_a
    if levels is None:
        levels = np.linspace(-1.0, 1.0, d)
    lv = np.asarray(levels, dtype=float)
    if lv.size != d:
        raise ValidationError(f"need {d} levels, got {lv.size}")
    w, phi = _spectral_data(rho)
    gammas = np.stack(gell_mann_basis(d)) if d >= 2 else np.zeros((0, 1, 1))
    values = _qudit_objective(w, phi, gammas, lv, rho.dim_b)

    rng = np.random.default_rng(seed)
    us = np.stack([haar_unitary(d, rng) for _ in range(starts)])
    vals = values(us)
    order = np.argsort(vals, kind="stable")
    best_val, best_u = float(vals[order[0]]), us[order[0]]

    def exp_i(c):
        g = np.einsum("k,kij->ij", c, gammas)
        ev, evec = np.linalg.eigh(g)
        return (evec * np.exp(1j * ev)) @ evec.conj().T

    for idx in order[:n_refine]:
        u0 = us[idx]

        def f(c, u0=u0):
            return float(values((u0 @ exp_i(c))[None])[0])

        res = minimize(f, np.zeros(len(gammas)), method="BFGS", options={"gtol": 1e-10})
        if res.fun < best_val:
            best_val, best_u = float(res.fun), u0 @ exp_i(res.x)
    return IpResult(max(0.0, best_val), best_u, "oracle")


def interferometric_power(rho: DensityMatrix, spectrum: Spectrum = Spectrum()) -> float:
    """IP with the closed form for a qubit on A, otherwise the qudit oracle."""
    if rho.dim_a == 2:
        return ip_closed(rho, spectrum).value
    lv = np.linspace(spectrum.beta - spectrum.alpha, spectrum.beta + spectrum.alpha, rho.dim_a)
    return ip_oracle_qudit(rho, lv).value


def cramer_rao_bound(fisher: float, nu: int = 1) -> float:
    """Minimal mean squared phase error ``1 / (nu F)``; ``inf`` when ``F <= 0``."""
    if nu < 1:
        raise ValidationError(f"number of repetitions must be >= 1, got {nu}")
    if fisher <= 0:
        return math.inf
    return 1.0 / (nu * fisher)
