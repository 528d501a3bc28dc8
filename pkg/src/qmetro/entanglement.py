"""Interferometric entanglement: pure-state form, Wootters tangle, convex-roof search."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .metrology import Spectrum
from .qmat import (
    SIGMA_Y,
    DensityMatrix,
    PureState,
    ValidationError,
    bloch_vector,
    hermitian_eig,
)

__all__ = [
    "TangleValue",
    "Decomposition",
    "ie_pure",
    "tangle_wootters",
    "ie_two_qubit",
    "convex_roof_oracle",
    "decomposition_from_isometry",
]

_YY = np.kron(SIGMA_Y, SIGMA_Y)
SUPPORT_TOL = 1e-13


@dataclass(frozen=True)
class TangleValue:
    value: float
    lambdas: np.ndarray

    @property
    def concurrence(self) -> float:
        return float(np.sqrt(self.value))


@dataclass(frozen=True)
class Decomposition:
    """Pure-state ensemble ``{p_i, |psi_i>}``."""

    weights: np.ndarray
    states: tuple[PureState, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if abs(w.sum() - 1.0) > 1e-10 or np.any(w < -1e-12):
            raise ValidationError("weights must form a probability vector")
        if len(w) != len(self.states):
            raise ValidationError("one weight per state required")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "states", tuple(self.states))

    def density(self) -> np.ndarray:
        return sum(p * np.outer(s.amplitudes, s.amplitudes.conj()) for p, s in zip(self.weights, self.states))


def ie_pure(psi: PureState, spectrum: Spectrum = Spectrum()) -> float:
    """``alpha^2 (1 - |r|^2)`` with ``r`` the Bloch vector of A."""
    if psi.dim_a != 2:
        raise ValidationError(f"pure-state IE needs a qubit on A, got dim_a = {psi.dim_a}")
    r = bloch_vector(psi)
    return max(0.0, spectrum.alpha**2 * (1.0 - float(r @ r)))


def _require_two_qubit(rho: DensityMatrix):
    if (rho.dim_a, rho.dim_b) != (2, 2):
        raise ValidationError(f"two-qubit state required, got dims ({rho.dim_a}, {rho.dim_b})")


def tangle_wootters(rho: DensityMatrix) -> TangleValue:
    """Tangle (squared concurrence) of a two-qubit state.

    The spin flip uses the transpose in the computational product basis.
    """
    _require_two_qubit(rho)
    r = rho.matrix
    tilde = _YY @ r.T @ _YY
    # restrict sqrt(rho) rho~ sqrt(rho) to the support of rho: zero eigenvalues
    # would otherwise leak ~sqrt(1e-16) noise into lambda_3, lambda_4
    q, v = hermitian_eig(r)
    keep = q > SUPPORT_TOL
    w_half = v[:, keep] * np.sqrt(q[keep])
    inner = w_half.conj().T @ tilde @ w_half
    w = np.clip(np.linalg.eigvalsh((inner + inner.conj().T) / 2), 0.0, None)
    lam = np.zeros(4)
    lam[: w.size] = np.sort(np.sqrt(w))[::-1]
    c = max(0.0, lam[0] - lam[1] - lam[2] - lam[3])
    return TangleValue(min(1.0, c * c), lam)


def ie_two_qubit(rho: DensityMatrix, spectrum: Spectrum = Spectrum()) -> float:
    return spectrum.alpha**2 * tangle_wootters(rho).value


def _isometry(x: np.ndarray, m: int, k: int) -> np.ndarray:
    z = (x[: m * k] + 1j * x[m * k :]).reshape(m, k)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _unnormalized_members(u: np.ndarray, sqrt_q: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    # row j: sum_i U_ji sqrt(q_i) |e_i>
    return (u * sqrt_q) @ vecs.T


def _roof_cost(members: np.ndarray, dim_b: int) -> float:
    # sum_j p_j (1 - |r_j|^2) = sum_j (p_j - |r~_j|^2 / p_j) with r~ the unnormalized Bloch vector
    t = members.reshape(len(members), 2, dim_b)
    red = np.einsum("jab,jcb->jac", t, t.conj())
    p = np.real(red[:, 0, 0] + red[:, 1, 1])
    rx = 2 * np.real(red[:, 0, 1])
    ry = -2 * np.imag(red[:, 0, 1])
    rz = np.real(red[:, 0, 0] - red[:, 1, 1])
    keep = p > 1e-15
    return float(np.sum(p[keep] - (rx[keep] ** 2 + ry[keep] ** 2 + rz[keep] ** 2) / p[keep]))


def decomposition_from_isometry(rho: DensityMatrix, u: np.ndarray) -> Decomposition:
    """Pure-state decomposition of ``rho`` generated by an ``m x rank`` isometry."""
    q, v = hermitian_eig(rho.matrix)
    keep = q > 1e-8
    members = _unnormalized_members(u, np.sqrt(q[keep]), v[:, keep])
    p = np.sum(np.abs(members) ** 2, axis=1)
    nz = p > 1e-15
    states = tuple(PureState.normalized(mv, rho.dim_a, rho.dim_b) for mv in members[nz])
    return Decomposition(p[nz] / p[nz].sum(), states)


def convex_roof_oracle(
    rho: DensityMatrix,
    spectrum: Spectrum = Spectrum(),
    ensemble_sizes: Sequence[int] = (2, 3, 4),
    restarts: int = 4,
    seed: int = 0,
    maxiter: int = 300,
) -> tuple[float, Decomposition]:
    """Numerical convex roof of the pure-state IE for a rank <= 2 state with a qubit on A.

    Every size-m decomposition of a rank-2 state is ``|psi~_j> = sum_i U_ji
    sqrt(q_i) |e_i>`` for an m x 2 isometry ``U``; the search runs over
    Haar-random isometries refined with Nelder-Mead. The result is an upper
    bound on the convex roof.
    """
    if rho.dim_a != 2:
        raise ValidationError(f"convex roof search needs a qubit on A, got dim_a = {rho.dim_a}")
    q, v = hermitian_eig(rho.matrix)
    if len(q) > 2 and q[-3] >= 1e-8:
        raise ValidationError(f"state rank exceeds 2 (third eigenvalue {q[-3]:.3e})")
    keep = q > 1e-8
    sqrt_q, vecs = np.sqrt(q[keep]), v[:, keep]
    k = int(keep.sum())

    best_val, best_u = np.inf, None
    rng = np.random.default_rng(seed)
    for m in ensemble_sizes:
        if m < k:
            continue
        for _ in range(restarts):
            x0 = rng.standard_normal(2 * m * k)

            def cost(x, m=m):
                return _roof_cost(_unnormalized_members(_isometry(x, m, k), sqrt_q, vecs), rho.dim_b)

            res = minimize(
                cost, x0, method="Nelder-Mead", options={"maxiter": maxiter, "xatol": 1e-10, "fatol": 1e-13}
            )
            # restarts reduce by strict improvement, so ties keep the earliest restart
            if res.fun < best_val:
                best_val, best_u = float(res.fun), _isometry(res.x, m, k)
    if best_u is None:
        raise ValidationError("no admissible ensemble size")
    decomp = decomposition_from_isometry(rho, best_u)
    return spectrum.alpha**2 * max(0.0, best_val), decomp
