"""Local commutativity-preserving channels, Kraus/Choi machinery and fuzz helpers.

Families: completely decohering maps, random-unitary (unital) qubit maps and
isotropic maps ``t Phi(rho) + (1 - t) I/d`` with ``Phi`` a unitary or
antiunitary (transpose-composed) conjugation.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .qmat import (
    DensityMatrix,
    ValidationError,
    gell_mann_basis,
    haar_unitary,
    is_unitary,
)

__all__ = [
    "FamilyTag",
    "KrausChannel",
    "IsotropicParams",
    "TRangeError",
    "isotropic_range",
    "build_completely_decohering",
    "build_random_unitary",
    "build_isotropic",
    "isotropic_direct",
    "choi_of_map",
    "apply",
    "apply_local_A",
    "apply_local_B",
    "choi_matrix",
    "classify_gell_mann_vectorization",
    "random_unital_qubit_channel",
    "random_channel",
]


class FamilyTag(str, Enum):
    COMPLETELY_DECOHERING = "CompletelyDecohering"
    RANDOM_UNITARY = "RandomUnitary"
    ISOTROPIC_UNITARY = "IsotropicUnitary"
    ISOTROPIC_ANTIUNITARY = "IsotropicAntiunitary"
    CUSTOM = "Custom"


@dataclass(frozen=True)
class KrausChannel:
    """Channel ``X -> sum_i K_i X K_i^dag`` on a ``dim``-level system."""

    dim: int
    kraus: tuple[np.ndarray, ...]
    family_tag: FamilyTag = FamilyTag.CUSTOM
    completeness_tol: float = field(default=1e-10, repr=False, compare=False)

    def __post_init__(self):
        ks = tuple(np.array(k, dtype=complex) for k in self.kraus)
        if not ks:
            raise ValidationError("a channel needs at least one Kraus operator")
        for k in ks:
            if k.shape != (self.dim, self.dim):
                raise ValidationError(f"Kraus operator shape {k.shape} != ({self.dim}, {self.dim})")
            k.setflags(write=False)
        defect = self._defect(ks)
        if defect > self.completeness_tol:
            raise ValidationError(f"Kraus operators are not complete (defect {defect:.3e})")
        object.__setattr__(self, "kraus", ks)
        object.__setattr__(self, "family_tag", FamilyTag(self.family_tag))

    def _defect(self, ks) -> float:
        s = sum(k.conj().T @ k for k in ks)
        return float(np.max(np.abs(s - np.eye(self.dim))))

    def completeness_defect(self) -> float:
        return self._defect(self.kraus)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        return sum(k @ x @ k.conj().T for k in self.kraus)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "kraus": [{"re": k.real.tolist(), "im": k.imag.tolist()} for k in self.kraus],
            "tag": self.family_tag.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KrausChannel":
        ks = [np.asarray(k["re"], float) + 1j * np.asarray(k["im"], float) for k in d["kraus"]]
        return cls(int(d["dim"]), tuple(ks), FamilyTag(d.get("tag", "Custom")))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "KrausChannel":
        return cls.from_dict(json.loads(text))


class TRangeError(ValidationError):
    """Isotropic parameter outside the completely positive range."""

    def __init__(self, t: float, d: int, anti: bool, lower: float, upper: float):
        self.t, self.d, self.anti = t, d, anti
        self.lower, self.upper = lower, upper
        if anti:
            bounds = f"-1/(d-1) = {lower:.6g} <= t <= 1/(d+1) = {upper:.6g}"
        else:
            bounds = f"-1/(d^2-1) = {lower:.6g} <= t <= 1"
        if t > upper:
            violated = f"t <= {'1/(d+1)' if anti else '1'} = {upper:.6g}"
        else:
            violated = f"t >= {'-1/(d-1)' if anti else '-1/(d^2-1)'} = {lower:.6g}"
        super().__init__(
            f"t = {t:.6g} violates {violated} for d = {d} "
            f"({'antiunitary' if anti else 'unitary'} isotropic range {bounds})"
        )


def isotropic_range(d: int, anti: bool) -> tuple[float, float]:
    if d < 2:
        raise ValidationError(f"isotropic maps need d >= 2, got {d}")
    if anti:
        return -1.0 / (d - 1), 1.0 / (d + 1)
    return -1.0 / (d * d - 1), 1.0


@dataclass(frozen=True)
class IsotropicParams:
    d: int
    t: float
    u: np.ndarray | None = None
    anti: bool = False
    range_tol: float = field(default=1e-12, repr=False)

    def __post_init__(self):
        lo, hi = isotropic_range(self.d, self.anti)
        if not (lo - self.range_tol <= self.t <= hi + self.range_tol):
            raise TRangeError(self.t, self.d, self.anti, lo, hi)
        u = np.eye(self.d, dtype=complex) if self.u is None else np.asarray(self.u, dtype=complex)
        if u.shape != (self.d, self.d) or not is_unitary(u):
            raise ValidationError("u must be a d x d unitary")
        object.__setattr__(self, "u", u)


def build_completely_decohering(
    basis=None,
    dim: int | None = None,
    weights_fn: str = "projective",
) -> KrausChannel:
    """Map every state to one diagonal in ``basis`` (columns are basis vectors).

    Only the projective-measurement weighting ``K_i = |i><i|`` is built in.
    """
    if basis is None:
        if dim is None:
            raise ValidationError("give a basis or a dimension")
        basis = np.eye(dim)
    b = np.asarray(basis, dtype=complex)
    if b.ndim != 2 or b.shape[0] != b.shape[1] or not is_unitary(b):
        raise ValidationError("basis must be orthonormal (columns of a unitary)")
    if weights_fn != "projective":
        raise ValidationError(f"unsupported weights function {weights_fn!r}")
    ks = tuple(np.outer(b[:, i], b[:, i].conj()) for i in range(b.shape[0]))
    return KrausChannel(b.shape[0], ks, FamilyTag.COMPLETELY_DECOHERING)


def build_random_unitary(probs: Sequence[float], unitaries: Sequence[np.ndarray]) -> KrausChannel:
    """``rho -> sum_i p_i U_i rho U_i^dag`` (unital)."""
    p = np.asarray(probs, dtype=float)
    if len(p) != len(unitaries) or len(p) == 0:
        raise ValidationError("need one probability per unitary")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-10:
        raise ValidationError(f"probabilities must be nonnegative and sum to 1, got {p.sum()!r}")
    us = [np.asarray(u, dtype=complex) for u in unitaries]
    if not all(is_unitary(u) for u in us):
        raise ValidationError("all matrices must be unitary")
    ks = tuple(np.sqrt(pi) * u for pi, u in zip(p, us))
    return KrausChannel(us[0].shape[0], ks, FamilyTag.RANDOM_UNITARY)


def classify_gell_mann_vectorization(d: int) -> tuple[list[int], list[int]]:
    """Split Gell-Mann indices by the sign of the plain (unconjugated) ``vec(g) . vec(g)``."""
    type1, type2 = [], []
    for i, g in enumerate(gell_mann_basis(d)):
        v = g.ravel()
        s = np.sum(v * v).real
        (type1 if s > 0 else type2).append(i)
    return type1, type2


def build_isotropic(params: IsotropicParams) -> KrausChannel:
    """Kraus form of ``t Phi(rho) + (1 - t) I/d``, with ``d^2`` operators.

    For an antiunitary ``Phi`` the generalized Pauli matrices are split into
    real-vectorization (type 1) and imaginary-vectorization (type 2) groups
    with separate weights. Operators with zero weight at a range endpoint are
    kept so the count stays ``d^2``.
    """
    d, t = params.d, params.t
    gms = gell_mann_basis(d)
    eye = np.eye(d, dtype=complex)
    if not params.anti:
        k0 = np.sqrt(max(0.0, (1 + (d * d - 1) * t) / d**2)) * eye
        c = np.sqrt(max(0.0, (1 - t) / (2 * d)))
        ks = [k0] + [c * g for g in gms]
        tag = FamilyTag.ISOTROPIC_UNITARY
    else:
        type1, type2 = classify_gell_mann_vectorization(d)
        k0 = np.sqrt(max(0.0, (1 + (d - 1) * t) / d**2)) * eye
        c1 = np.sqrt(max(0.0, (1 + (d - 1) * t) / (2 * d)))
        c2 = np.sqrt(max(0.0, (1 - (d + 1) * t) / (2 * d)))
        ks = [k0] + [c1 * gms[i] for i in type1] + [c2 * gms[i] for i in type2]
        tag = FamilyTag.ISOTROPIC_ANTIUNITARY
    u = params.u
    return KrausChannel(d, tuple(u @ k for k in ks), tag)


def isotropic_direct(x, d: int, t: float, u=None, anti: bool = False) -> np.ndarray:
    """Direct evaluation of ``t U x^(T) U^dag + (1 - t) Tr(x) I/d``; no range check."""
    x = np.asarray(x, dtype=complex)
    u = np.eye(d) if u is None else np.asarray(u, dtype=complex)
    inner = x.T if anti else x
    return t * (u @ inner @ u.conj().T) + (1 - t) * np.trace(x) * np.eye(d) / d


def choi_of_map(fn: Callable[[np.ndarray], np.ndarray], d: int) -> np.ndarray:
    """Choi state ``(fn (x) id)(|Psi+><Psi+|)`` of any linear map on ``d x d`` matrices."""
    tau = np.zeros((d * d, d * d), dtype=complex)
    for k in range(d):
        for l in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[k, l] = 1
            el = np.zeros((d, d), dtype=complex)
            el[k, l] = 1
            tau += np.kron(fn(e), el)
    return tau / d


def choi_matrix(ch: KrausChannel) -> DensityMatrix:
    tau = choi_of_map(ch, ch.dim)
    tau = (tau + tau.conj().T) / 2
    return DensityMatrix(tau / np.trace(tau).real, ch.dim, ch.dim)


def apply(rho: DensityMatrix, ops: Sequence[np.ndarray]) -> DensityMatrix:
    m = sum(k @ rho.matrix @ k.conj().T for k in ops)
    m = (m + m.conj().T) / 2
    return DensityMatrix(m / np.trace(m).real, rho.dim_a, rho.dim_b)


def apply_local_A(rho: DensityMatrix, ch: KrausChannel) -> DensityMatrix:
    """``(Lambda_A (x) id_B)(rho)``."""
    if ch.dim != rho.dim_a:
        raise ValidationError(f"channel dimension {ch.dim} != dim_a {rho.dim_a}")
    eye = np.eye(rho.dim_b)
    return apply(rho, [np.kron(k, eye) for k in ch.kraus])


def apply_local_B(rho: DensityMatrix, ch: KrausChannel) -> DensityMatrix:
    """``(id_A (x) Lambda_B)(rho)``."""
    if ch.dim != rho.dim_b:
        raise ValidationError(f"channel dimension {ch.dim} != dim_b {rho.dim_b}")
    eye = np.eye(rho.dim_a)
    return apply(rho, [np.kron(eye, k) for k in ch.kraus])


def random_unital_qubit_channel(rng: np.random.Generator) -> KrausChannel:
    """Random-unitary qubit channel: 2-4 Haar unitaries with Dirichlet(1) weights."""
    n = int(rng.integers(2, 5))
    p = rng.dirichlet(np.ones(n))
    return build_random_unitary(p, [haar_unitary(2, rng) for _ in range(n)])


def random_channel(d: int, rng: np.random.Generator, n_kraus: int | None = None) -> KrausChannel:
    """Random CPTP map from a Haar-random Stinespring isometry."""
    n = int(rng.integers(1, d * d + 1)) if n_kraus is None else n_kraus
    v = haar_unitary(d * n, rng)[:, :d]
    ks = tuple(v[i * d:(i + 1) * d, :] for i in range(n))
    return KrausChannel(d, ks, FamilyTag.CUSTOM)
