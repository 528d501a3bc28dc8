"""Reference states: the extremal rank-2 X family, classical/separable/Bell states,
Hilbert-Schmidt sampling and the tangle vs IP region scan."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .entanglement import tangle_wootters
from .metrology import ip_closed
from .qmat import DensityMatrix, PureState, ValidationError, is_unitary, mix

__all__ = [
    "FamilyParams",
    "ScanRecord",
    "family_state",
    "family_eigenstates",
    "family_tangle",
    "family_ip",
    "extremal_curve",
    "reference_angles",
    "random_rank_k_hs",
    "random_pure_state",
    "classical_state",
    "bell",
    "separable_mixture",
    "random_product_term",
    "region_scan",
    "scan_csv",
    "curves_csv",
    "format_float",
]

_HALF_PI = math.pi / 2


@dataclass(frozen=True)
class FamilyParams:
    theta1: float
    theta2: float

    def __post_init__(self):
        for name, v in (("theta1", self.theta1), ("theta2", self.theta2)):
            if not (math.isfinite(v) and -1e-12 <= v <= _HALF_PI + 1e-12):
                raise ValidationError(f"{name} = {v!r} outside [0, pi/2]")


@dataclass(frozen=True)
class ScanRecord:
    index: int
    tangle: float
    ip: float

    @property
    def lower_ok(self) -> bool:
        return bool(self.tangle <= self.ip + 1e-9)

    @property
    def upper_ok(self) -> bool:
        return bool(self.ip <= 0.5 * (1 + self.tangle) + 1e-9)


def family_state(p: FamilyParams) -> DensityMatrix:
    """Rank-2 X state with eigenvalues ``cos^2(theta2/2)``, ``sin^2(theta2/2)``."""
    t1, t2 = p.theta1, p.theta2
    c2, s2 = math.cos(t2 / 2) ** 2, math.sin(t2 / 2) ** 2
    c_p, c_m = c2 * (1 + math.sin(t1)), c2 * (1 - math.sin(t1))
    s_p, s_m = s2 * (1 + math.sin(t1)), s2 * (1 - math.sin(t1))
    d_p = -math.cos(t1) / 2 * (1 + math.cos(t2))
    d_m = -math.cos(t1) / 2 * (1 - math.cos(t2))
    m = 0.5 * np.array(
        [
            [c_p, 0, 0, d_p],
            [0, s_p, d_m, 0],
            [0, d_m, s_m, 0],
            [d_p, 0, 0, c_m],
        ],
        dtype=complex,
    )
    return DensityMatrix(m, 2, 2)


def family_eigenstates(p: FamilyParams) -> tuple[tuple[float, PureState], tuple[float, PureState]]:
    """Spectral decomposition of :func:`family_state` as ``((w0, |a>), (w1, |b>))``.

    ``|a> = cos x|00> - sin x|11>`` and ``|b> = cos x|01> - sin x|10>`` with
    ``x = pi/4 - theta1/2``.
    """
    x = math.pi / 4 - p.theta1 / 2
    a = PureState(np.array([math.cos(x), 0, 0, -math.sin(x)]), 2, 2)
    b = PureState(np.array([0, math.cos(x), -math.sin(x), 0]), 2, 2)
    return (math.cos(p.theta2 / 2) ** 2, a), (math.sin(p.theta2 / 2) ** 2, b)


def family_tangle(p: FamilyParams) -> float:
    return math.cos(p.theta1) ** 2 * math.cos(p.theta2) ** 2


def family_ip(p: FamilyParams) -> float:
    t1, t2 = p.theta1, p.theta2
    return min(
        math.cos(t1) ** 2,
        (3 - math.cos(2 * t1) + 2 * math.cos(t1) ** 2 * math.cos(2 * t2)) / 4,
    )


def extremal_curve(kind: str, tangle: float) -> FamilyParams:
    """Family member on the lower (``IP = T``) or upper (``IP = (1 + T)/2``) boundary."""
    if not (0.0 <= tangle <= 1.0):
        raise ValidationError(f"target tangle {tangle!r} outside [0, 1]")
    if kind == "lower":
        return FamilyParams(0.0, math.acos(math.sqrt(tangle)))
    if kind == "upper":
        t1 = math.acos(math.sqrt((1 + tangle) / 2))
        arg = min(1.0, max(-1.0, 3 - 4 / (1 + tangle)))
        return FamilyParams(t1, 0.5 * math.acos(arg))
    raise ValidationError(f"kind must be 'lower' or 'upper', got {kind!r}")


def reference_angles() -> tuple[list[FamilyParams], list[FamilyParams]]:
    """Experimental angle settings: (a) lower boundary, (b) upper boundary."""
    pi = math.pi
    lower = [FamilyParams(0.0, k * pi / 14) for k in (1, 2, 3, 4, 5, 6, 7)]
    upper = [
        FamilyParams(0.0, 0.0),
        FamilyParams(7 * pi / 90, pi / 10),
        FamilyParams(pi / 9, pi / 10),
        FamilyParams(13 * pi / 90, 7 * pi / 45),
        FamilyParams(8 * pi / 45, 19 * pi / 90),
        FamilyParams(19 * pi / 90, 3 * pi / 10),
        FamilyParams(11 * pi / 45, 7 * pi / 18),
    ]
    return lower, upper


def random_rank_k_hs(dim_total: int, k: int, seed: int | np.random.Generator, dim_a: int = 2) -> DensityMatrix:
    """Hilbert-Schmidt random rank-``k`` state ``G G^dag / Tr(G G^dag)``, ``G`` Ginibre ``dim_total x k``."""
    if not (1 <= k <= dim_total):
        raise ValidationError(f"rank k = {k} must lie in [1, {dim_total}]")
    if dim_total % dim_a:
        raise ValidationError(f"dim_a = {dim_a} does not divide {dim_total}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((dim_total, k)) + 1j * rng.standard_normal((dim_total, k))
    m = g @ g.conj().T
    m = (m + m.conj().T) / 2
    return DensityMatrix(m / np.trace(m).real, dim_a, dim_total // dim_a)


def random_pure_state(dim_a: int, dim_b: int, rng: np.random.Generator) -> PureState:
    n = dim_a * dim_b
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return PureState.normalized(v, dim_a, dim_b)


def classical_state(probs: Sequence[float], basis_a, states_b: Sequence) -> DensityMatrix:
    """``sum_i p_i |i><i|_A (x) rho_B^(i)`` for an orthonormal basis ``{|i>}`` (columns of ``basis_a``)."""
    b = np.asarray(basis_a, dtype=complex)
    if b.ndim != 2 or not is_unitary(b, tol=1e-10):
        raise ValidationError("basis_a must be orthonormal (columns of a unitary)")
    p = np.asarray(probs, dtype=float)
    if len(p) != b.shape[1] or len(states_b) != len(p):
        raise ValidationError("need one probability and one B state per basis vector")
    if np.any(p < 0) or abs(p.sum() - 1) > 1e-10:
        raise ValidationError("probs must be a probability vector")
    bs = [s.matrix if isinstance(s, DensityMatrix) else np.asarray(s, dtype=complex) for s in states_b]
    dim_b = bs[0].shape[0]
    m = sum(pi * np.kron(np.outer(b[:, i], b[:, i].conj()), bs[i]) for i, pi in enumerate(p))
    return DensityMatrix((m + m.conj().T) / 2, b.shape[0], dim_b)


_BELL = {
    "phi+": np.array([1, 0, 0, 1]),
    "phi-": np.array([1, 0, 0, -1]),
    "psi+": np.array([0, 1, 1, 0]),
    "psi-": np.array([0, 1, -1, 0]),
}


def bell(which: str = "phi+") -> PureState:
    try:
        v = _BELL[which.lower()]
    except KeyError:
        raise ValidationError(f"unknown Bell state {which!r}; choose from {sorted(_BELL)}") from None
    return PureState(v / math.sqrt(2), 2, 2)


def separable_mixture(ensemble: Iterable[tuple[float, object, object]]) -> DensityMatrix:
    """``sum_i p_i rho_A^(i) (x) rho_B^(i)`` from ``(p, rho_A, rho_B)`` triples."""
    items = list(ensemble)
    if not items:
        raise ValidationError("empty ensemble")
    p = np.array([w for w, _, _ in items], dtype=float)
    if np.any(p < 0) or abs(p.sum() - 1) > 1e-10:
        raise ValidationError("weights must be a probability vector")
    terms = []
    for _, ra, rb in items:
        ma = ra.matrix if isinstance(ra, DensityMatrix) else np.asarray(ra, dtype=complex)
        mb = rb.matrix if isinstance(rb, DensityMatrix) else np.asarray(rb, dtype=complex)
        terms.append(DensityMatrix(np.kron(ma, mb), ma.shape[0], mb.shape[0]))
    return mix(p, terms)


def random_product_term(dim_a: int, dim_b: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Random local states (HS-distributed full rank) for building separable mixtures."""
    return (
        random_rank_k_hs(dim_a, dim_a, rng, dim_a=dim_a).matrix,
        random_rank_k_hs(dim_b, dim_b, rng, dim_a=dim_b).matrix,
    )


def _scan_one(master_seed: int, index: int) -> ScanRecord:
    rho = random_rank_k_hs(4, 2, np.random.default_rng([master_seed, index]))
    return ScanRecord(index, tangle_wootters(rho).value, ip_closed(rho).value)


def region_scan(samples: int, seed: int, threads: int = 1) -> list[ScanRecord]:
    """Tangle and IP of ``samples`` HS-random rank-2 two-qubit states.

    Sample ``i`` draws from the substream seeded by ``(seed, i)``, so the
    output is independent of ``threads``.
    """
    if samples < 1:
        raise ValidationError(f"samples must be >= 1, got {samples}")
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(lambda i: _scan_one(seed, i), range(samples)))
    return [_scan_one(seed, i) for i in range(samples)]


def format_float(x: float) -> str:
    return f"{x:.12g}"


def scan_csv(records: Sequence[ScanRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["index", "tangle", "ip", "lower_ok", "upper_ok"])
    for r in records:
        w.writerow([r.index, format_float(r.tangle), format_float(r.ip), int(r.lower_ok), int(r.upper_ok)])
    return buf.getvalue()


def curves_csv(n_points: int, kind: str) -> str:
    """One extremal boundary sampled at ``n_points`` tangles from 0 to 1."""
    if n_points < 2:
        raise ValidationError(f"n_points must be >= 2, got {n_points}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["T", "theta1", "theta2", "ip"])
    for t in np.linspace(0.0, 1.0, n_points):
        p = extremal_curve(kind, float(t))
        w.writerow([format_float(t), format_float(p.theta1), format_float(p.theta2), format_float(family_ip(p))])
    return buf.getvalue()
