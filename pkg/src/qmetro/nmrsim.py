"""Pulse-level simulation of two-qubit (1H, 13C) NMR state preparation.

Conventions
-----------
* Qubit order is (H, C) = (A, B).
* A pulse ``[theta]_phi`` is ``exp(-i theta/2 (cos(phi) X + sin(phi) Y))``.
* Free J evolution for time ``t`` is ``exp(-i pi J t Z(x)Z / 2)``.
* A gradient removes every off-diagonal element in the computational basis.
* Frame shifts are virtual ``Rz`` rotations (phase bookkeeping). They are
  exact and never carry calibration error.

Everything runs on the traceless deviation matrix; an affine map turns the
final deviation into the effective (pseudopure-normalized) state.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

import numpy as np
from scipy.optimize import least_squares, minimize

from .entanglement import tangle_wootters
from .metrology import ip_closed
from .qmat import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    DensityMatrix,
    ValidationError,
    project_to_state,
    uhlmann_fidelity,
)
from .states import FamilyParams, family_eigenstates, family_state

__all__ = [
    "J_COUPLING",
    "Pulse",
    "JEvolution",
    "Gradient",
    "FrameShift",
    "ErrorModel",
    "PrepReport",
    "ZCalibration",
    "ConventionFitError",
    "pulse_unitary",
    "rz",
    "frame_unitary",
    "j_evolution",
    "gradient_dephase",
    "gradient_kraus",
    "thermal_deviation",
    "pseudopure_sequence",
    "pseudopure_prep",
    "cnot_sequence",
    "hadamard_sequence",
    "sequence_unitary",
    "propagate",
    "effective_state",
    "fit_local_z",
    "calibrate_z_corrections",
    "family_sequence",
    "prepare_family",
    "monte_carlo",
    "CNOT",
    "HADAMARD",
]

J_COUPLING = 215.0  # Hz, 1H-13C scalar coupling in chloroform

PHASES = {"x": 0.0, "y": math.pi / 2, "-x": math.pi, "-y": -math.pi / 2}
NUCLEI = ("H", "C")

CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


class ConventionFitError(RuntimeError):
    """A local-z fit could not reconcile a pulse sequence with its target gate."""

    def __init__(self, what: str, residual: float, tol: float):
        super().__init__(f"{what}: local-z fit residual {residual:.3e} exceeds {tol:.1e}")
        self.what, self.residual, self.tol = what, residual, tol


@dataclass(frozen=True)
class Pulse:
    nucleus: str
    angle: float
    phase: str = "x"

    def __post_init__(self):
        if self.nucleus not in NUCLEI:
            raise ValidationError(f"nucleus must be one of {NUCLEI}, got {self.nucleus!r}")
        if self.phase not in PHASES:
            raise ValidationError(f"phase must be one of {tuple(PHASES)}, got {self.phase!r}")
        if not math.isfinite(self.angle):
            raise ValidationError("pulse angle must be finite")

    def scaled(self, factor: float) -> "Pulse":
        return Pulse(self.nucleus, self.angle * factor, self.phase)

    def __str__(self):
        return f"[{self.angle:.4g}]_{self.phase}^{self.nucleus}"


@dataclass(frozen=True)
class JEvolution:
    duration: float

    def __post_init__(self):
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ValidationError(f"J evolution duration must be > 0, got {self.duration!r}")

    def __str__(self):
        return f"U[{self.duration:.4g} s]"


@dataclass(frozen=True)
class Gradient:
    def __str__(self):
        return "G_z"


@dataclass(frozen=True)
class FrameShift:
    nucleus: str
    angle: float

    def __post_init__(self):
        if self.nucleus not in NUCLEI:
            raise ValidationError(f"nucleus must be one of {NUCLEI}, got {self.nucleus!r}")

    def __str__(self):
        return f"Z({self.angle:.4g})^{self.nucleus}"


SequenceEvent = Union[Pulse, JEvolution, Gradient, FrameShift]


def _on(nucleus: str, op: np.ndarray) -> np.ndarray:
    eye = np.eye(2, dtype=complex)
    return np.kron(op, eye) if nucleus == "H" else np.kron(eye, op)


def _rotation(angle: float, phi: float) -> np.ndarray:
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    axis = math.cos(phi) * SIGMA_X + math.sin(phi) * SIGMA_Y
    return c * np.eye(2) - 1j * s * axis


def rz(angle: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])


def pulse_unitary(p: Pulse) -> np.ndarray:
    return _on(p.nucleus, _rotation(p.angle, PHASES[p.phase]))


def frame_unitary(f: FrameShift) -> np.ndarray:
    return _on(f.nucleus, rz(f.angle))


def j_evolution(duration: float, j: float = J_COUPLING) -> np.ndarray:
    if duration < 0:
        raise ValidationError(f"duration must be >= 0, got {duration!r}")
    phase = math.pi * j * duration / 2
    zz = np.array([1, -1, -1, 1])
    return np.diag(np.exp(-1j * phase * zz))


def gradient_dephase(rho):
    """Zero all off-diagonal elements; accepts a :class:`DensityMatrix` or a raw matrix."""
    if isinstance(rho, DensityMatrix):
        return DensityMatrix(np.diag(np.diag(rho.matrix)), rho.dim_a, rho.dim_b)
    m = np.asarray(rho, dtype=complex)
    return np.diag(np.diag(m))


def gradient_kraus() -> list[np.ndarray]:
    """The gradient as a channel: projectors onto the computational basis."""
    return [np.diag(e).astype(complex) for e in np.eye(4)]


def thermal_deviation(gamma_ratio: float = 1.0) -> np.ndarray:
    """Zeeman deviation matrix ``(Z_H + Z_C / gamma_ratio) / 4``."""
    return (np.kron(SIGMA_Z, np.eye(2)) + np.kron(np.eye(2), SIGMA_Z) / gamma_ratio) / 4


def pseudopure_sequence(j: float = J_COUPLING) -> list:
    return [
        Pulse("C", math.pi / 3, "x"),
        Gradient(),
        Pulse("H", math.pi / 4, "x"),
        JEvolution(1 / (2 * j)),
        Pulse("H", math.pi / 4, "-y"),
        Gradient(),
    ]


def cnot_sequence(j: float = J_COUPLING) -> list:
    """CNOT with H as control and C as target."""
    h = math.pi / 2
    return [
        Pulse("C", h, "y"),
        JEvolution(1 / (2 * j)),
        Pulse("C", h, "x"),
        Pulse("C", h, "-y"),
        Pulse("C", h, "x"),
        Pulse("C", h, "y"),
        Pulse("H", h, "-y"),
        Pulse("H", h, "-x"),
        Pulse("H", h, "y"),
    ]


def hadamard_sequence() -> list:
    return [Pulse("H", math.pi / 2, "y"), Pulse("H", math.pi, "x")]


def _event_unitary(ev, j: float) -> np.ndarray:
    if isinstance(ev, Pulse):
        return pulse_unitary(ev)
    if isinstance(ev, JEvolution):
        return j_evolution(ev.duration, j)
    if isinstance(ev, FrameShift):
        return frame_unitary(ev)
    raise ValidationError(f"{ev} has no unitary")


def sequence_unitary(events: Iterable, j: float = J_COUPLING) -> np.ndarray:
    """Propagator of a gradient-free sequence (events in time order)."""
    u = np.eye(4, dtype=complex)
    for ev in events:
        if isinstance(ev, Gradient):
            raise ValidationError("a gradient is not unitary")
        u = _event_unitary(ev, j) @ u
    return u


def propagate(events: Iterable, m: np.ndarray, j: float = J_COUPLING, factors: Iterator[float] | None = None) -> np.ndarray:
    """Push a 4x4 operator through a sequence; ``factors`` rescales each pulse angle in turn."""
    m = np.asarray(m, dtype=complex)
    for ev in events:
        if isinstance(ev, Gradient):
            m = np.diag(np.diag(m))
            continue
        if isinstance(ev, Pulse) and factors is not None:
            ev = ev.scaled(next(factors))
        u = _event_unitary(ev, j)
        m = u @ m @ u.conj().T
    return (m + m.conj().T) / 2


@functools.lru_cache(maxsize=None)
def _pseudopure_scale(gamma_ratio: float, j: float) -> float:
    dev = propagate(pseudopure_sequence(j), thermal_deviation(gamma_ratio), j)
    target = np.diag([0.75, -0.25, -0.25, -0.25])
    num = np.vdot(dev, target).real
    if abs(num) < 1e-12:
        raise ValidationError("the pseudopure sequence leaves no |00> component")
    return float(num / np.vdot(dev, dev).real)


def effective_state(deviation: np.ndarray, gamma_ratio: float = 1.0, j: float = J_COUPLING) -> DensityMatrix:
    """``I/4 + s * deviation``, with ``s`` fixed by the ideal pseudopure preparation.

    Small negative eigenvalues produced by pulse errors are clipped.
    """
    m = np.eye(4) / 4 + _pseudopure_scale(gamma_ratio, j) * np.asarray(deviation)
    return project_to_state(m, 2, 2)


def pseudopure_prep(gamma_ratio: float = 1.0, j: float = J_COUPLING) -> DensityMatrix:
    """Pseudopure ``|00><00|`` from the thermal deviation matrix."""
    dev = propagate(pseudopure_sequence(j), thermal_deviation(gamma_ratio), j)
    return effective_state(dev, gamma_ratio, j)


def _local_z(params) -> tuple[np.ndarray, np.ndarray]:
    delta, a, b, c, e = params
    post = np.kron(rz(a), rz(b))
    pre = np.kron(rz(c), rz(e))
    return np.exp(1j * delta) * post, pre


def fit_local_z(u: np.ndarray, target: np.ndarray, starts: int = 16, seed: int = 0):
    """Fit ``u = e^{i delta} (Rz(a) (x) Rz(b)) target (Rz(c) (x) Rz(e))``.

    Returns ``(params, residual)`` with ``params = (delta, a, b, c, e)`` and the
    residual the max elementwise deviation.
    """
    u = np.asarray(u, dtype=complex)

    def resid(x):
        post, pre = _local_z(x)
        d = (post @ target @ pre - u).ravel()
        return np.concatenate([d.real, d.imag])

    rng = np.random.default_rng(seed)
    best_x, best_r = None, np.inf
    for i in range(starts):
        x0 = np.zeros(5) if i == 0 else rng.uniform(-math.pi, math.pi, 5)
        sol = least_squares(resid, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
        r = float(np.max(np.abs(resid(sol.x))))
        if r < best_r:
            best_x, best_r = sol.x, r
        if best_r < 1e-12:
            break
    return tuple(float(v) for v in best_x), best_r


@dataclass(frozen=True)
class ZCalibration:
    """Frame shifts bracketing the entangling step of the family preparation."""

    pre_h: float
    post_h: float
    post_c: float
    infidelity: float = 0.0


def family_sequence(p: FamilyParams, cal: ZCalibration, j: float = J_COUPLING) -> list:
    """Events after the pseudopure step that prepare the family state ``p``.

    ``[theta2]_x^C`` followed by a gradient sets the eigenvalue weights;
    Hadamard, a frame shift, ``[theta1]_x^H`` and the CNOT build the pure
    eigenstates in both blocks.
    """
    return [
        Pulse("C", p.theta2, "x"),
        Gradient(),
        *hadamard_sequence(),
        FrameShift("H", cal.pre_h),
        Pulse("H", p.theta1, "x"),
        *cnot_sequence(j),
        FrameShift("H", cal.post_h),
        FrameShift("C", cal.post_c),
    ]


def _pulse_state(p: FamilyParams, cal: ZCalibration, gamma_ratio: float, j: float, factors=None) -> DensityMatrix:
    events = pseudopure_sequence(j) + family_sequence(p, cal, j)
    dev = propagate(events, thermal_deviation(gamma_ratio), j, factors)
    return effective_state(dev, gamma_ratio, j)


_CAL_POINTS = (
    FamilyParams(0.0, 0.0),
    FamilyParams(math.pi / 5, math.pi / 7),
    FamilyParams(math.pi / 3, 2 * math.pi / 5),
)


@functools.lru_cache(maxsize=None)
def calibrate_z_corrections(gamma_ratio: float = 1.0, j: float = J_COUPLING, tol: float = 1e-4) -> ZCalibration:
    """Fit the frame shifts once by maximizing noiseless fidelity with the family states.

    Raises :class:`ConventionFitError` if the best fit leaves an infidelity above ``tol``.
    """
    u_cnot = sequence_unitary(cnot_sequence(j), j)
    _, r = fit_local_z(u_cnot, CNOT)
    if r > 1e-6:
        raise ConventionFitError("CNOT sequence", r, 1e-6)

    targets = [family_state(p) for p in _CAL_POINTS]

    def infidelity(x):
        cal = ZCalibration(*x)
        return float(
            np.mean([1 - uhlmann_fidelity(_pulse_state(p, cal, gamma_ratio, j), t) for p, t in zip(_CAL_POINTS, targets)])
        )

    grid = np.linspace(-math.pi, math.pi, 8, endpoint=False)
    starts = sorted(
        ((infidelity((a, b, c)), (a, b, c)) for a in grid for b in grid for c in (0.0, math.pi)),
        key=lambda t: t[0],
    )[:4]
    best = min(
        (minimize(infidelity, np.array(x0), method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 2000})
         for _, x0 in starts),
        key=lambda res: res.fun,
    )
    wrapped = [float((v + math.pi) % (2 * math.pi) - math.pi) for v in best.x]
    if best.fun > tol:
        raise ConventionFitError("family preparation", float(best.fun), tol)
    return ZCalibration(*wrapped, infidelity=float(best.fun))


def prepare_family(
    p: FamilyParams,
    backend: str = "gate",
    calibration: ZCalibration | None = None,
    gamma_ratio: float = 1.0,
    j: float = J_COUPLING,
) -> DensityMatrix:
    """Prepare the family state with ideal gates or with the full pulse sequence."""
    if backend == "gate":
        (w0, a), (w1, b) = family_eigenstates(p)
        m = w0 * np.outer(a.amplitudes, a.amplitudes.conj()) + w1 * np.outer(b.amplitudes, b.amplitudes.conj())
        return DensityMatrix(m, 2, 2)
    if backend == "pulse":
        cal = calibration or calibrate_z_corrections(gamma_ratio, j)
        return _pulse_state(p, cal, gamma_ratio, j)
    raise ValidationError(f"backend must be 'gate' or 'pulse', got {backend!r}")


@dataclass(frozen=True)
class ErrorModel:
    """Relative pulse-angle miscalibration, drawn independently per pulse per run."""

    relative_bound: float = 0.03
    runs: int = 100
    distribution: str = "uniform"
    seed: int = 0

    def __post_init__(self):
        if not (0 <= self.relative_bound < 1):
            raise ValidationError(f"relative_bound must lie in [0, 1), got {self.relative_bound!r}")
        if self.runs < 1:
            raise ValidationError(f"runs must be >= 1, got {self.runs}")
        if self.distribution not in ("uniform", "gaussian"):
            raise ValidationError(f"distribution must be 'uniform' or 'gaussian', got {self.distribution!r}")

    def factors(self, run_index: int) -> Iterator[float]:
        rng = np.random.default_rng([self.seed, run_index])
        while True:
            if self.relative_bound == 0:
                yield 1.0
            elif self.distribution == "uniform":
                yield 1.0 + rng.uniform(-self.relative_bound, self.relative_bound)
            else:
                yield 1.0 + rng.normal(0.0, self.relative_bound / 2)


ERROR_BAR_DEFINITION = (
    "tangle_std and ip_std are sample standard deviations over the error-affected runs; "
    "mean_state is the average of the run states and distance_to_target its trace "
    "distance from the ideal family state"
)


@dataclass(frozen=True)
class PrepReport:
    theta1: float
    theta2: float
    mean_state: DensityMatrix
    fidelity_mean: float
    fidelity_min: float
    tangle_mean: float
    tangle_std: float
    ip_mean: float
    ip_std: float
    distance_to_target: float
    runs: int
    relative_bound: float
    seed: int
    run_fidelities: tuple[float, ...] = field(repr=False, default=())
    error_bar_definition: str = ERROR_BAR_DEFINITION

    def to_dict(self) -> dict:
        return {
            "theta1": self.theta1,
            "theta2": self.theta2,
            "fidelity_mean": self.fidelity_mean,
            "fidelity_min": self.fidelity_min,
            "tangle_mean": self.tangle_mean,
            "tangle_std": self.tangle_std,
            "ip_mean": self.ip_mean,
            "ip_std": self.ip_std,
            "runs": self.runs,
            "relative_bound": self.relative_bound,
            "seed": self.seed,
        }


def _std(x, ddof: int) -> float:
    # identical samples give exactly zero rather than rounding noise from the mean
    x = np.asarray(x, dtype=float)
    return 0.0 if np.ptp(x) == 0 else float(np.std(x, ddof=ddof))


def monte_carlo(
    p: FamilyParams,
    em: ErrorModel = ErrorModel(),
    calibration: ZCalibration | None = None,
    gamma_ratio: float = 1.0,
    j: float = J_COUPLING,
) -> PrepReport:
    """Repeat the pulse-level preparation with miscalibrated pulse angles.

    Run ``r`` draws its errors from the substream ``(em.seed, r)``; every
    pulse in the pseudopure, weighting, Hadamard and CNOT steps is affected.
    """
    cal = calibration or calibrate_z_corrections(gamma_ratio, j)
    target = family_state(p)
    fids, tangles, ips, mats = [], [], [], []
    for r in range(em.runs):
        rho = _pulse_state(p, cal, gamma_ratio, j, em.factors(r))
        fids.append(uhlmann_fidelity(rho, target))
        tangles.append(tangle_wootters(rho).value)
        ips.append(ip_closed(rho).value)
        mats.append(rho.matrix)
    mean = np.mean(mats, axis=0)
    mean_state = DensityMatrix((mean + mean.conj().T) / 2, 2, 2)
    diff = np.linalg.eigvalsh(mean_state.matrix - target.matrix)
    ddof = 1 if em.runs > 1 else 0
    return PrepReport(
        theta1=p.theta1,
        theta2=p.theta2,
        mean_state=mean_state,
        fidelity_mean=float(np.mean(fids)),
        fidelity_min=float(np.min(fids)),
        tangle_mean=float(np.mean(tangles)),
        tangle_std=_std(tangles, ddof),
        ip_mean=float(np.mean(ips)),
        ip_std=_std(ips, ddof),
        distance_to_target=float(0.5 * np.sum(np.abs(diff))),
        runs=em.runs,
        relative_bound=em.relative_bound,
        seed=em.seed,
        run_fidelities=tuple(float(f) for f in fids),
    )
