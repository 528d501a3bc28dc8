"""Dense complex linear algebra and state primitives for small bipartite systems.

Everything here works on plain ``numpy`` arrays wrapped in light, immutable
containers. Dimensions are dynamic but capped at :data:`MAX_DIM`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_DIM = 64
MAX_GELL_MANN_DIM = 8

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
NORM_TOL = 1e-10
# negative eigenvalues above -CLAMP_TOL are treated as numerical noise
CLAMP_TOL = 1e-9
REJECT_TOL = 1e-6
SUPPORT_TOL = 1e-13

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


class ValidationError(ValueError):
    """Raised when an input violates a type invariant or precondition."""


class EigenConvergenceError(RuntimeError):
    """Raised when a Hermitian eigensolve does not reproduce its input."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual norm {residual:.3e})")
        self.residual = residual


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D complex array within the dimension cap."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    if max(a.shape) > MAX_DIM:
        raise ValidationError(f"{name} dimension {max(a.shape)} exceeds cap {MAX_DIM}")
    return a


def hermiticity_defect(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and hermiticity_defect(m) <= tol


def is_unitary(u, tol: float = 1e-10) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))) <= tol


@dataclass(frozen=True)
class DensityMatrix:
    """Bipartite density matrix on ``C^dim_a (x) C^dim_b``.

    Validation happens on construction: Hermitian, unit trace and
    positive semidefinite, each within 1e-10.
    """

    matrix: np.ndarray
    dim_a: int
    dim_b: int = 1

    def __post_init__(self):
        m = as_matrix(self.matrix, "density matrix")
        if self.dim_a < 1 or self.dim_b < 1:
            raise ValidationError("subsystem dimensions must be positive")
        n = self.dim_a * self.dim_b
        if m.shape != (n, n):
            raise ValidationError(
                f"matrix shape {m.shape} does not match dims ({self.dim_a}, {self.dim_b})"
            )
        herm = hermiticity_defect(m)
        if herm > HERMITIAN_TOL:
            raise ValidationError(f"not Hermitian (max |M - M^dag| = {herm:.3e})")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValidationError(f"trace is {tr!r}, expected 1")
        lo = float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0])
        if lo < -PSD_TOL:
            raise ValidationError(f"not positive semidefinite (min eigenvalue {lo:.3e})")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.dim_a * self.dim_b

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def rank(self, tol: float = 1e-8) -> int:
        return int(np.sum(self.eigvalsh() > tol))

    def to_dict(self) -> dict:
        return {
            "dim_a": self.dim_a,
            "dim_b": self.dim_b,
            "re": self.matrix.real.tolist(),
            "im": self.matrix.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DensityMatrix":
        try:
            m = np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)
            return cls(m, int(d["dim_a"]), int(d["dim_b"]))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed density matrix record: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "DensityMatrix":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON: {exc}") from exc

    @classmethod
    def from_pure(cls, psi: "PureState") -> "DensityMatrix":
        v = psi.amplitudes
        return cls(np.outer(v, v.conj()), psi.dim_a, psi.dim_b)


@dataclass(frozen=True)
class PureState:
    """Unit-norm state vector on ``C^dim_a (x) C^dim_b``."""

    amplitudes: np.ndarray
    dim_a: int
    dim_b: int = 1

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=complex).ravel()
        if v.size != self.dim_a * self.dim_b:
            raise ValidationError(
                f"{v.size} amplitudes do not match dims ({self.dim_a}, {self.dim_b})"
            )
        if v.size > MAX_DIM:
            raise ValidationError(f"dimension {v.size} exceeds cap {MAX_DIM}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("non-finite amplitudes")
        nrm = np.linalg.norm(v)
        if abs(nrm - 1.0) > NORM_TOL:
            raise ValidationError(f"state norm is {nrm!r}, expected 1")
        object.__setattr__(self, "amplitudes", _frozen(v))

    @classmethod
    def normalized(cls, v, dim_a: int, dim_b: int = 1) -> "PureState":
        v = np.asarray(v, dtype=complex).ravel()
        nrm = np.linalg.norm(v)
        if nrm == 0:
            raise ValidationError("cannot normalize the zero vector")
        return cls(v / nrm, dim_a, dim_b)

    def density(self) -> DensityMatrix:
        return DensityMatrix.from_pure(self)


def tensor_product(a, b, max_dim: int = MAX_DIM) -> np.ndarray:
    """Kronecker product ``a (x) b``; rejects results beyond ``max_dim``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim == 1 and b.ndim == 1:
        if a.size * b.size > max_dim:
            raise ValidationError(f"product dimension {a.size * b.size} exceeds cap {max_dim}")
        return np.kron(a, b)
    a, b = np.atleast_2d(a), np.atleast_2d(b)
    rows, cols = a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]
    if max(rows, cols) > max_dim:
        raise ValidationError(f"product dimension {max(rows, cols)} exceeds cap {max_dim}")
    return np.kron(a, b)


def partial_trace(rho: DensityMatrix, subsystem: str) -> DensityMatrix:
    """Trace out subsystem ``"A"`` or ``"B"``; returns the other marginal."""
    t = rho.matrix.reshape(rho.dim_a, rho.dim_b, rho.dim_a, rho.dim_b)
    if subsystem == "B":
        red = np.einsum("ajbj->ab", t)
        d = rho.dim_a
    elif subsystem == "A":
        red = np.einsum("iaib->ab", t)
        d = rho.dim_b
    else:
        raise ValidationError(f"subsystem must be 'A' or 'B', got {subsystem!r}")
    red = (red + red.conj().T) / 2
    return DensityMatrix(red, d, 1)


def hermitian_eig(m, herm_tol: float = 1e-8, residual_tol: float = 1e-9):
    """Eigendecomposition of a Hermitian matrix.

    The input is symmetrized as ``(M + M^dag) / 2`` before solving.

    Returns
    -------
    eigenvalues : ndarray
        Real, ascending.
    eigenvectors : ndarray
        Orthonormal columns, ``M @ V[:, i] = eigenvalues[i] * V[:, i]``.
    """
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ValidationError(f"matrix must be square, got {a.shape}")
    defect = hermiticity_defect(a)
    if defect > herm_tol:
        raise ValidationError(f"not Hermitian (max |M - M^dag| = {defect:.3e})")
    a = (a + a.conj().T) / 2
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise EigenConvergenceError(f"eigensolver failed: {exc}", float("nan")) from exc
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    residual = float(np.max(np.abs(a @ v - v * w))) if a.size else 0.0
    if residual > residual_tol * scale:
        raise EigenConvergenceError("eigenpairs do not reproduce the input", residual)
    return w, v


def psd_sqrt(m) -> np.ndarray:
    """Principal square root of a positive semidefinite matrix.

    Eigenvalues in ``[-1e-6, 0)`` are clamped to zero; anything more
    negative is rejected.
    """
    w, v = hermitian_eig(m)
    if w.size and w[0] < -REJECT_TOL:
        raise ValidationError(f"matrix is not PSD (min eigenvalue {w[0]:.3e})")
    w = np.clip(w, 0.0, None)
    r = (v * np.sqrt(w)) @ v.conj().T
    return (r + r.conj().T) / 2


def project_to_state(m, dim_a: int, dim_b: int = 1) -> DensityMatrix:
    """Nearest valid density matrix: symmetrize, clip negative eigenvalues, renormalize."""
    a = as_matrix(m)
    a = (a + a.conj().T) / 2
    w, v = np.linalg.eigh(a)
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        raise ValidationError("no positive spectral weight to project onto")
    w = w / w.sum()
    r = (v * w) @ v.conj().T
    return DensityMatrix((r + r.conj().T) / 2, dim_a, dim_b)


def uhlmann_fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """``F = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``, clamped to [0, 1]."""
    if rho.matrix.shape != sigma.matrix.shape:
        raise ValidationError(
            f"dimension mismatch: {rho.matrix.shape} vs {sigma.matrix.shape}"
        )
    # work on the support of the lower-rank argument (F is symmetric): square
    # roots of numerically zero eigenvalues would otherwise add ~1e-8 noise
    q, v = hermitian_eig(rho.matrix)
    q2, v2 = hermitian_eig(sigma.matrix)
    if np.sum(q2 > SUPPORT_TOL) < np.sum(q > SUPPORT_TOL):
        q, v, sigma = q2, v2, rho
    keep = q > SUPPORT_TOL
    w_half = v[:, keep] * np.sqrt(q[keep])
    inner = w_half.conj().T @ sigma.matrix @ w_half
    inner = (inner + inner.conj().T) / 2
    w = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    f = float(np.sum(np.sqrt(w)) ** 2)
    return min(1.0, max(0.0, f))


def pauli_basis() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return SIGMA_X.copy(), SIGMA_Y.copy(), SIGMA_Z.copy()


def gell_mann_basis(d: int) -> list[np.ndarray]:
    """Generalized Gell-Mann matrices for dimension ``d``.

    Ordered as symmetric off-diagonal pairs (ascending ``(k, l)``), then the
    antisymmetric pairs, then the ``d - 1`` diagonal matrices. All are
    traceless and Hermitian with ``Tr(g_i g_j) = 2 delta_ij``; for ``d = 2``
    this is ``(sigma_x, sigma_y, sigma_z)``.
    """
    if d < 2:
        raise ValidationError(f"Gell-Mann basis needs d >= 2, got {d}")
    if d > MAX_GELL_MANN_DIM:
        raise ValidationError(f"d = {d} exceeds cap {MAX_GELL_MANN_DIM}")
    pairs = [(k, l) for k in range(d) for l in range(k + 1, d)]
    sym, anti = [], []
    for k, l in pairs:
        s = np.zeros((d, d), dtype=complex)
        s[k, l] = s[l, k] = 1
        sym.append(s)
        a = np.zeros((d, d), dtype=complex)
        a[k, l] = -1j
        a[l, k] = 1j
        anti.append(a)
    diag = []
    for l in range(1, d):
        entries = np.zeros(d)
        entries[:l] = 1
        entries[l] = -l
        diag.append(np.diag(np.sqrt(2.0 / (l * (l + 1))) * entries).astype(complex))
    return sym + anti + diag


def bloch_vector(state) -> np.ndarray:
    """Local Bloch vector of qubit A, ``r_k = Tr(rho (sigma_k (x) I_B))``."""
    if isinstance(state, PureState):
        rho = state.density()
    elif isinstance(state, DensityMatrix):
        rho = state
    else:
        raise ValidationError(f"expected PureState or DensityMatrix, got {type(state).__name__}")
    if rho.dim_a != 2:
        raise ValidationError(f"Bloch vector needs a qubit on A, got dim_a = {rho.dim_a}")
    red = partial_trace(rho, "B").matrix if rho.dim_b > 1 else rho.matrix
    return np.array([np.real(np.trace(red @ s)) for s in (SIGMA_X, SIGMA_Y, SIGMA_Z)])


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random ``d x d`` unitary via QR of a Ginibre matrix."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (z + z.conj().T) / 2


def local_operator(op_a, dim_b: int) -> np.ndarray:
    """``op_a (x) I_B``."""
    return np.kron(np.asarray(op_a, dtype=complex), np.eye(dim_b))


def conjugate(rho: DensityMatrix, u) -> DensityMatrix:
    """``U rho U^dag`` on the full space, keeping the bipartite dims."""
    u = np.asarray(u, dtype=complex)
    m = u @ rho.matrix @ u.conj().T
    return DensityMatrix((m + m.conj().T) / 2, rho.dim_a, rho.dim_b)


def mix(weights: Sequence[float], states: Sequence[DensityMatrix]) -> DensityMatrix:
    if not states:
        raise ValidationError("empty ensemble")
    w = np.asarray(weights, dtype=float)
    m = sum(p * s.matrix for p, s in zip(w, states))
    m = (m + m.conj().T) / 2
    return DensityMatrix(m / np.trace(m).real, states[0].dim_a, states[0].dim_b)
