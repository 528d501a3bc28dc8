import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from qmetro.qmat import (
    SIGMA_X,
    SIGMA_Z,
    DensityMatrix,
    EigenConvergenceError,
    PureState,
    ValidationError,
    bloch_vector,
    gell_mann_basis,
    hermitian_eig,
    partial_trace,
    pauli_basis,
    psd_sqrt,
    random_hermitian,
    tensor_product,
    uhlmann_fidelity,
)
from qmetro.states import bell, family_state, FamilyParams, random_rank_k_hs

I2 = np.eye(2)


def _ptrace_loops(m, da, db, keep):
    """Index-loop partial trace, independent of the einsum implementation."""
    if keep == "A":
        out = np.zeros((da, da), dtype=complex)
        for i in range(da):
            for j in range(da):
                out[i, j] = sum(m[i * db + k, j * db + k] for k in range(db))
    else:
        out = np.zeros((db, db), dtype=complex)
        for i in range(db):
            for j in range(db):
                out[i, j] = sum(m[k * db + i, k * db + j] for k in range(da))
    return out


# --- tensor_product -------------------------------------------------------

def test_tensor_identity():
    assert np.allclose(tensor_product(I2, I2), np.eye(4))


def test_tensor_sigma_z_identity():
    assert np.allclose(tensor_product(SIGMA_Z, I2), np.diag([1, 1, -1, -1]))


def test_tensor_xx_flips_00_to_11():
    # hand expansion: (X (x) X)|00> = X|0> (x) X|1>... = |11>
    out = tensor_product(SIGMA_X, SIGMA_X) @ np.array([1, 0, 0, 0])
    assert np.allclose(out, [0, 0, 0, 1])


def test_tensor_rejects_oversize():
    with pytest.raises(ValidationError):
        tensor_product(np.eye(8), np.eye(16))


# --- DensityMatrix validation ----------------------------------------------

def test_density_rejects_non_hermitian():
    m = np.diag([0.5, 0.5]).astype(complex)
    m[0, 1] = 1e-6
    with pytest.raises(ValidationError, match="Hermitian"):
        DensityMatrix(m, 2)


def test_density_rejects_bad_trace_and_negative():
    with pytest.raises(ValidationError, match="trace"):
        DensityMatrix(np.diag([0.6, 0.6]), 2)
    with pytest.raises(ValidationError, match="semidefinite"):
        DensityMatrix(np.diag([1.1, -0.1]), 2)


def test_density_rejects_nan_and_shape():
    with pytest.raises(ValidationError):
        DensityMatrix(np.array([[np.nan, 0], [0, 1]]), 2)
    with pytest.raises(ValidationError):
        DensityMatrix(np.eye(4) / 4, 2, 3)


def test_density_is_read_only():
    rho = DensityMatrix(np.eye(2) / 2, 2)
    with pytest.raises(ValueError):
        rho.matrix[0, 0] = 1


def test_density_json_round_trip():
    rho = random_rank_k_hs(4, 3, 5)
    back = DensityMatrix.from_json(rho.to_json())
    assert np.array_equal(back.matrix, rho.matrix)
    assert set(rho.to_dict()) == {"dim_a", "dim_b", "re", "im"}


def test_pure_state_norm():
    with pytest.raises(ValidationError):
        PureState(np.array([1.0, 1.0]), 2)


# --- partial_trace ---------------------------------------------------------

def test_partial_trace_bell_is_maximally_mixed():
    red = partial_trace(bell("phi+").density(), "B")
    assert np.allclose(red.matrix, I2 / 2)


def test_partial_trace_product(rng):
    ra = random_rank_k_hs(2, 2, rng, dim_a=2).matrix
    rb = random_rank_k_hs(3, 3, rng, dim_a=3).matrix
    rho = DensityMatrix(np.kron(ra, rb), 2, 3)
    assert np.allclose(partial_trace(rho, "B").matrix, ra, atol=1e-12)
    assert np.allclose(partial_trace(rho, "A").matrix, rb, atol=1e-12)


def test_partial_trace_family_state_against_loops():
    rho = family_state(FamilyParams(math.pi / 4, math.pi / 3))
    red = partial_trace(rho, "B")
    assert np.allclose(red.matrix, _ptrace_loops(rho.matrix, 2, 2, "A"), atol=1e-14)
    assert abs(np.trace(red.matrix) - 1) < 1e-12
    assert np.linalg.eigvalsh(red.matrix)[0] >= -1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_partial_trace_order_commutes_on_tripartite(seed):
    rho = random_rank_k_hs(12, 3, seed, dim_a=2)  # A=2, B=2, C=3 as (2) x (6)
    m = rho.matrix.reshape(2, 2, 3, 2, 2, 3)
    # trace C then B versus B then C
    c_then_b = np.einsum("abcdec->abde", m).reshape(4, 4)
    c_then_b = np.einsum("abcb->ac", c_then_b.reshape(2, 2, 2, 2))
    b_then_c = np.einsum("abcdbf->acdf", m)
    b_then_c = np.einsum("acdc->ad", b_then_c)
    assert np.allclose(c_then_b, b_then_c, atol=1e-12)
    assert np.allclose(partial_trace(rho, "B").matrix, c_then_b, atol=1e-12)


# --- hermitian_eig ---------------------------------------------------------

def test_eig_sigma_z_and_identity():
    assert np.allclose(hermitian_eig(SIGMA_Z)[0], [-1, 1])
    w, v = hermitian_eig(np.eye(4))
    assert np.allclose(w, 1)
    assert np.allclose(v.conj().T @ v, np.eye(4))


def test_eig_sigma_x_vectors():
    w, v = hermitian_eig(SIGMA_X)
    assert np.allclose(w, [-1, 1])
    for col, target in zip(v.T, ([1, -1], [1, 1])):
        assert abs(abs(np.vdot(col, np.array(target) / math.sqrt(2))) - 1) < 1e-12


def test_eig_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        hermitian_eig(np.array([[0, 1], [0, 0]]))


def test_eig_convergence_error_carries_residual():
    err = EigenConvergenceError("x", 0.5)
    assert err.residual == 0.5


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 16), st.integers(0, 2**32 - 1))
def test_eig_reconstruction(d, seed):
    h = random_hermitian(d, np.random.default_rng(seed))
    w, v = hermitian_eig(h)
    assert np.all(np.diff(w) >= 0)
    assert np.allclose((v * w) @ v.conj().T, h, atol=1e-8)
    assert np.allclose(v.conj().T @ v, np.eye(d), atol=1e-9)
    assert np.max(np.abs(h @ v - v * w)) < 1e-9 * max(1, np.abs(w).max())


# --- psd_sqrt --------------------------------------------------------------

def test_psd_sqrt_examples(rng):
    assert np.allclose(psd_sqrt(np.eye(4)), np.eye(4))
    assert np.allclose(psd_sqrt(np.diag([4.0, 1.0])), np.diag([2.0, 1.0]))
    g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    m = g @ g.conj().T
    r = psd_sqrt(m)
    assert np.allclose(r @ r, m, atol=1e-8)
    assert np.allclose(r, sla.sqrtm(m), atol=1e-8)


def test_psd_sqrt_clamps_and_rejects():
    r = psd_sqrt(np.diag([1.0, -1e-10]))
    assert np.allclose(r, np.diag([1.0, 0.0]))
    with pytest.raises(ValidationError):
        psd_sqrt(np.diag([1.0, -1e-3]))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_psd_sqrt_square(d, k, seed):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((d, min(k, d))) + 1j * rng.standard_normal((d, min(k, d)))
    m = g @ g.conj().T
    r = psd_sqrt(m)
    assert np.allclose(r, r.conj().T, atol=1e-12)
    assert np.allclose(r @ r, m, atol=1e-8)


# --- fidelity --------------------------------------------------------------

def test_fidelity_examples(rng):
    rho = random_rank_k_hs(4, 3, rng)
    assert abs(uhlmann_fidelity(rho, rho) - 1) < 1e-10
    z0 = DensityMatrix(np.diag([1.0, 0.0]), 2)
    z1 = DensityMatrix(np.diag([0.0, 1.0]), 2)
    assert uhlmann_fidelity(z0, z1) == pytest.approx(0, abs=1e-12)
    assert uhlmann_fidelity(z0, DensityMatrix(I2 / 2, 2)) == pytest.approx(0.5, abs=1e-12)


def test_fidelity_dimension_mismatch():
    with pytest.raises(ValidationError):
        uhlmann_fidelity(DensityMatrix(I2 / 2, 2), DensityMatrix(np.eye(4) / 4, 2, 2))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 4))
def test_fidelity_symmetric_and_matches_sqrtm(seed, k1, k2):
    rng = np.random.default_rng(seed)
    a, b = random_rank_k_hs(4, k1, rng), random_rank_k_hs(4, k2, rng)
    f = uhlmann_fidelity(a, b)
    assert 0 <= f <= 1
    assert abs(f - uhlmann_fidelity(b, a)) < 1e-8
    if k1 == 4:
        s = sla.sqrtm(a.matrix)
        ref = np.real(np.trace(sla.sqrtm(s @ b.matrix @ s))) ** 2
        assert abs(f - ref) < 1e-7


def test_fidelity_one_iff_equal(rng):
    a = random_rank_k_hs(4, 4, rng)
    b = random_rank_k_hs(4, 4, rng)
    assert uhlmann_fidelity(a, b) < 1 - 1e-6


# --- bases and Bloch vectors -------------------------------------------------

def test_pauli_basis_is_xyz():
    x, y, z = pauli_basis()
    assert np.allclose(x @ y, 1j * z)
    assert [np.allclose(a, b) for a, b in zip(gell_mann_basis(2), (x, y, z))] == [True] * 3


@pytest.mark.parametrize("d", [2, 3, 4, 5, 8])
def test_gell_mann_properties(d):
    g = gell_mann_basis(d)
    assert len(g) == d * d - 1
    gram = np.array([[np.trace(a @ b) for b in g] for a in g])
    assert np.allclose(gram, 2 * np.eye(d * d - 1), atol=1e-12)
    for m in g:
        assert abs(np.trace(m)) < 1e-12
        assert np.allclose(m, m.conj().T)
    assert np.allclose(sum(m @ m for m in g), 2 * (d * d - 1) / d * np.eye(d))


def test_gell_mann_d3_sum():
    assert np.allclose(sum(m @ m for m in gell_mann_basis(3)), 16 / 3 * np.eye(3))


def test_gell_mann_rejects():
    with pytest.raises(ValidationError):
        gell_mann_basis(1)
    with pytest.raises(ValidationError):
        gell_mann_basis(9)


def test_bloch_vectors():
    assert np.allclose(bloch_vector(bell("phi+")), 0)
    assert np.allclose(bloch_vector(PureState(np.array([1, 0, 0, 0]), 2, 2)), [0, 0, 1])
    rng = np.random.default_rng(1)
    psi_b = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    psi_b /= np.linalg.norm(psi_b)
    plus = np.array([1, 1]) / math.sqrt(2)
    assert np.allclose(bloch_vector(PureState(np.kron(plus, psi_b), 2, 3)), [1, 0, 0])


def test_bloch_rejects_qutrit():
    with pytest.raises(ValidationError):
        bloch_vector(DensityMatrix(np.eye(6) / 6, 3, 2))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_validated_state_spectrum(seed, k):
    rho = random_rank_k_hs(6, k, seed, dim_a=2)
    w = rho.eigvalsh()
    assert abs(w.sum() - 1) < 1e-9 and w.min() >= -1e-10
    assert np.linalg.norm(bloch_vector(rho)) <= 1 + 1e-10
