import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qmetro.channels import apply_local_B, random_channel
from qmetro.entanglement import (
    Decomposition,
    convex_roof_oracle,
    decomposition_from_isometry,
    ie_pure,
    ie_two_qubit,
    tangle_wootters,
)
from qmetro.metrology import Spectrum, ip_closed
from qmetro.qmat import SIGMA_Y, DensityMatrix, PureState, ValidationError, haar_unitary, partial_trace
from qmetro.states import (
    FamilyParams,
    bell,
    family_state,
    random_product_term,
    random_pure_state,
    random_rank_k_hs,
    separable_mixture,
)

YY = np.kron(SIGMA_Y, SIGMA_Y)


def tangle_oracle(rho: np.ndarray) -> float:
    """Wootters tangle from the non-Hermitian product ``rho rho~``: lambda_i = sqrt(eig)."""
    ev = np.linalg.eigvals(rho @ YY @ rho.conj() @ YY)
    lam = np.sort(np.sqrt(np.clip(ev.real, 0, None)))[::-1]
    return max(0.0, lam[0] - lam[1:].sum()) ** 2


# --- ie_pure -----------------------------------------------------------------

def test_ie_pure_examples():
    assert ie_pure(bell("phi+")) == pytest.approx(1, abs=1e-12)
    prod = PureState(np.kron([0.6, 0.8j], [1, 0]), 2, 2)
    assert ie_pure(prod, Spectrum(2.5)) == pytest.approx(0, abs=1e-12)
    psi = PureState(np.array([math.cos(math.pi / 8), 0, 0, math.sin(math.pi / 8)]), 2, 2)
    assert ie_pure(psi) == pytest.approx(1 - math.cos(math.pi / 4) ** 2, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.floats(0.1, 3))
def test_ie_pure_is_linear_entropy(seed, db, alpha):
    psi = random_pure_state(2, db, np.random.default_rng(seed))
    red = partial_trace(psi.density(), "B").matrix
    lin = 2 * (1 - np.real(np.trace(red @ red)))
    assert ie_pure(psi, Spectrum(alpha)) == pytest.approx(alpha**2 * lin, abs=1e-10)


def test_ie_pure_rejects_qutrit():
    with pytest.raises(ValidationError):
        ie_pure(PureState(np.ones(6) / math.sqrt(6), 3, 2))


# --- tangle ------------------------------------------------------------------

def test_tangle_examples(rng):
    assert tangle_wootters(bell("phi+").density()).value == pytest.approx(1, abs=1e-12)
    sep = separable_mixture([(p, *random_product_term(2, 2, rng)) for p in (0.1, 0.2, 0.3, 0.25, 0.15)])
    assert tangle_wootters(sep).value <= 1e-9
    fam = family_state(FamilyParams(math.pi / 4, math.pi / 3))
    assert tangle_wootters(fam).value == pytest.approx(0.125, abs=1e-12)


def test_ie_two_qubit_examples():
    b = bell("phi+").density()
    assert ie_two_qubit(b) == pytest.approx(1, abs=1e-12)
    assert ie_two_qubit(b, Spectrum(3.0)) == pytest.approx(9, abs=1e-10)
    assert ie_two_qubit(family_state(FamilyParams(0, math.pi / 3))) == pytest.approx(0.25, abs=1e-12)


def test_tangle_rejects_non_two_qubit():
    with pytest.raises(ValidationError):
        tangle_wootters(DensityMatrix(np.eye(6) / 6, 2, 3))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_tangle_matches_oracle_and_spectrum_invariant(seed, k):
    rho = random_rank_k_hs(4, k, seed)
    t = tangle_wootters(rho)
    assert t.value == pytest.approx(tangle_oracle(rho.matrix), abs=1e-7)
    lam = t.lambdas
    assert len(lam) == 4 and np.all(lam >= 0) and np.all(np.diff(lam) <= 0)
    assert t.value == pytest.approx(max(0.0, lam[0] - lam[1:].sum()) ** 2, abs=1e-10)
    assert 0 <= t.value <= 1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_tangle_local_unitary_invariance(seed, k):
    rng = np.random.default_rng(seed)
    rho = random_rank_k_hs(4, k, rng)
    u = np.kron(haar_unitary(2, rng), haar_unitary(2, rng))
    rot = DensityMatrix(u @ rho.matrix @ u.conj().T, 2, 2)
    assert abs(tangle_wootters(rot).value - tangle_wootters(rho).value) < 1e-9


def test_pure_state_coincidence(rng):
    for _ in range(500):
        psi = random_pure_state(2, 2, rng)
        assert abs(ie_pure(psi) - ip_closed(psi.density()).value) <= 1e-8
        assert abs(ie_pure(psi) - tangle_wootters(psi.density()).value) <= 1e-8


def test_hierarchy_ip_above_tangle(rng):
    for _ in range(2000):
        rho = random_rank_k_hs(4, 2, rng)
        assert ip_closed(rho).value >= ie_two_qubit(rho) - 1e-9


def test_b_side_channel_never_increases_tangle(rng):
    for _ in range(200):
        rho = random_rank_k_hs(4, int(rng.integers(1, 5)), rng)
        out = apply_local_B(rho, random_channel(2, rng, n_kraus=2))
        assert ie_two_qubit(out) <= ie_two_qubit(rho) + 1e-8


# --- decompositions and the convex roof -------------------------------------

def test_decomposition_validation():
    with pytest.raises(ValidationError):
        Decomposition(np.array([0.5, 0.6]), (bell("phi+"), bell("psi+")))
    with pytest.raises(ValidationError):
        Decomposition(np.array([1.0]), (bell("phi+"), bell("psi+")))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5))
def test_isometry_decomposition_reconstructs(seed, m):
    rng = np.random.default_rng(seed)
    rho = random_rank_k_hs(4, 2, rng)
    dec = decomposition_from_isometry(rho, haar_unitary(m, rng)[:, :2])
    assert abs(dec.weights.sum() - 1) <= 1e-10
    assert np.allclose(dec.density(), rho.matrix, atol=1e-8)


def test_roof_examples():
    val, dec = convex_roof_oracle(bell("phi+").density())
    assert val == pytest.approx(1, abs=1e-9)
    cl = DensityMatrix(np.diag([0.5, 0, 0, 0.5]).astype(complex), 2, 2)
    val, dec = convex_roof_oracle(cl)
    assert val == pytest.approx(0, abs=1e-9)
    assert np.allclose(dec.density(), cl.matrix, atol=1e-8)
    val, _ = convex_roof_oracle(family_state(FamilyParams(math.pi / 4, math.pi / 3)))
    assert val == pytest.approx(0.125, abs=1e-3)


def test_roof_rejects_rank_three():
    with pytest.raises(ValidationError, match="rank"):
        convex_roof_oracle(random_rank_k_hs(4, 3, 0))


def test_roof_sandwich():
    for seed in range(50):
        rho = random_rank_k_hs(4, 2, np.random.default_rng([77, seed]))
        exact = ie_two_qubit(rho)
        val, dec = convex_roof_oracle(rho, seed=seed)
        assert exact - 1e-9 <= val <= exact + 1e-3
        assert np.allclose(dec.density(), rho.matrix, atol=1e-8)


def test_roof_alpha_scaling():
    rho = random_rank_k_hs(4, 2, 11)
    a, _ = convex_roof_oracle(rho, Spectrum(2.0), seed=3)
    b, _ = convex_roof_oracle(rho, seed=3)
    assert a == pytest.approx(4 * b, rel=1e-12)
