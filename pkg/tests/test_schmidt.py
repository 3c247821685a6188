import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twinobs import (
    BellMixture,
    BipartiteState,
    DimensionError,
    InvariantError,
    NotATwinError,
    PreconditionError,
    adjoint_involution,
    bell_state,
    hermitian_osd,
    hs_inner,
    invariant_basis,
    osd,
    realign,
    weak_twin_osd,
)
from twinobs.bell import state_from_t
from twinobs.linalg import I2, PAULI, SX, SY, SZ, is_hermitian
from twinobs.schmidt import AntilinearMap, cross_overlaps, hs_norm, realign_matrix, unrealign

from conftest import random_density, random_state

CLASSICAL_PAIR = 0.5 * (np.diag([1, 0, 0, 0]) + np.diag([0, 0, 0, 1])).astype(complex)


def pauli_expansion_singular_values(t):
    # T(t) = (I⊗I + sum t_i s_i⊗s_i)/4 = (1/2)(I/√2⊗I/√2) + sum (t_i/2)(s_i/√2⊗s_i/√2)
    return np.sort(np.concatenate([[0.5], np.abs(t) / 2]))[::-1]


def test_hs_inner_examples(rng):
    assert hs_inner(np.eye(4) / 2, np.eye(4) / 2) == pytest.approx(1)
    assert hs_inner(SX / np.sqrt(2), SY / np.sqrt(2)) == pytest.approx(0)
    a, b = bell_state(1).rho, bell_state(2).rho
    assert hs_inner(a, b) == pytest.approx(0, abs=1e-15)
    with pytest.raises(DimensionError):
        hs_inner(np.eye(2), np.eye(3))


def test_realign_product_is_rank_one(rng):
    r1, r2 = random_density(2, rng), random_density(3, rng)
    r = realign(BipartiteState.product(r1, r2))
    assert np.allclose(r, np.outer(r1.ravel(), r2.ravel()))
    assert np.linalg.matrix_rank(r, tol=1e-12) == 1


@given(st.tuples(*[st.floats(-1, 1) for _ in range(3)]))
@settings(max_examples=60, deadline=None)
def test_realigned_bell_diagonal_singular_values(t):
    t = np.array(t) / 3
    sv = np.linalg.svd(realign(state_from_t(t)), compute_uv=False)
    assert np.allclose(sv, pauli_expansion_singular_values(t), atol=1e-14)


def test_realign_preserves_frobenius_and_inverts(rng):
    s = random_state(3, 2, rng)
    r = realign(s)
    assert hs_norm(r) == pytest.approx(hs_norm(s.rho))
    assert np.allclose(unrealign(r, 3, 2), s.rho)
    with pytest.raises(DimensionError):
        realign_matrix(np.eye(5), 2, 2)


def test_osd_examples(rng):
    r1, r2 = random_density(2, rng), random_density(2, rng)
    dec = osd(BipartiteState.product(r1, r2))
    assert len(dec) == 1 and dec.coefficients[0] == pytest.approx(1)
    dec = osd(bell_state(1))
    assert np.allclose(dec.coefficients, 0.5)
    dec = osd(BipartiteState(CLASSICAL_PAIR, 2, 2))
    assert np.allclose(dec.coefficients, [1 / np.sqrt(2)] * 2)
    s = random_state(2, 3, rng)
    dec = osd(s)
    assert dec.residual(s.rho) < 1e-12
    assert np.allclose(dec.gram(1), np.eye(len(dec)), atol=1e-12)
    assert np.allclose(dec.gram(2), np.eye(len(dec)), atol=1e-12)


def test_invariant_basis_examples():
    inv = adjoint_involution(2)
    out = invariant_basis([SX], inv)
    assert len(out) == 1 and np.allclose(out[0], SX / np.sqrt(2))

    e_pm = np.array([[0, 1], [0, 0]], dtype=complex)
    out = invariant_basis([e_pm, e_pm.T], inv)
    assert len(out) == 2
    assert all(is_hermitian(h) for h in out)
    flat = np.array([h.ravel() for h in out])
    assert np.allclose(flat.conj() @ flat.T, np.eye(2))
    # spans {σ1, σ2}
    proj = flat.T @ flat.conj()
    for p in (SX, SY):
        v = p.ravel() / np.sqrt(2)
        assert np.allclose(proj @ v, v)

    out = invariant_basis([1j * SY], inv)
    assert len(out) == 1
    assert abs(abs(hs_inner(out[0], SY / np.sqrt(2))) - 1) < 1e-12


def test_invariant_basis_rejects_non_invariant_span():
    with pytest.raises(InvariantError):
        invariant_basis([np.array([[0, 1], [0, 0]], dtype=complex)], adjoint_involution(2))


def test_adjoint_involution_is_involution():
    assert adjoint_involution(3).is_involution()
    assert not AntilinearMap(np.diag([1, 2]).astype(complex)).is_involution()


def test_hermitian_osd_bell_diagonal_closed_form():
    t = np.array([0.3, -0.2, 0.6])
    dec = hermitian_osd(state_from_t(t))
    r0 = 1 / (1 + t @ t)
    expected = np.sort(np.sqrt(r0) * np.array([1, *np.abs(t)]))[::-1]
    assert np.allclose(dec.coefficients, expected, atol=1e-12)
    for term in dec.terms:
        a = term.op_a
        # each factor is ±I/√2 or ±σ_i/√2
        overlaps = [abs(hs_inner(p / np.sqrt(2), a)) for p in PAULI]
        assert max(overlaps) == pytest.approx(1, abs=1e-10)


def test_hermitian_osd_product_state(rng):
    r1, r2 = random_density(2, rng), random_density(3, rng)
    dec = hermitian_osd(BipartiteState.product(r1, r2))
    assert len(dec) == 1
    assert np.allclose(dec.terms[0].op_a, r1 / hs_norm(r1))
    assert np.allclose(dec.terms[0].op_b, r2 / hs_norm(r2))


@pytest.mark.parametrize("dims", [(2, 2), (2, 3), (3, 3), (3, 2)])
def test_hermitian_osd_random(rng, dims):
    for _ in range(5):
        s = random_state(*dims, rng)
        dec = hermitian_osd(s)
        assert dec.residual(s.rho) < 1e-9
        assert np.allclose(dec.coefficients, osd(s).coefficients, atol=1e-10)
        for term in dec.terms:
            assert is_hermitian(term.op_a, 1e-10) and is_hermitian(term.op_b, 1e-10)
        assert np.allclose(dec.gram(1), np.eye(len(dec)), atol=1e-10)
        assert np.allclose(dec.gram(2), np.eye(len(dec)), atol=1e-10)


def test_hermitian_osd_degenerate_bell_state():
    for k in range(4):
        dec = hermitian_osd(bell_state(k))
        assert np.allclose(dec.coefficients, 0.5)
        assert dec.residual(bell_state(k).rho) < 1e-12


def test_hermitian_osd_is_deterministic(rng):
    s = random_state(2, 3, rng)
    a, b = hermitian_osd(s), hermitian_osd(s)
    for x, y in zip(a.terms, b.terms):
        assert np.array_equal(x.op_a, y.op_a) and np.array_equal(x.op_b, y.op_b)


def test_weak_twin_osd_pure_schmidt_rank_two():
    phi = np.array([np.sqrt(0.8), 0, 0, np.sqrt(0.2)], dtype=complex)
    s = BipartiteState.from_vector(phi, 2, 2)
    dec = weak_twin_osd(s, np.diag([1, 0]).astype(complex))
    assert len(dec) == 4
    assert sorted(t.group for t in dec.terms) == [0, 0, 1, 1]
    assert dec.residual(s.rho) < 1e-12
    g0 = [t for t in dec.terms if t.group == 0]
    g1 = [t for t in dec.terms if t.group == 1]
    assert max(cross_overlaps(g0, g1)) < 1e-12
    # rank-1 supervector terms |i><j| ⊗ |i><j|
    for t in dec.terms:
        assert np.linalg.matrix_rank(t.op_a, tol=1e-10) == 1
    assert sum(dec.group_weights) == pytest.approx(1)


def test_weak_twin_osd_strong_projector_matches_osd():
    s = BellMixture.from_weights([0, 0.5, 0.5, 0]).state()
    p1 = (I2 + SX) / 2
    dec = weak_twin_osd(s, p1)
    assert np.allclose(np.sort(dec.coefficients), np.sort(osd(s).coefficients), atol=1e-12)


def test_weak_twin_osd_rejects_non_twin(rng):
    s = random_state(2, 2, rng)
    with pytest.raises(NotATwinError):
        weak_twin_osd(s, np.diag([1, 0]).astype(complex))
    with pytest.raises(PreconditionError):
        weak_twin_osd(s, SZ)
