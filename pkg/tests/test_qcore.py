import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from onewaydj import qcore
from onewaydj.qcore import DensityMatrix, QOperator, StateVector

import oracles as orc

seeds = st.integers(0, 2**32 - 1)


def _dm(m, deviation=False):
    return DensityMatrix(m, deviation=deviation)


# -- types -------------------------------------------------------------------


def test_state_vector_rejects_unnormalized():
    with pytest.raises(ValueError):
        StateVector(np.array([1.0, 1.0]))


def test_state_vector_rejects_bad_dimension():
    with pytest.raises(ValueError):
        StateVector(np.array([1.0, 0, 0]))


def test_qubit_cap():
    with pytest.raises(ValueError):
        DensityMatrix.maximally_mixed(11)


def test_density_rejects_non_hermitian_and_bad_trace():
    with pytest.raises(ValueError):
        DensityMatrix(np.array([[1, 1], [0, 0]], dtype=complex))
    with pytest.raises(ValueError):
        DensityMatrix(np.eye(2))
    assert DensityMatrix(np.eye(2), deviation=True).trace == pytest.approx(2.0)


def test_density_physicality():
    assert DensityMatrix.maximally_mixed(2).is_physical()
    assert not DensityMatrix(np.diag([1.5, -0.5])).is_physical()


def test_qoperator_shape_and_unitary_flag():
    with pytest.raises(ValueError):
        QOperator(np.eye(4), (1,))
    with pytest.raises(ValueError):
        QOperator(2 * np.eye(2), (1,), unitary=True)
    with pytest.raises(ValueError):
        QOperator(np.eye(4), (2, 2))


def test_arrays_are_read_only():
    psi = StateVector.from_label("0+")
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 0


def test_from_label_matches_kron():
    assert np.allclose(StateVector.from_label("+0-+").amplitudes, orc.ket("+0-+"))


# -- embed_operator ----------------------------------------------------------


def test_embed_x_on_first_of_two():
    m = qcore.embed_operator(qcore.pauli("X", 1), 2).matrix
    out = m @ orc.ket("00")
    assert np.allclose(out, orc.ket("10"))


@pytest.mark.parametrize("q", [1, 2, 3, 4])
def test_embed_identity(q):
    assert np.allclose(qcore.embed_operator(QOperator(np.eye(2), (q,)), 4).matrix, np.eye(16))


def test_embed_literal_cphase_on_0100():
    s12 = QOperator(np.kron(qcore.P0, qcore.SZ) + np.kron(qcore.P1, qcore.I2), (1, 2), True)
    out = qcore.embed_operator(s12, 4).matrix @ orc.ket("0100")
    assert np.allclose(out, -orc.ket("0100"))


@given(seeds, st.permutations([1, 2, 3, 4]))
def test_embed_matches_loop_oracle(seed, perm):
    rng = np.random.default_rng(seed)
    qs = tuple(perm[:2])
    u = orc.random_unitary(rng, 4)
    got = qcore.embed_operator(QOperator(u, qs, True), 4).matrix
    assert np.allclose(got, orc.embed(u, qs, 4), atol=1e-12)


def test_embed_out_of_range():
    with pytest.raises(ValueError):
        qcore.embed_operator(qcore.pauli("X", 3), 2)


# -- apply_unitary -----------------------------------------------------------


def test_apply_x_to_zero():
    out = qcore.apply_unitary(StateVector.from_label("0"), qcore.pauli("X", 1))
    assert np.allclose(out.amplitudes, orc.ket("1"))


def test_apply_ry_half_pi_to_zero():
    u = QOperator(orc.rot("y", np.pi / 2), (1,), True)
    out = qcore.apply_unitary(StateVector.from_label("0"), u)
    assert np.allclose(out.amplitudes, orc.ket("+"), atol=1e-12)


@pytest.mark.parametrize("axis", ["x", "y", "z", "-x", "-y", "-z"])
def test_rotation_matches_expm(axis):
    assert np.allclose(qcore.rotation(axis, 0.37), orc.rot(axis, 0.37), atol=1e-12)


def test_apply_rejects_non_unitary():
    with pytest.raises(ValueError):
        qcore.apply_unitary(StateVector.from_label("0"), QOperator(qcore.P0, (1,)))


@given(seeds)
def test_unitary_round_trip(seed):
    rng = np.random.default_rng(seed)
    u = QOperator(orc.random_unitary(rng, 4), (3, 1), True)
    psi = StateVector(orc.ket("+0-1") * 1.0)
    back = qcore.apply_unitary(qcore.apply_unitary(psi, u), u.dagger())
    assert np.allclose(back.amplitudes, psi.amplitudes, atol=1e-10)


@given(seeds)
def test_unitary_preserves_norm_and_spectrum(seed):
    rng = np.random.default_rng(seed)
    u = orc.random_unitary(rng, 8)
    op = QOperator(u, (1, 2, 3), True)
    v = rng.normal(size=8) + 1j * rng.normal(size=8)
    psi = StateVector(v / np.linalg.norm(v))
    assert abs(np.linalg.norm(qcore.apply_unitary(psi, op).amplitudes) - 1) < 1e-10
    rho = _dm(orc.random_density(rng, 3))
    out = qcore.apply_unitary(rho, op)
    assert np.allclose(out.eigenvalues(), rho.eigenvalues(), atol=1e-10)
    assert np.allclose(out.matrix, u @ rho.matrix @ u.conj().T, atol=1e-12)


@given(seeds, st.sampled_from([(1,), (2,), (4,), (2, 4), (4, 1), (3, 2, 1)]))
def test_apply_to_density_matches_full_matrix(seed, qs):
    rng = np.random.default_rng(seed)
    u = orc.random_unitary(rng, 2 ** len(qs))
    rho = orc.random_density(rng, 4)
    full = orc.embed(u, qs, 4)
    got = qcore.apply_unitary(_dm(rho), QOperator(u, qs, True)).matrix
    assert np.allclose(got, full @ rho @ full.conj().T, atol=1e-12)


# -- expectation -------------------------------------------------------------


def test_expectation_x_on_plus_and_minus():
    assert qcore.expectation(StateVector.from_label("+"), qcore.pauli("X", 1)) == pytest.approx(1.0)
    assert qcore.expectation(StateVector.from_label("-"), qcore.pauli("X", 1)) == pytest.approx(-1.0)


def test_expectation_zz_on_bell():
    bell = StateVector((orc.ket("00") + orc.ket("11")) / np.sqrt(2))
    assert qcore.expectation(bell.to_density(), qcore.pauli("ZZ", 1, 2)) == pytest.approx(1.0)


def test_expectation_rejects_non_hermitian():
    with pytest.raises(ValueError):
        qcore.expectation(StateVector.from_label("0"), QOperator(np.array([[0, 1], [0, 0]]), (1,)))


# -- partial_trace -----------------------------------------------------------


def test_partial_trace_product():
    red = qcore.partial_trace(StateVector.from_label("0+"), [1])
    assert np.allclose(red.matrix, orc.proj(orc.ket("0")))


def test_partial_trace_bell():
    bell = StateVector((orc.ket("00") + orc.ket("11")) / np.sqrt(2))
    assert np.allclose(qcore.partial_trace(bell, [2]).matrix, np.eye(2) / 2)


def test_partial_trace_graph_state_leaves_mixed_qubit4():
    rho = orc.proj(orc.graph_state_literal())
    assert np.allclose(orc.ptrace(rho, [4], 4), np.eye(2) / 2)
    assert np.allclose(qcore.partial_trace(_dm(rho), [4]).matrix, np.eye(2) / 2)


@given(seeds, st.sampled_from([[1], [3], [1, 3], [2, 4], [1, 2, 4]]))
def test_partial_trace_matches_loop_oracle(seed, keep):
    rho = orc.random_density(np.random.default_rng(seed), 4)
    assert np.allclose(qcore.partial_trace(_dm(rho), keep).matrix, orc.ptrace(rho, keep, 4), atol=1e-12)


def test_partial_trace_output_order_follows_keep():
    psi = StateVector.from_label("01")
    assert np.allclose(qcore.partial_trace(psi, [2, 1]).matrix, orc.proj(orc.ket("10")))


def test_partial_trace_keep_all_is_identity():
    rho = orc.random_density(np.random.default_rng(3), 3)
    assert np.array_equal(qcore.partial_trace(_dm(rho), [1, 2, 3]).matrix, rho)


def test_partial_trace_rejects_bad_keep():
    with pytest.raises(ValueError):
        qcore.partial_trace(StateVector.from_label("00"), [])
    with pytest.raises(ValueError):
        qcore.partial_trace(StateVector.from_label("00"), [3])


# -- dephase_qubit -----------------------------------------------------------


def test_dephase_plus_gives_mixed():
    out = qcore.dephase_qubit(StateVector.from_label("+").to_density(), 1)
    assert np.allclose(out.matrix, np.eye(2) / 2)


def test_dephase_zero_is_fixed():
    rho = StateVector.from_label("0").to_density()
    assert np.array_equal(qcore.dephase_qubit(rho, 1).matrix, rho.matrix)


def test_dephase_branch_decomposition():
    phi0 = (orc.ket("0+") + orc.ket("11")) / np.sqrt(3)
    phi1 = orc.ket("-0") / np.sqrt(3)
    phi = np.kron(orc.ket("0"), phi0) + np.kron(orc.ket("1"), phi1)
    want = np.kron(orc.proj(orc.ket("0")), orc.proj(phi0)) + np.kron(orc.proj(orc.ket("1")), orc.proj(phi1))
    got = qcore.dephase_qubit(StateVector(phi).to_density(), 1).matrix
    assert np.allclose(got, want, atol=1e-12)


@given(seeds, st.integers(1, 4))
def test_dephase_matches_loop_oracle_and_is_idempotent(seed, q):
    rho = _dm(orc.random_density(np.random.default_rng(seed), 4))
    once = qcore.dephase_qubit(rho, q)
    assert np.allclose(once.matrix, orc.dephase(rho.matrix, q, 4))
    assert np.array_equal(qcore.dephase_qubit(once, q).matrix, once.matrix)


@given(seeds, st.integers(1, 3))
def test_dephase_equals_z_phase_average(seed, q):
    rho = orc.random_density(np.random.default_rng(seed), 3)
    acc = np.zeros_like(rho)
    for phi in 2 * np.pi * np.arange(64) / 64:
        u = orc.embed(orc.rot("z", phi), (q,), 3)
        acc += u @ rho @ u.conj().T
    assert np.allclose(qcore.dephase_qubit(_dm(rho), q).matrix, acc / 64, atol=1e-8)


def test_dephase_rejects_bad_index():
    with pytest.raises(ValueError):
        qcore.dephase_qubit(DensityMatrix.maximally_mixed(2), 0)


# -- composition and comparison ---------------------------------------------


@given(seeds, st.permutations([1, 2, 3, 4]))
def test_disjoint_embeddings_commute(seed, perm):
    rng = np.random.default_rng(seed)
    a = qcore.embed_operator(QOperator(orc.random_unitary(rng, 2), (perm[0],), True), 4).matrix
    b = qcore.embed_operator(QOperator(orc.random_unitary(rng, 4), tuple(perm[1:3]), True), 4).matrix
    assert np.allclose(a @ b, b @ a, atol=1e-12)


@given(st.floats(0, 2 * np.pi))
def test_phase_invariant_distance_ignores_global_phase(theta):
    u = orc.rot("y", 0.4) @ orc.rot("z", 1.1)
    assert qcore.phase_invariant_distance(u, np.exp(1j * theta) * u) < 1e-12
    assert qcore.phase_invariant_distance(u, orc.rot("x", 0.3)) > 1e-3


def test_fidelity_kinds_agree():
    rng = np.random.default_rng(5)
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    psi = StateVector(v / np.linalg.norm(v))
    rho = _dm(orc.random_density(rng, 2))
    pure_mixed = qcore.fidelity(psi, rho)
    assert pure_mixed == pytest.approx(np.real(np.vdot(psi.amplitudes, rho.matrix @ psi.amplitudes)))
    assert qcore.fidelity(psi.to_density(), rho) == pytest.approx(pure_mixed, abs=1e-12)
    assert qcore.fidelity(psi, psi) == pytest.approx(1.0)


def test_mixed_fidelity_against_closed_form():
    # commuting diagonal states: F = (sum sqrt(p q))^2
    p, q = np.array([0.5, 0.3, 0.2, 0.0]), np.array([0.1, 0.1, 0.4, 0.4])
    want = np.sum(np.sqrt(p * q)) ** 2
    assert qcore.fidelity(_dm(np.diag(p)), _dm(np.diag(q))) == pytest.approx(want, abs=1e-12)
