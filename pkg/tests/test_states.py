"""Statevector engine and moment-state generation."""
import numpy as np
import pytest

from conftest import dense_sum, random_pauli_sum, random_state
from ness_sdp.errors import DimensionMismatchError
from ness_sdp.models import tfim_chain
from ness_sdp.pauli import PauliSum, sigma_minus
from ness_sdp.states import (
    AnsatzSet,
    StateVector,
    ansatz_from_record,
    apply_pauli_sum,
    basis_state,
    density_from_beta,
    matrix_element,
    moment_states,
    moment_states_random,
)


class TestBasisState:
    def test_all_zero(self):
        assert np.allclose(basis_state(2, "00").amplitudes, [1, 0, 0, 0])

    def test_site_one_is_msb(self):
        assert np.allclose(basis_state(2, "10").amplitudes, [0, 0, 1, 0])

    def test_five_qubit_all_ones(self):
        amps = basis_state(5, "11111").amplitudes
        assert amps[31] == 1.0 and np.count_nonzero(amps) == 1

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            basis_state(3, "01")


class TestApply:
    def test_x_flips(self):
        out = apply_pauli_sum(PauliSum.from_label("X"), basis_state(1, "0"))
        assert np.allclose(out.amplitudes, [0, 1])

    def test_tfim_on_00(self):
        ham = tfim_chain(2, 1.0).hamiltonian
        out = apply_pauli_sum(ham, basis_state(2, "00"))
        # dense oracle cross-check plus the explicit expansion
        dense = dense_sum(ham) @ basis_state(2, "00").amplitudes
        assert np.allclose(out.amplitudes, dense, atol=1e-12)
        assert np.allclose(out.amplitudes, [0.5, 1.0, 1.0, 0.0])

    def test_lowering_annihilates_one(self):
        out = apply_pauli_sum(sigma_minus(1, 1), basis_state(1, "1"))
        assert np.allclose(out.amplitudes, 0.0)

    def test_matches_dense_on_random(self, rng):
        for n in (1, 2, 3, 4):
            op = random_pauli_sum(rng, n, 4)
            state = random_state(rng, n)
            out = apply_pauli_sum(op, state)
            assert np.allclose(out.amplitudes, dense_sum(op) @ state.amplitudes,
                               atol=1e-12)

    def test_dimension_error(self):
        with pytest.raises(DimensionMismatchError):
            apply_pauli_sum(PauliSum.from_label("X"), basis_state(2, "00"))


class TestMatrixElement:
    def test_z_diagonal(self):
        assert matrix_element(basis_state(1, "0"), PauliSum.from_label("Z"),
                              basis_state(1, "0")) == 1.0

    def test_tfim_diagonal_is_half_for_any_g(self):
        for g in (0.0, 0.7, 3.0):
            ham = tfim_chain(2, g).hamiltonian
            val = matrix_element(basis_state(2, "00"), ham, basis_state(2, "00"))
            assert abs(val - 0.5) < 1e-12

    def test_identity_norm(self, rng):
        state = random_state(rng, 3)
        val = matrix_element(state, PauliSum.identity(3), state)
        assert abs(val - 1.0) < 1e-12


class TestMomentStates:
    def test_order_zero(self):
        ham = tfim_chain(2, 1.0).hamiltonian
        ans = moment_states(ham, basis_state(2, "00"), 0)
        assert ans.size == 1 and ans.words == ((),)

    def test_order_one_dedupes_diagonal_word(self):
        ham = tfim_chain(2, 1.0).hamiltonian
        ans = moment_states(ham, basis_state(2, "00"), 1)
        assert ans.size == 3
        got = {tuple(np.flatnonzero(np.abs(s.amplitudes) > 1e-12)) for s in ans.states}
        assert got == {(0,), (1,), (2,)}  # |00>, |01>, |10>

    def test_order_two_completes_basis(self):
        ham = tfim_chain(2, 1.0).hamiltonian
        ans = moment_states(ham, basis_state(2, "00"), 2)
        assert ans.size == 4

    def test_nesting_and_saturation(self):
        ham = tfim_chain(2, 1.0).hamiltonian
        sizes = [moment_states(ham, basis_state(2, "00"), k).size for k in range(6)]
        assert sizes == sorted(sizes)
        assert sizes[3] == sizes[4] == sizes[5]  # Krylov space saturated

    def test_nesting_is_prefix(self):
        ham = tfim_chain(3, 0.8).hamiltonian
        small = moment_states(ham, basis_state(3, "000"), 1)
        large = moment_states(ham, basis_state(3, "000"), 2)
        for a, b in zip(small.states, large.states):
            assert np.allclose(a.amplitudes, b.amplitudes)

    def test_unit_norm_and_dedup_soundness(self, rng):
        ham = random_pauli_sum(rng, 3, 4, hermitian=True)
        ans = moment_states(ham, StateVector.uniform(3), 3)
        mat = ans.states_matrix()
        assert np.allclose(np.linalg.norm(mat, axis=0), 1.0, atol=1e-12)
        gram = np.abs(mat.conj().T @ mat)
        np.fill_diagonal(gram, 0.0)
        assert gram.max() < 1.0 - 1e-10

    def test_empty_hamiltonian_keeps_seed(self):
        ans = moment_states(PauliSum.zero(2), basis_state(2, "01"), 3)
        assert ans.size == 1


class TestMomentStatesRandom:
    def test_large_q_reduces_to_exact_level_one(self):
        ham = tfim_chain(2, 1.0).hamiltonian
        exact = moment_states(ham, basis_state(2, "00"), 1)
        rand = moment_states_random(ham, basis_state(2, "00"), 1, q=10, rng_seed=3)
        assert rand.size == exact.size

    def test_deterministic_for_fixed_seed(self):
        ham = tfim_chain(2, 1.0).hamiltonian
        a = moment_states_random(ham, basis_state(2, "00"), 3, q=2, rng_seed=11)
        b = moment_states_random(ham, basis_state(2, "00"), 3, q=2, rng_seed=11)
        assert a.words == b.words
        assert np.array_equal(a.states_matrix(), b.states_matrix())

    def test_order_zero_is_seed(self):
        ham = tfim_chain(2, 1.0).hamiltonian
        ans = moment_states_random(ham, basis_state(2, "00"), 0, q=5, rng_seed=0)
        assert ans.size == 1

    def test_level_cardinality_bound(self):
        ham = tfim_chain(3, 0.9).hamiltonian
        ans = moment_states_random(ham, StateVector.uniform(3), 4, q=3, rng_seed=7)
        per_level = {}
        for word in ans.words:
            per_level[len(word)] = per_level.get(len(word), 0) + 1
        assert all(count <= 3 for level, count in per_level.items() if level > 0)


def test_record_roundtrip_bit_identical():
    ham = tfim_chain(3, 0.6).hamiltonian
    ans = moment_states_random(ham, basis_state(3, "111"), 3, q=4, rng_seed=5,
                               seed_descriptor="bits:111")
    rebuilt = ansatz_from_record(ham, basis_state(3, "111"), ans.to_record())
    assert np.array_equal(rebuilt.states_matrix(), ans.states_matrix())
    assert rebuilt.content_hash() == ans.content_hash()


def test_density_from_beta(rng):
    ans = moment_states(tfim_chain(2, 1.0).hamiltonian, basis_state(2, "00"), 2)
    beta = np.eye(ans.size) / ans.size
    rho = density_from_beta(beta, ans)
    assert abs(np.trace(rho) - 1.0) < 1e-12
    assert np.allclose(rho, rho.conj().T)


def test_ansatz_requires_matching_qubits():
    with pytest.raises(DimensionMismatchError):
        AnsatzSet(states=(basis_state(1, "0"), basis_state(2, "00")),
                  words=((), ()))
