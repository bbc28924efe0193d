"""Dense Liouvillian oracle: construction, null spaces, fidelity, sparse path."""
import numpy as np
import pytest

from conftest import dense_lindblad, random_density, random_model
from ness_sdp import oracle
from ness_sdp.errors import DegenerateSteadySpaceError, DenseLimitError
from ness_sdp.models import OpenSystemModel, tfim_chain, xxz_boundary_driven, xxz_dephasing
from ness_sdp.pauli import PauliSum, sigma_minus


def single_qubit_model(jumps, ham=None):
    return OpenSystemModel(
        n_qubits=1,
        hamiltonian=ham if ham is not None else PauliSum.zero(1),
        dissipators=tuple((1.0, j) for j in jumps),
        label="test",
    )


class TestBuildLiouvillian:
    def test_vectorization_identity(self, rng):
        # vec(B rho C) = (C^T kron B) vec(rho) in column stacking
        for _ in range(5):
            b, rho, c = (rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
                         for _ in range(3))
            lhs = (b @ rho @ c).reshape(-1, order="F")
            rhs = np.kron(c.T, b) @ rho.reshape(-1, order="F")
            assert np.allclose(lhs, rhs, atol=1e-12)

    def test_matches_direct_action(self, rng):
        for n in (1, 2, 3):
            model = random_model(rng, n)
            liou = oracle.build_liouvillian(model)
            rho = random_density(rng, 2 ** n)
            via_matrix = (liou.matrix @ rho.reshape(-1, order="F")).reshape(
                2 ** n, 2 ** n, order="F")
            assert np.allclose(via_matrix, dense_lindblad(model, rho), atol=1e-10)

    def test_trace_annihilation(self, rng):
        model = random_model(rng, 2)
        liou = oracle.build_liouvillian(model)
        left = np.eye(4, dtype=complex).reshape(-1, order="F").conj() @ liou.matrix
        assert np.linalg.norm(left) < 1e-10

    def test_hermiticity_preservation(self, rng):
        model = random_model(rng, 2)
        for _ in range(5):
            mat = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            out = oracle.apply_lindblad(model, mat)
            out_dag = oracle.apply_lindblad(model, mat.conj().T)
            assert np.allclose(out.conj().T, out_dag, atol=1e-10)

    def test_size_limit(self):
        with pytest.raises(DenseLimitError):
            oracle.build_liouvillian(tfim_chain(8, 1.0), dense_limit=6)


class TestSteadyStates:
    def test_pure_dephasing_two_dimensional(self):
        model = single_qubit_model([PauliSum.from_label("Z")])
        basis = oracle.steady_states(model)
        assert basis.dimension == 2
        assert sum(basis.physical) == 2

    def test_amplitude_damping_fixed_point(self):
        model = single_qubit_model([sigma_minus(1, 1)])
        rho = oracle.exact_ness(model)
        assert np.allclose(rho, np.diag([0.0, 1.0]), atol=1e-10)

    def test_tfim_unique_for_all_g(self):
        for g in (0.0, 1.0, 2.5):
            basis = oracle.steady_states(tfim_chain(2, g))
            assert basis.dimension == 1

    def test_xxz_dephasing_sector_count(self):
        basis = oracle.steady_states(xxz_dephasing(3, 1.0))
        assert basis.dimension >= 4
        assert sum(basis.physical) >= 4

    def test_boundary_driven_two_physical_in_m0(self):
        model = xxz_boundary_driven(4, 1.0, 1.0, 0.5)
        iso = oracle.sector_basis(4, 0)
        # split m=0 along the exchange-parity eigenspaces
        n, dim = 4, 16
        idx = np.arange(dim)
        flipped = idx ^ (dim - 1)
        rev = np.zeros(dim, dtype=int)
        for b in range(n):
            rev |= ((flipped >> b) & 1) << (n - 1 - b)
        s = np.zeros((dim, dim), dtype=complex)
        s[rev, idx] = 1.0
        s_r = iso.conj().T @ s @ iso
        vals, vecs = np.linalg.eigh((s_r + s_r.conj().T) / 2)
        found = []
        for sign in (-1, 1):
            sub = iso @ vecs[:, np.sign(vals) == sign]
            rho = oracle.restricted_steady_state(model, sub)
            assert oracle.true_residual(rho, model) < 1e-9
            found.append(rho)
        assert abs(np.trace(found[0].conj().T @ found[1])) < 1e-10

    def test_exact_ness_rejects_degenerate(self):
        with pytest.raises(DegenerateSteadySpaceError):
            oracle.exact_ness(xxz_dephasing(3, 1.0))

    def test_null_elements_are_steady(self):
        basis = oracle.steady_states(xxz_dephasing(3, 1.0))
        model = xxz_dephasing(3, 1.0)
        for elem in basis.elements:
            assert (np.linalg.norm(oracle.apply_lindblad(model, elem))
                    <= 1e-9 * np.linalg.norm(elem))


class TestFidelity:
    def test_self_fidelity(self, rng):
        rho = random_density(rng, 4)
        assert oracle.fidelity(rho, rho) == pytest.approx(1.0, abs=1e-10)

    def test_orthogonal_pure_states(self):
        a = np.diag([1.0, 0.0]).astype(complex)
        b = np.diag([0.0, 1.0]).astype(complex)
        assert oracle.fidelity(a, b) == pytest.approx(0.0, abs=1e-12)

    def test_against_maximally_mixed(self, rng):
        rho = random_density(rng, 4)
        lam = np.linalg.eigvalsh(rho)
        expect = np.sum(np.sqrt(np.clip(lam, 0, None) / 4)) ** 2
        assert oracle.fidelity(rho, np.eye(4) / 4) == pytest.approx(expect, abs=1e-10)


class TestTrueResidual:
    def test_oracle_ness_is_steady(self):
        model = tfim_chain(2, 1.3)
        rho = oracle.exact_ness(model)
        assert oracle.true_residual(rho, model) <= 1e-10

    def test_mixed_state_under_damping_not_steady(self):
        model = single_qubit_model([sigma_minus(1, 1)])
        assert oracle.true_residual(np.eye(2) / 2, model) > 0.1

    def test_trace_preservation(self, rng):
        model = random_model(rng, 2)
        rho = random_density(rng, 4)
        assert abs(np.trace(dense_lindblad(model, rho))) < 1e-12


class TestSparseSteadyState:
    def test_agrees_with_dense_small(self, rng):
        for n, g in ((3, 0.8), (4, 0.4), (5, 0.6)):
            model = tfim_chain(n, g)
            sparse = oracle.sparse_steady_state(model, tol=1e-9)
            dense = oracle.exact_ness(model)
            assert oracle.fidelity(sparse, dense) >= 1.0 - 1e-8

    def test_eight_qubit_damping_fixed_point(self):
        model = tfim_chain(8, 0.0)
        rho = oracle.sparse_steady_state(model)
        expect = np.zeros(256)
        expect[-1] = 1.0
        assert np.allclose(np.diag(rho).real, expect, atol=1e-8)

    def test_size_limit(self):
        with pytest.raises(DenseLimitError):
            oracle.sparse_steady_state(tfim_chain(11, 0.1))


def test_dominant_eigenstate():
    rho = np.diag([0.2, 0.7, 0.1, 0.0]).astype(complex)
    lam, state = oracle.dominant_eigenstate(rho, 2)
    assert lam == pytest.approx(0.7)
    assert np.argmax(np.abs(state.amplitudes)) == 1


def test_restricted_steady_state_rejects_leaky_subspace():
    model = tfim_chain(2, 1.0)  # sigma_- jumps do not preserve sectors
    iso = oracle.sector_basis(2, 0)
    with pytest.raises(ValueError):
        oracle.restricted_steady_state(model, iso)
