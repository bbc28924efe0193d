"""Shared test helpers.

The dense helpers here are intentionally independent of the package's
own dense paths (plain numpy kron products built from a local Pauli
table), so they can serve as oracles for the algebra they check.
"""
import numpy as np
import pytest

from ness_sdp.models import OpenSystemModel
from ness_sdp.pauli import PauliString, PauliSum
from ness_sdp.states import AnsatzSet, StateVector

PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def dense_string(codes: str) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for ch in codes:
        out = np.kron(out, PAULI_1Q[ch])
    return out


def dense_sum(op: PauliSum) -> np.ndarray:
    dim = 2 ** op.n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for coeff, string in op.terms:
        out += coeff * dense_string(string.codes)
    return out


def dense_lindblad(model: OpenSystemModel, rho: np.ndarray) -> np.ndarray:
    """L[rho] assembled from scratch with the local dense table."""
    h = dense_sum(model.hamiltonian)
    out = -1j * (h @ rho - rho @ h)
    for rate, jump in model.dissipators:
        a = dense_sum(jump)
        ada = a.conj().T @ a
        out += rate * (a @ rho @ a.conj().T - 0.5 * (ada @ rho + rho @ ada))
    return out


def random_pauli_string(rng, n: int) -> PauliString:
    return PauliString("".join(rng.choice(list("IXYZ"), size=n)))


def random_pauli_sum(rng, n: int, n_terms: int, hermitian: bool = False) -> PauliSum:
    terms = []
    for _ in range(n_terms):
        coeff = rng.normal() + (0 if hermitian else 1j * rng.normal())
        terms.append((coeff, random_pauli_string(rng, n)))
    out = PauliSum(terms, n_qubits=n)
    if out.n_terms == 0:
        out = PauliSum.identity(n)
    return out


def random_model(rng, n: int, n_diss: int = 2) -> OpenSystemModel:
    ham = random_pauli_sum(rng, n, n_terms=3, hermitian=True)
    dissipators = tuple(
        (float(rng.uniform(0.2, 1.5)), random_pauli_sum(rng, n, n_terms=2))
        for _ in range(n_diss)
    )
    return OpenSystemModel(n_qubits=n, hamiltonian=ham, dissipators=dissipators,
                           label="random")


def random_state(rng, n: int) -> StateVector:
    amps = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
    return StateVector(n, amps / np.linalg.norm(amps))


def random_ansatz(rng, n: int, size: int) -> AnsatzSet:
    return AnsatzSet(
        states=tuple(random_state(rng, n) for _ in range(size)),
        words=tuple((k,) for k in range(size)),
        seed_descriptor="random-test",
    )


def random_hermitian(rng, dim: int) -> np.ndarray:
    mat = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (mat + mat.conj().T) / 2


def random_density(rng, dim: int) -> np.ndarray:
    mat = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = mat @ mat.conj().T
    return rho / np.trace(rho).real


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
