"""Galerkin overlap matrices E, D, R_n, F_n and observable matrices.

Assembly evaluates every matrix element exactly through the statevector
engine; an optional Gaussian perturbation of the entries emulates
finite-shot estimation on hardware. Hermiticity of E, D, F_n (and of
observable matrices for Hermitian observables) is enforced by
symmetrization so downstream solver assumptions hold exactly.

The projected generator used everywhere downstream is

    G(beta) = -i (D beta E - E beta D)
              + sum_n gamma_n (R_n beta R_n^dag
                               - 1/2 F_n beta E - 1/2 E beta F_n),

which equals the matrix [<chi_i| L[rho] |chi_j>] for
rho = sum_ij beta_ij |chi_i><chi_j|.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionMismatchError
from .models import OpenSystemModel
from .pauli import PauliSum
from .states import AnsatzSet, apply_to_columns


def _hermitize(mat: np.ndarray) -> np.ndarray:
    return (mat + mat.conj().T) / 2


@dataclass(frozen=True)
class OverlapSet:
    """Galerkin matrices of one (model, ansatz) pair, all L x L complex."""

    E: np.ndarray
    D: np.ndarray
    R: tuple[np.ndarray, ...]
    F: tuple[np.ndarray, ...]
    rates: tuple[float, ...]
    ansatz_hash: str = ""
    model_label: str = ""
    shots: int | None = None

    @property
    def size(self) -> int:
        return self.E.shape[0]

    @property
    def noise_std(self) -> float:
        return 0.0 if self.shots is None else 1.0 / np.sqrt(self.shots)


@dataclass(frozen=True)
class ObservableMatrix:
    """Ansatz-projected observable: entries <chi_i| O |chi_j>."""

    name: str
    matrix: np.ndarray


def assemble(model: OpenSystemModel, ansatz: AnsatzSet) -> OverlapSet:
    """Exact overlap matrices for a model/ansatz pair."""
    if model.n_qubits != ansatz.n_qubits:
        raise DimensionMismatchError(
            f"model on {model.n_qubits} qubits, ansatz on {ansatz.n_qubits}"
        )
    s = ansatz.states_matrix()
    sdag = s.conj().T
    gram = _hermitize(sdag @ s)
    ham = _hermitize(sdag @ apply_to_columns(model.hamiltonian, s))
    r_mats = []
    f_mats = []
    for _, jump in model.dissipators:
        r_mats.append(sdag @ apply_to_columns(jump, s))
        f_mats.append(_hermitize(sdag @ apply_to_columns(jump.dagger() * jump, s)))
    return OverlapSet(
        E=gram,
        D=ham,
        R=tuple(r_mats),
        F=tuple(f_mats),
        rates=model.rates,
        ansatz_hash=ansatz.content_hash(),
        model_label=model.label,
    )


def observable_matrix(obs: PauliSum, ansatz: AnsatzSet, name: str = "") -> ObservableMatrix:
    if obs.n_qubits != ansatz.n_qubits:
        raise DimensionMismatchError(
            f"observable on {obs.n_qubits} qubits, ansatz on {ansatz.n_qubits}"
        )
    s = ansatz.states_matrix()
    mat = s.conj().T @ apply_to_columns(obs, s)
    if obs.is_hermitian():
        mat = _hermitize(mat)
    return ObservableMatrix(name=name, matrix=mat)


def _perturb_hermitian(mat: np.ndarray, std: float, rng) -> np.ndarray:
    """Noise on the upper triangle (diagonal real), mirrored to stay Hermitian."""
    size = mat.shape[0]
    noise = rng.normal(0.0, std, (size, size)) + 1j * rng.normal(0.0, std, (size, size))
    upper = np.triu(noise, 1)
    diag = np.diag(rng.normal(0.0, std, size))
    return mat + upper + upper.conj().T + diag


def add_shot_noise(overlaps: OverlapSet, shots: int, rng_seed: int) -> OverlapSet:
    """Gaussian perturbation with std 1/sqrt(shots) per quadrature and entry."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(rng_seed)
    std = 1.0 / np.sqrt(shots)
    gram = _perturb_hermitian(overlaps.E, std, rng)
    ham = _perturb_hermitian(overlaps.D, std, rng)
    r_mats = tuple(
        m + rng.normal(0.0, std, m.shape) + 1j * rng.normal(0.0, std, m.shape)
        for m in overlaps.R
    )
    f_mats = tuple(_perturb_hermitian(m, std, rng) for m in overlaps.F)
    return replace(overlaps, E=gram, D=ham, R=r_mats, F=f_mats, shots=shots)


def galerkin_lhs(overlaps: OverlapSet, beta: np.ndarray,
                 rates: tuple[float, ...] | None = None) -> np.ndarray:
    """The projected-generator matrix G(beta) in the original ansatz basis."""
    e, d = overlaps.E, overlaps.D
    beta = np.asarray(beta, dtype=complex)
    out = -1j * (d @ beta @ e - e @ beta @ d)
    if rates is None:
        rates = overlaps.rates
    for rate, r_n, f_n in zip(rates, overlaps.R, overlaps.F):
        out += rate * (r_n @ beta @ r_n.conj().T
                       - 0.5 * f_n @ beta @ e
                       - 0.5 * e @ beta @ f_n)
    return out


def expectation(beta: np.ndarray, obs: ObservableMatrix) -> complex:
    """Tr(beta O~) = Tr(rho O) for the reconstructed density matrix."""
    return complex(np.trace(np.asarray(beta) @ obs.matrix))


def save_overlaps(overlaps: OverlapSet, path) -> None:
    """Binary dump with metadata; enables solve-without-reassembly."""
    np.savez(
        path,
        E=overlaps.E,
        D=overlaps.D,
        R=np.array(overlaps.R),
        F=np.array(overlaps.F),
        rates=np.array(overlaps.rates),
        meta_ansatz_hash=overlaps.ansatz_hash,
        meta_model_label=overlaps.model_label,
        meta_shots=-1 if overlaps.shots is None else overlaps.shots,
    )


def load_overlaps(path) -> OverlapSet:
    data = np.load(path, allow_pickle=False)
    shots = int(data["meta_shots"])
    return OverlapSet(
        E=data["E"],
        D=data["D"],
        R=tuple(data["R"]),
        F=tuple(data["F"]),
        rates=tuple(float(r) for r in data["rates"]),
        ansatz_hash=str(data["meta_ansatz_hash"]),
        model_label=str(data["meta_model_label"]),
        shots=None if shots < 0 else shots,
    )
