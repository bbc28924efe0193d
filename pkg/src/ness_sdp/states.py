"""Dense statevector engine: ansatz preparation and overlap evaluation.

This module plays the part of the quantum processor. Pauli words act on
2^n amplitude vectors by a bit-mask permutation plus phases, so applying
a Pauli sum costs O(terms * 2^n) instead of a dense matrix product.

Moment-state generation follows the cumulative construction: level j
holds states reached by words of exactly j Hamiltonian Pauli strings,
and the cumulative set is the union of levels 0..K. Candidates whose
overlap magnitude with a retained state exceeds 1 - DEDUP_TOL are
duplicates (a global phase on an ansatz state is absorbed by the
coefficient matrix, so phases are irrelevant to the expressible set).
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatchError
from .pauli import PauliSum

DEDUP_TOL = 1e-10
_PHASE_EPS = 1e-9


@lru_cache(maxsize=4096)
def _string_masks(codes: str) -> tuple[int, int, complex]:
    """(x_mask, z_mask, prefactor) with P|b> = pre * (-1)^popcount(b & z) |b ^ x>."""
    n = len(codes)
    x_mask = 0
    z_mask = 0
    n_y = 0
    for site, ch in enumerate(codes):
        bit = 1 << (n - 1 - site)  # site 1 = most significant bit
        if ch in ("X", "Y"):
            x_mask |= bit
        if ch in ("Z", "Y"):
            z_mask |= bit
        if ch == "Y":
            n_y += 1
    return x_mask, z_mask, 1j ** n_y


def _apply_string(codes: str, amps: np.ndarray) -> np.ndarray:
    """Apply a Pauli word to amplitudes indexed along axis 0."""
    x_mask, z_mask, pre = _string_masks(codes)
    idx = np.arange(amps.shape[0])
    signs = 1.0 - 2.0 * (np.bitwise_count(idx & z_mask) & 1)
    phased = (pre * signs)[(...,) + (None,) * (amps.ndim - 1)] * amps
    if x_mask:
        return phased[idx ^ x_mask]
    return phased


def apply_to_columns(op: PauliSum, matrix: np.ndarray) -> np.ndarray:
    """Apply a Pauli sum to every column of a (2^n, m) array."""
    out = np.zeros(matrix.shape, dtype=complex)
    for coeff, string in op.terms:
        out += coeff * _apply_string(string.codes, matrix)
    return out


@dataclass(frozen=True)
class StateVector:
    """Dense n-qubit state; amplitudes indexed with site 1 as the MSB."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2 ** self.n_qubits,):
            raise DimensionMismatchError(
                f"expected {2 ** self.n_qubits} amplitudes, got shape {amps.shape}"
            )
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @classmethod
    def basis(cls, n_qubits: int, bits: str) -> "StateVector":
        """Computational basis state from a bitstring (site 1 = leftmost bit)."""
        if len(bits) != n_qubits or set(bits) - {"0", "1"}:
            raise DimensionMismatchError(f"need {n_qubits} bits, got {bits!r}")
        amps = np.zeros(2 ** n_qubits, dtype=complex)
        amps[int(bits, 2)] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def uniform(cls, n_qubits: int) -> "StateVector":
        dim = 2 ** n_qubits
        return cls(n_qubits, np.full(dim, 1.0 / np.sqrt(dim), dtype=complex))


def basis_state(n_qubits: int, bits: str) -> StateVector:
    return StateVector.basis(n_qubits, bits)


def apply_pauli_sum(op: PauliSum, state: StateVector) -> StateVector:
    """Operator action; the result is generally unnormalized."""
    if op.n_qubits != state.n_qubits:
        raise DimensionMismatchError(
            f"operator on {op.n_qubits} qubits applied to {state.n_qubits}-qubit state"
        )
    return StateVector(state.n_qubits, apply_to_columns(op, state.amplitudes[:, None])[:, 0])


def matrix_element(bra: StateVector, op: PauliSum, ket: StateVector) -> complex:
    """<bra| op |ket>."""
    if bra.n_qubits != ket.n_qubits:
        raise DimensionMismatchError("bra/ket qubit counts differ")
    return complex(np.vdot(bra.amplitudes, apply_pauli_sum(op, ket).amplitudes))


def _canonical_phase(amps: np.ndarray) -> np.ndarray:
    """Rescale so the first non-negligible amplitude is real positive."""
    for a in amps:
        if abs(a) > _PHASE_EPS:
            return amps * (a.conjugate() / abs(a))
    return amps


@dataclass(frozen=True)
class AnsatzSet:
    """Ordered ansatz states with the unitary words that produced them.

    ``words[i]`` is the sequence of Hamiltonian term indices applied to
    the seed (first applied first); the seed itself has the empty word.
    Together with the seed descriptor and rng seed this is enough to
    regenerate the set bit-identically.
    """

    states: tuple[StateVector, ...]
    words: tuple[tuple[int, ...], ...]
    seed_descriptor: str = "custom"
    rng_seed: int | None = None

    def __post_init__(self):
        if not self.states:
            raise ValueError("empty ansatz")
        n = self.states[0].n_qubits
        if any(s.n_qubits != n for s in self.states):
            raise DimensionMismatchError("ansatz states on mixed qubit counts")

    @property
    def n_qubits(self) -> int:
        return self.states[0].n_qubits

    @property
    def size(self) -> int:
        return len(self.states)

    def states_matrix(self) -> np.ndarray:
        """(2^n, L) array with ansatz states as columns."""
        return np.column_stack([s.amplitudes for s in self.states])

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(self.states_matrix().tobytes())
        h.update(json.dumps(self.words).encode())
        return h.hexdigest()[:16]

    def to_record(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "seed_descriptor": self.seed_descriptor,
            "rng_seed": self.rng_seed,
            "words": [list(w) for w in self.words],
        }


def _append_if_new(amps, states, words, word):
    """Phase-canonicalize and keep a candidate unless it duplicates a retained state."""
    canon = _canonical_phase(amps)
    if states:
        overlaps = np.abs(np.column_stack(states).conj().T @ canon)
        if overlaps.max() > 1.0 - DEDUP_TOL:
            return False
    states.append(canon)
    words.append(word)
    return True


def moment_states(hamiltonian: PauliSum, seed: StateVector, order: int,
                  seed_descriptor: str = "custom") -> AnsatzSet:
    """Cumulative moment states of the given order from a seed state.

    Level 0 is the seed; level j applies every Hamiltonian Pauli word to
    each retained level-(j-1) state. Duplicates (up to global phase) are
    dropped, so the result size is at most 1 + r + ... + r^order.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    strings = [s for _, s in hamiltonian.terms]
    states: list[np.ndarray] = []
    words: list[tuple[int, ...]] = []
    _append_if_new(seed.amplitudes.astype(complex), states, words, ())
    frontier = [0]
    for _ in range(order):
        next_frontier = []
        for src in frontier:
            for i, string in enumerate(strings):
                amps = _apply_string(string.codes, states[src])
                if _append_if_new(amps, states, words, words[src] + (i,)):
                    next_frontier.append(len(states) - 1)
        if not next_frontier:
            break
        frontier = next_frontier
    n = seed.n_qubits
    return AnsatzSet(
        states=tuple(StateVector(n, a) for a in states),
        words=tuple(words),
        seed_descriptor=seed_descriptor,
    )


def moment_states_random(hamiltonian: PauliSum, seed: StateVector, order: int,
                         q: int, rng_seed: int,
                         seed_descriptor: str = "custom") -> AnsatzSet:
    """Random-subset variant: each level keeps at most q one-step extensions.

    Level j draws q (word, state) extensions uniformly without
    replacement from all extensions of the retained level-(j-1) states.
    Deterministic for a fixed rng_seed.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    if order < 0:
        raise ValueError("order must be >= 0")
    rng = np.random.default_rng(rng_seed)
    strings = [s for _, s in hamiltonian.terms]
    states: list[np.ndarray] = []
    words: list[tuple[int, ...]] = []
    _append_if_new(seed.amplitudes.astype(complex), states, words, ())
    frontier = [0]
    for _ in range(order):
        pairs = [(src, i) for src in frontier for i in range(len(strings))]
        if not pairs:
            break
        if len(pairs) > q:
            chosen = rng.choice(len(pairs), size=q, replace=False)
            pairs = [pairs[k] for k in sorted(chosen)]
        next_frontier = []
        for src, i in pairs:
            amps = _apply_string(strings[i].codes, states[src])
            if _append_if_new(amps, states, words, words[src] + (i,)):
                next_frontier.append(len(states) - 1)
        if not next_frontier:
            break
        frontier = next_frontier
    n = seed.n_qubits
    return AnsatzSet(
        states=tuple(StateVector(n, a) for a in states),
        words=tuple(words),
        seed_descriptor=seed_descriptor,
        rng_seed=rng_seed,
    )


def ansatz_from_record(hamiltonian: PauliSum, seed: StateVector, record: dict) -> AnsatzSet:
    """Rebuild an ansatz bit-identically by replaying recorded words on the seed."""
    strings = [s for _, s in hamiltonian.terms]
    states = []
    for word in record["words"]:
        amps = seed.amplitudes.astype(complex)
        for i in word:
            amps = _apply_string(strings[i].codes, amps)
        states.append(StateVector(seed.n_qubits, _canonical_phase(amps)))
    return AnsatzSet(
        states=tuple(states),
        words=tuple(tuple(w) for w in record["words"]),
        seed_descriptor=record.get("seed_descriptor", "custom"),
        rng_seed=record.get("rng_seed"),
    )


def density_from_beta(beta: np.ndarray, ansatz: AnsatzSet) -> np.ndarray:
    """Dense rho = sum_ij beta_ij |chi_i><chi_j| for desk-scale verification."""
    s = ansatz.states_matrix()
    return s @ np.asarray(beta, dtype=complex) @ s.conj().T
