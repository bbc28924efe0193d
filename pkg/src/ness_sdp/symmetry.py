"""Multiple steady states under strong symmetries.

A strong symmetry is a unitary U commuting with the Hamiltonian and all
jump operators; the operator space splits into blocks B_ab between
U-eigenspaces and each diagonal block carries a physical steady state.
This module implements the three tools that recover them:

* sector constraints Tr(beta N~) = n_k added to the feasibility SDP,
* twirl elimination rho -> rho - (rho - U rho U^dag)/(1 - u_m conj(u_n)),
  which annihilates the B_mn component exactly and leaves diagonal
  blocks untouched,
* Vandermonde extraction, solving the invertible system that maps
  {U^k rho_phys} onto the per-sector components c_a rho_aa.

Combinations of U^k rho (U^dag)^k' are tracked symbolically alongside a
desk-scale dense realization, so expectation values can be evaluated
either from the coefficient matrix (hybrid path) or densely.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace

import numpy as np

from .models import OpenSystemModel, SymmetryDescriptor, magnetization
from .overlaps import ObservableMatrix, assemble, observable_matrix
from .pauli import PauliSum, single_site
from .sdp import BetaMatrix, FeasibilityProblem, SolverOptions, solve_feasibility
from .states import AnsatzSet, density_from_beta
from . import oracle

TRACE_FLOOR = 1e-8


@dataclass(frozen=True)
class SymmetrySpec:
    """A strong symmetry: dense unitary, its distinct eigenvalues, and
    optionally a Pauli expansion (for the hybrid expectation path) and a
    Hermitian generator."""

    unitary: np.ndarray
    eigenvalues: tuple[complex, ...]
    pauli_expansion: PauliSum | None = None
    generator: PauliSum | None = None
    label: str = ""

    @property
    def n_sectors(self) -> int:
        return len(self.eigenvalues)

    def validate(self, model: OpenSystemModel, tol: float = 1e-10) -> list[str]:
        """Unitarity, eigenvalue bookkeeping, and the strong-symmetry property."""
        violations = []
        u = self.unitary
        dim = u.shape[0]
        if np.linalg.norm(u @ u.conj().T - np.eye(dim)) > tol * dim:
            violations.append("U is not unitary")
        spec = np.linalg.eigvals(u)
        listed = np.array(self.eigenvalues)
        for lam in spec:
            if np.min(np.abs(listed - lam)) > 1e-8:
                violations.append(f"spectrum value {lam:.6f} missing from listed eigenvalues")
                break
        for lam in listed:
            if np.min(np.abs(spec - lam)) > 1e-8:
                violations.append(f"listed eigenvalue {lam:.6f} not in the spectrum")
        for i in range(len(listed)):
            for j in range(i + 1, len(listed)):
                if abs(listed[i] - listed[j]) <= 1e-8:
                    violations.append("listed eigenvalues are not distinct")
        h = model.hamiltonian.to_dense(dense_limit=model.n_qubits)
        if np.linalg.norm(u @ h - h @ u) > tol * max(1.0, np.linalg.norm(h)):
            violations.append("U does not commute with H")
        for k, (_, jump) in enumerate(model.dissipators):
            a = jump.to_dense(dense_limit=model.n_qubits)
            if np.linalg.norm(u @ a - a @ u) > tol * max(1.0, np.linalg.norm(a)):
                violations.append(f"U does not commute with jump operator {k}")
        return violations

    def power_pauli(self, k: int) -> PauliSum:
        """Pauli expansion of U^k; requires the expansion to be present."""
        if self.pauli_expansion is None:
            raise ValueError("symmetry has no Pauli expansion of U")
        n = self.pauli_expansion.n_qubits
        out = PauliSum.identity(n)
        base = self.pauli_expansion if k >= 0 else self.pauli_expansion.dagger()
        for _ in range(abs(k)):
            out = out * base
        return out


def z_rotation_pauli(n: int, phi: float) -> PauliSum:
    """Pauli expansion of exp(i phi sum_j Z_j) via the per-site product."""
    out = PauliSum.identity(n, math.cos(phi)) + single_site(n, 1, "Z", 1j * math.sin(phi))
    for j in range(2, n + 1):
        factor = PauliSum.identity(n, math.cos(phi)) + single_site(n, j, "Z", 1j * math.sin(phi))
        out = out * factor
    return out


def magnetization_symmetry(n: int, phi: float | None = None) -> SymmetrySpec:
    """S_z = exp(i phi M); the default phi keeps all n+1 sector phases distinct."""
    if phi is None:
        phi = 2.0 * math.pi / (2 * n + 2)
    idx = np.arange(2 ** n)
    mags = n - 2 * np.bitwise_count(idx).astype(np.int64)
    unitary = np.diag(np.exp(1j * phi * mags))
    eigenvalues = tuple(cmath.exp(1j * phi * m) for m in range(-n, n + 1, 2))
    return SymmetrySpec(
        unitary=unitary,
        eigenvalues=eigenvalues,
        pauli_expansion=z_rotation_pauli(n, phi),
        generator=magnetization(n),
        label=f"exp(i*{phi:.6g}*M)",
    )


def _swap_pauli(n: int, a: int, b: int) -> PauliSum:
    """SWAP_{ab} = (1/2)(II + XX + YY + ZZ) on sites a, b."""
    out = PauliSum.identity(n, 0.5)
    for axis in "XYZ":
        codes = ["I"] * n
        codes[a - 1] = axis
        codes[b - 1] = axis
        out = out + PauliSum.from_label("".join(codes), 0.5)
    return out


def exchange_parity_symmetry(n: int) -> SymmetrySpec:
    """S = P * prod_j X_j with P the site-reversal permutation; eigenvalues +-1."""
    dim = 2 ** n
    idx = np.arange(dim)
    flipped = idx ^ (dim - 1)  # global X flip: complement every bit
    reversed_bits = np.zeros(dim, dtype=int)
    for b in range(n):
        reversed_bits |= ((flipped >> b) & 1) << (n - 1 - b)
    unitary = np.zeros((dim, dim), dtype=complex)
    unitary[reversed_bits, idx] = 1.0
    expansion = _swap_pauli(n, 1, n) if n > 1 else PauliSum.identity(1)
    for j in range(2, n // 2 + 1):
        expansion = expansion * _swap_pauli(n, j, n + 1 - j)
    expansion = expansion * PauliSum.from_label("X" * n)
    return SymmetrySpec(
        unitary=unitary,
        eigenvalues=(1.0 + 0j, -1.0 + 0j),
        pauli_expansion=expansion,
        label="exchange-parity",
    )


def spec_from_descriptor(model: OpenSystemModel, desc: SymmetryDescriptor) -> SymmetrySpec:
    if desc.kind == "generator-phase":
        if desc.generator is None or desc.phase is None:
            raise ValueError("generator-phase symmetry needs a generator and phase")
        if desc.generator == magnetization(model.n_qubits):
            return magnetization_symmetry(model.n_qubits, desc.phase)
        raise ValueError("only the magnetization generator is supported for phased symmetries")
    if desc.kind == "exchange-parity":
        return exchange_parity_symmetry(model.n_qubits)
    if desc.kind == "pauli-unitary":
        if desc.unitary is None:
            raise ValueError("pauli-unitary symmetry needs the unitary Pauli sum")
        dense = desc.unitary.to_dense(dense_limit=model.n_qubits)
        eigs = np.linalg.eigvals(dense)
        distinct: list[complex] = []
        for lam in eigs:
            if all(abs(lam - d) > 1e-8 for d in distinct):
                distinct.append(complex(lam))
        return SymmetrySpec(
            unitary=dense,
            eigenvalues=tuple(sorted(distinct, key=lambda z: cmath.phase(z))),
            pauli_expansion=desc.unitary,
            label=desc.label,
        )
    raise ValueError(f"unknown symmetry descriptor kind {desc.kind!r}")


# ---------------------------------------------------------------------------
# Sector constraints (method one)
# ---------------------------------------------------------------------------

def sector_constraint(generator: PauliSum, target: float,
                      ansatz: AnsatzSet) -> tuple[ObservableMatrix, float]:
    """Linear constraint Tr(beta N~) = target selecting a symmetry sector."""
    if not generator.is_hermitian():
        raise ValueError("sector generator must be Hermitian")
    return observable_matrix(generator, ansatz, name="sector-generator"), target


def sector_basis_ansatz(n: int, m: int) -> AnsatzSet:
    """Ansatz of all computational basis states with magnetization m.

    The span equals the full magnetization sector, so the projected
    constraints coincide with the exact steady-state condition there.
    """
    from .states import StateVector

    iso = oracle.sector_basis(n, m)
    if iso.shape[1] == 0:
        raise ValueError(f"magnetization {m} is empty for {n} qubits")
    return AnsatzSet(
        states=tuple(StateVector(n, iso[:, k]) for k in range(iso.shape[1])),
        words=tuple(() for _ in range(iso.shape[1])),
        seed_descriptor=f"sector-basis:m={m}",
    )


# ---------------------------------------------------------------------------
# Twirl elimination and Vandermonde extraction (method two)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RhoCombination:
    """Formal combination sum_{k,k'} c_{kk'} U^k rho1 (U^dag)^k' plus the
    data needed to realize it densely at desk scale."""

    weights: dict[tuple[int, int], complex]
    rho1: np.ndarray
    unitary: np.ndarray

    @classmethod
    def initial(cls, rho1: np.ndarray, spec: SymmetrySpec) -> "RhoCombination":
        return cls(weights={(0, 0): 1.0 + 0j}, rho1=rho1, unitary=spec.unitary)

    def dense(self) -> np.ndarray:
        """Evaluate the formal expansion explicitly."""
        max_k = max((k for k, _ in self.weights), default=0)
        max_kp = max((kp for _, kp in self.weights), default=0)
        powers = [np.eye(self.unitary.shape[0], dtype=complex)]
        for _ in range(max(max_k, max_kp)):
            powers.append(powers[-1] @ self.unitary)
        out = np.zeros_like(self.rho1)
        for (k, kp), c in self.weights.items():
            out += c * (powers[k] @ self.rho1 @ powers[kp].conj().T)
        return out

    def left_multiplied(self, k: int) -> "RhoCombination":
        """Formal U^k * self (left only), as used by the Vandermonde stage."""
        weights = {(kk + k, kp): c for (kk, kp), c in self.weights.items()}
        return replace(self, weights=weights)

    def scaled(self, factor: complex) -> "RhoCombination":
        return replace(self, weights={kk: factor * c for kk, c in self.weights.items()})

    def added(self, other: "RhoCombination") -> "RhoCombination":
        weights = dict(self.weights)
        for key, c in other.weights.items():
            weights[key] = weights.get(key, 0j) + c
        return replace(self, weights=weights)


def twirl_eliminate(rc: RhoCombination, spec: SymmetrySpec,
                    pair: tuple[int, int]) -> RhoCombination:
    """Annihilate the B_{m,n} component: rho <- rho - (rho - U rho U^dag)/(1 - u_m conj(u_n)).

    Diagonal-block components are unchanged; the sector pair is given as
    0-based indices into the listed eigenvalues.
    """
    m, n = pair
    if m == n:
        raise ValueError("twirl pair must reference two different sectors")
    u_m = spec.eigenvalues[m]
    u_n = spec.eigenvalues[n]
    divisor = 1.0 - u_m * np.conj(u_n)
    if abs(divisor) < 1e-12:
        raise ZeroDivisionError(
            f"degenerate twirl divisor: sectors {m} and {n} share an eigenvalue phase"
        )
    weight = 1.0 / divisor
    # rho' = (1 - w) rho + w U rho U^dag
    shifted = {(k + 1, kp + 1): weight * c for (k, kp), c in rc.weights.items()}
    weights = {key: (1.0 - weight) * c for key, c in rc.weights.items()}
    for key, c in shifted.items():
        weights[key] = weights.get(key, 0j) + c
    return replace(rc, weights=weights)


def twirl_eliminate_all(rc: RhoCombination, spec: SymmetrySpec,
                        order: str = "lexicographic") -> RhoCombination:
    """Eliminate every off-diagonal sector pair (default lexicographic order)."""
    pairs = [(m, n) for m in range(spec.n_sectors) for n in range(spec.n_sectors) if m != n]
    if order == "reverse":
        pairs = pairs[::-1]
    # Pairs sharing an eigenvalue-phase difference are annihilated together;
    # re-processing such a pair is a harmless no-op on the zero component.
    seen_ratios: list[complex] = []
    for m, n in pairs:
        ratio = spec.eigenvalues[m] * np.conj(spec.eigenvalues[n])
        if any(abs(ratio - r) < 1e-12 for r in seen_ratios):
            continue
        seen_ratios.append(complex(ratio))
        rc = twirl_eliminate(rc, spec, (m, n))
    return rc


@dataclass(frozen=True)
class ExtractedState:
    """One recovered per-sector physical steady state."""

    sector: int
    eigenvalue: complex
    trace_weight: complex
    state: np.ndarray | None
    combination: RhoCombination | None
    missing: bool = False
    residual: float | None = None
    psd_violation: float | None = None


def vandermonde_extract(rho_phys: RhoCombination, spec: SymmetrySpec,
                        trace_floor: float = TRACE_FLOOR) -> list[ExtractedState]:
    """Separate a diagonal-blocks-only combination into per-sector states.

    Solves V (c_a rho_aa) = (U^k rho_phys), k = 0..n_U-1, with
    V_{ka} = u_a^k; components with |trace| <= trace_floor are reported
    missing (the feasibility program should be re-run from a different
    start to populate them).
    """
    n_u = spec.n_sectors
    eigs = np.array(spec.eigenvalues)
    vmat = np.vander(eigs, N=n_u, increasing=True).T  # V[k, a] = u_a^k
    v_inv = np.linalg.inv(vmat)
    dense_phys = rho_phys.dense()
    stack = [dense_phys]
    for _ in range(n_u - 1):
        stack.append(spec.unitary @ stack[-1])
    results = []
    for a in range(n_u):
        component = sum(v_inv[a, k] * stack[k] for k in range(n_u))
        trace = complex(np.trace(component))
        if abs(trace) <= trace_floor:
            results.append(ExtractedState(
                sector=a, eigenvalue=spec.eigenvalues[a], trace_weight=trace,
                state=None, combination=None, missing=True,
            ))
            continue
        state = component / trace
        state = (state + state.conj().T) / 2
        combination = RhoCombination(
            weights={}, rho1=rho_phys.rho1, unitary=rho_phys.unitary,
        )
        for k in range(n_u):
            term = rho_phys.left_multiplied(k).scaled(v_inv[a, k] / trace)
            combination = combination.added(term)
        results.append(ExtractedState(
            sector=a, eigenvalue=spec.eigenvalues[a], trace_weight=trace,
            state=state, combination=combination,
            psd_violation=float(np.linalg.eigvalsh(state)[0]),
        ))
    return results


# ---------------------------------------------------------------------------
# Hybrid expectation values (never forming dense rho)
# ---------------------------------------------------------------------------

def qm_expectation(beta: np.ndarray, ansatz: AnsatzSet, u_power: PauliSum,
                   obs: PauliSum, u_power_right: PauliSum | None = None) -> complex:
    """Tr(U^k rho O) (or Tr(U^k rho U^k' O)) from beta and projected Pauli words.

    Expands O * U^k (and optionally the right power) into Pauli strings
    P_m and sums coeff_m * Tr(Q_m beta) with Q_m the projected word.
    """
    word = obs * u_power
    if u_power_right is not None:
        word = u_power_right * word
    total = 0j
    for coeff, string in word.terms:
        q_m = observable_matrix(PauliSum([(1.0, string)]), ansatz).matrix
        total += coeff * np.trace(q_m @ np.asarray(beta))
    return complex(total)


# ---------------------------------------------------------------------------
# Full pipeline (Appendix-style three stage extraction)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExtractionResult:
    states: tuple[ExtractedState, ...]
    beta: BetaMatrix
    attempts: int

    @property
    def found(self) -> list[ExtractedState]:
        return [s for s in self.states if not s.missing]


def extract_all_ness(model: OpenSystemModel, spec: SymmetrySpec, ansatz: AnsatzSet,
                     options: SolverOptions | None = None,
                     extra_constraints: tuple = (),
                     max_retries: int = 2,
                     trace_floor: float = TRACE_FLOOR,
                     validate_spec: bool = True) -> ExtractionResult:
    """Solve, twirl away off-diagonal blocks, and Vandermonde-extract all sectors.

    When a sector component is missing (zero weight in the solver output)
    the feasibility program is re-run from a seeded random start, per the
    documented remedy, up to max_retries times.
    """
    options = options or SolverOptions()
    if validate_spec:
        violations = spec.validate(model)
        if violations:
            raise ValueError(f"invalid strong symmetry: {violations}")
    overlaps = assemble(model, ansatz)
    attempts = 0
    states: list[ExtractedState] = []
    beta = None
    while attempts <= max_retries:
        opts = options if attempts == 0 else replace(
            options, initial="random", rng_seed=options.rng_seed + attempts)
        problem = FeasibilityProblem(
            overlaps=overlaps, extra_constraints=tuple(extra_constraints), options=opts)
        beta = solve_feasibility(problem)
        rho1 = density_from_beta(beta.matrix, ansatz)
        rc = RhoCombination.initial(rho1, spec)
        rc = twirl_eliminate_all(rc, spec)
        states = vandermonde_extract(rc, spec, trace_floor=trace_floor)
        states = [
            replace(s, residual=oracle.true_residual(s.state, model))
            if s.state is not None else s
            for s in states
        ]
        attempts += 1
        if all(not s.missing for s in states):
            break
    return ExtractionResult(states=tuple(states), beta=beta, attempts=attempts)
