"""Brute-force ground truth: dense Liouvillian, exact steady states, fidelity.

Vectorization is column-stacking throughout: vec(rho) = rho.reshape(-1,
order="F"), so vec(B rho C) = (C^T kron B) vec(rho) and the superoperator is

    L = -i (I kron H - H^T kron I)
        + sum_n gamma_n (A_n^* kron A_n
                         - 1/2 I kron A_n^dag A_n
                         - 1/2 (A_n^dag A_n)^T kron I).

The sparse path never materializes L: it applies the generator through
Pauli-word permutations on d x d matrices and finds a steady state by
conjugate-gradient least squares on the trace-one slice.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DegenerateSteadySpaceError, DenseLimitError
from .models import OpenSystemModel
from .pauli import PauliSum
from .states import StateVector, apply_to_columns

DEFAULT_DENSE_LIMIT = 6
NULL_SPACE_RTOL = 1e-10


def _dense_ops(model: OpenSystemModel):
    h = model.hamiltonian.to_dense(dense_limit=model.n_qubits)
    jumps = [(rate, jump.to_dense(dense_limit=model.n_qubits))
             for rate, jump in model.dissipators]
    return h, jumps


def apply_lindblad(model: OpenSystemModel, rho: np.ndarray) -> np.ndarray:
    """Dense generator action L[rho]."""
    h, jumps = _dense_ops(model)
    out = -1j * (h @ rho - rho @ h)
    for rate, a in jumps:
        ada = a.conj().T @ a
        out += rate * (a @ rho @ a.conj().T - 0.5 * (ada @ rho + rho @ ada))
    return out


@dataclass(frozen=True)
class LiouvillianDense:
    n_qubits: int
    matrix: np.ndarray
    convention: str = "column-stacking"

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits


def build_liouvillian(model: OpenSystemModel,
                      dense_limit: int = DEFAULT_DENSE_LIMIT) -> LiouvillianDense:
    """Dense superoperator of the model in column-stacking convention."""
    n = model.n_qubits
    if n > dense_limit + 1:
        raise DenseLimitError(f"dense Liouvillian for n={n} exceeds limit {dense_limit}")
    if n == dense_limit + 1:
        warnings.warn(
            f"building a {4 ** n} x {4 ** n} dense Liouvillian (n={n}); "
            "this may exhaust memory", RuntimeWarning)
    h, jumps = _dense_ops(model)
    eye = np.eye(2 ** n, dtype=complex)
    liou = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for rate, a in jumps:
        ada = a.conj().T @ a
        liou += rate * (np.kron(a.conj(), a)
                        - 0.5 * np.kron(eye, ada)
                        - 0.5 * np.kron(ada.T, eye))
    return LiouvillianDense(n_qubits=n, matrix=liou)


@dataclass(frozen=True)
class NessBasis:
    """Hermitian basis of the Liouvillian null space.

    ``physical[k]`` is True when elements[k] admits a trace-one PSD
    representative on its own (it is PSD or NSD with nonzero trace).
    """

    elements: tuple[np.ndarray, ...]
    physical: tuple[bool, ...]
    singular_values: np.ndarray

    @property
    def dimension(self) -> int:
        return len(self.elements)

    def physical_representative(self, k: int) -> np.ndarray:
        if not self.physical[k]:
            raise ValueError(f"basis element {k} has no trace-one PSD representative")
        elem = self.elements[k]
        return elem / np.trace(elem).real


def _hermitian_null_basis(null_vecs: np.ndarray, dim: int) -> list[np.ndarray]:
    """Real-span Gram-Schmidt over Hermitian/anti-Hermitian parts of null vectors."""
    target = null_vecs.shape[1]
    basis: list[np.ndarray] = []
    for k in range(null_vecs.shape[1]):
        mat = null_vecs[:, k].reshape(dim, dim, order="F")
        for cand in ((mat + mat.conj().T) / 2, (mat - mat.conj().T) / 2j):
            for b in basis:
                cand = cand - b * np.trace(b.conj().T @ cand).real
            nrm = np.linalg.norm(cand)
            if nrm > 1e-8:
                basis.append(cand / nrm)
            if len(basis) == target:
                return basis
    return basis


def _is_physical(elem: np.ndarray) -> bool:
    eigs = np.linalg.eigvalsh(elem)
    scale = max(abs(eigs[0]), abs(eigs[-1]), 1e-300)
    trace = np.trace(elem).real
    psd = eigs[0] >= -1e-10 * scale
    nsd = eigs[-1] <= 1e-10 * scale
    return (psd and trace > 1e-10) or (nsd and trace < -1e-10)


def _generator_projectors(model: OpenSystemModel) -> list[list[np.ndarray]]:
    """Eigenspace projectors of each declared Hermitian symmetry generator."""
    projector_sets = []
    for desc in model.symmetries:
        if desc.generator is None:
            continue
        gdense = desc.generator.to_dense(dense_limit=model.n_qubits)
        vals, vecs = np.linalg.eigh(gdense)
        projs = []
        used = np.zeros(len(vals), dtype=bool)
        for k in range(len(vals)):
            if used[k]:
                continue
            group = np.abs(vals - vals[k]) < 1e-8
            used |= group
            sub = vecs[:, group]
            projs.append(sub @ sub.conj().T)
        if len(projs) > 1:
            projector_sets.append(projs)
    return projector_sets


def _align_basis(basis: list[np.ndarray], projector_sets) -> list[np.ndarray]:
    """Split null elements along symmetry blocks so per-element physicality
    flags reflect the sector structure (diagonal-block states stand alone)."""
    for projs in projector_sets:
        candidates = []
        for a in range(len(projs)):
            for c in basis:
                candidates.append(projs[a] @ c @ projs[a])
        for a in range(len(projs)):
            for b in range(a + 1, len(projs)):
                for c in basis:
                    x = projs[a] @ c @ projs[b]
                    candidates.append(x + x.conj().T)
                    candidates.append(1j * (x - x.conj().T))
        refined: list[np.ndarray] = []
        for cand in candidates:
            for kept in refined:
                cand = cand - kept * np.trace(kept.conj().T @ cand).real
            nrm = np.linalg.norm(cand)
            if nrm > 1e-8:
                refined.append(cand / nrm)
            if len(refined) == len(basis):
                break
        if len(refined) == len(basis):
            basis = refined
    return basis


def steady_states(model: OpenSystemModel, tol: float = NULL_SPACE_RTOL,
                  dense_limit: int = DEFAULT_DENSE_LIMIT,
                  align_symmetries: bool = True) -> NessBasis:
    """Null space of the dense Liouvillian as a Hermitian matrix basis.

    When the model declares symmetry generators, basis elements are
    split along the symmetry blocks so that per-sector steady states
    appear as individual (physical-flagged) elements.
    """
    liou = build_liouvillian(model, dense_limit=dense_limit)
    _, svals, vh = np.linalg.svd(liou.matrix)
    cutoff = tol * svals[0]
    null_vecs = vh[svals <= cutoff].conj().T
    if null_vecs.shape[1] == 0:
        return NessBasis(elements=(), physical=(), singular_values=svals)
    basis = _hermitian_null_basis(null_vecs, liou.dim)
    if align_symmetries:
        basis = _align_basis(basis, _generator_projectors(model))
    return NessBasis(
        elements=tuple(basis),
        physical=tuple(_is_physical(b) for b in basis),
        singular_values=svals,
    )


def exact_ness(model: OpenSystemModel,
               dense_limit: int = DEFAULT_DENSE_LIMIT) -> np.ndarray:
    """Unique trace-one PSD steady state; raises if the null space is degenerate."""
    basis = steady_states(model, dense_limit=dense_limit)
    if basis.dimension != 1:
        raise DegenerateSteadySpaceError(
            f"steady space has dimension {basis.dimension}, expected 1"
        )
    rho = basis.physical_representative(0)
    return (rho + rho.conj().T) / 2


def _sqrtm_psd(rho: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((rho + rho.conj().T) / 2)
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, clipped to [0, 1]."""
    s = _sqrtm_psd(rho)
    inner = _sqrtm_psd(s @ sigma @ s)
    f = float(np.trace(inner).real) ** 2
    return min(max(f, 0.0), 1.0)


def true_residual(rho: np.ndarray, model: OpenSystemModel) -> float:
    """Frobenius norm of L[rho]; zero exactly for genuine steady states."""
    return float(np.linalg.norm(apply_lindblad(model, rho)))


def dominant_eigenstate(rho: np.ndarray, n_qubits: int) -> tuple[float, StateVector]:
    """Largest-eigenvalue eigenvector of a density matrix, as a StateVector."""
    vals, vecs = np.linalg.eigh((rho + rho.conj().T) / 2)
    vec = vecs[:, -1]
    k = np.argmax(np.abs(vec))
    vec = vec * (vec[k].conjugate() / abs(vec[k]))
    return float(vals[-1]), StateVector(n_qubits, vec)


# ---------------------------------------------------------------------------
# Sector-restricted exact steady states (ground truth for symmetry tests)
# ---------------------------------------------------------------------------

def magnetization_sector_indices(n: int, m: int) -> np.ndarray:
    """Basis indices with total magnetization sum_j <Z_j> equal to m."""
    idx = np.arange(2 ** n)
    mags = n - 2 * np.bitwise_count(idx).astype(np.int64)
    return idx[mags == m]


def sector_basis(n: int, m: int) -> np.ndarray:
    """(2^n, k) isometry onto the magnetization-m sector."""
    cols = magnetization_sector_indices(n, m)
    basis = np.zeros((2 ** n, len(cols)), dtype=complex)
    basis[cols, np.arange(len(cols))] = 1.0
    return basis


def restricted_steady_state(model: OpenSystemModel, isometry: np.ndarray,
                            invariance_tol: float = 1e-10) -> np.ndarray:
    """Exact steady state of the generator restricted to an invariant subspace.

    ``isometry`` is a (2^n, k) matrix with orthonormal columns spanning a
    subspace left invariant by H and every jump operator. Returns the
    unique trace-one PSD steady state lifted back to the full space.
    """
    v = np.asarray(isometry, dtype=complex)
    h, jumps = _dense_ops(model)
    proj = v @ v.conj().T
    for name, op in [("H", h)] + [(f"A_{k}", a) for k, (_, a) in enumerate(jumps)]:
        leak = np.linalg.norm(op @ v - proj @ (op @ v))
        if leak > invariance_tol * max(1.0, np.linalg.norm(op)):
            raise ValueError(f"subspace is not invariant under {name} (leak {leak:.2e})")
    k = v.shape[1]
    h_r = v.conj().T @ h @ v
    eye = np.eye(k, dtype=complex)
    liou = -1j * (np.kron(eye, h_r) - np.kron(h_r.T, eye))
    for rate, a in jumps:
        a_r = v.conj().T @ a @ v
        ada = a_r.conj().T @ a_r
        liou += rate * (np.kron(a_r.conj(), a_r)
                        - 0.5 * np.kron(eye, ada)
                        - 0.5 * np.kron(ada.T, eye))
    _, svals, vh = np.linalg.svd(liou)
    null = vh[svals <= NULL_SPACE_RTOL * max(svals[0], 1e-300)]
    if null.shape[0] != 1:
        raise DegenerateSteadySpaceError(
            f"restricted steady space has dimension {null.shape[0]}, expected 1"
        )
    rho_r = null[0].conj().reshape(k, k, order="F")
    rho_r = (rho_r + rho_r.conj().T) / 2
    rho_r = rho_r / np.trace(rho_r).real
    return v @ rho_r @ v.conj().T


# ---------------------------------------------------------------------------
# Matrix-free steady state for sizes beyond the dense limit
# ---------------------------------------------------------------------------

class _MatrixFreeGenerator:
    """L and L^dag actions through Pauli-word permutations on d x d matrices."""

    def __init__(self, model: OpenSystemModel):
        self.ham = model.hamiltonian
        self.jumps = [(rate, jump, jump.dagger(), jump.dagger() * jump)
                      for rate, jump in model.dissipators]

    @staticmethod
    def _left(op: PauliSum, mat: np.ndarray) -> np.ndarray:
        return apply_to_columns(op, mat)

    @staticmethod
    def _right(op: PauliSum, mat: np.ndarray) -> np.ndarray:
        # mat @ op via (op^dag @ mat^dag)^dag, reusing the column fast path
        return apply_to_columns(op.dagger(), mat.conj().T).conj().T

    def apply(self, rho: np.ndarray) -> np.ndarray:
        out = -1j * (self._left(self.ham, rho) - self._right(self.ham, rho))
        for rate, a, adag, ada in self.jumps:
            sandwich = self._right(adag, self._left(a, rho))
            out += rate * (sandwich
                           - 0.5 * self._left(ada, rho)
                           - 0.5 * self._right(ada, rho))
        return out

    def apply_adjoint(self, sigma: np.ndarray) -> np.ndarray:
        out = 1j * (self._left(self.ham, sigma) - self._right(self.ham, sigma))
        for rate, a, adag, ada in self.jumps:
            sandwich = self._right(a, self._left(adag, sigma))
            out += rate * (sandwich
                           - 0.5 * self._left(ada, sigma)
                           - 0.5 * self._right(ada, sigma))
        return out


def sparse_steady_state(model: OpenSystemModel, tol: float = 1e-8,
                        max_iter: int = 20000,
                        dense_limit_check: int = 10) -> np.ndarray:
    """Steady state without materializing the superoperator (n <= 10).

    Minimizes ||L[rho]||_F over the trace-one affine slice by conjugate
    gradients on the normal equations, applying L and L^dag matrix-free.
    Intended for models with a unique steady state; for degenerate
    steady spaces it returns one valid steady state.
    """
    n = model.n_qubits
    if n > dense_limit_check:
        raise DenseLimitError(f"sparse steady state supports n <= {dense_limit_check}")
    dim = 2 ** n
    gen = _MatrixFreeGenerator(model)
    eye = np.eye(dim, dtype=complex)

    def project_traceless(mat):
        return mat - (np.trace(mat) / dim) * eye

    def normal_op(mat):
        return project_traceless(gen.apply_adjoint(gen.apply(mat)))

    x0 = eye / dim
    rhs = -project_traceless(gen.apply_adjoint(gen.apply(x0)))
    y = np.zeros_like(x0)
    r = rhs.copy()
    p = r.copy()
    rs = np.vdot(r, r).real
    rhs_norm = np.sqrt(np.vdot(rhs, rhs).real)
    if rhs_norm == 0.0:
        return x0
    for it in range(max_iter):
        ap = normal_op(p)
        alpha = rs / np.vdot(p, ap).real
        y = y + alpha * p
        r = r - alpha * ap
        rs_new = np.vdot(r, r).real
        if np.sqrt(rs_new) <= 1e-16 * rhs_norm:
            break
        if it % 25 == 24 and np.linalg.norm(gen.apply(x0 + y)) <= 0.5 * tol:
            break
        p = r + (rs_new / rs) * p
        rs = rs_new
    rho = x0 + y
    rho = (rho + rho.conj().T) / 2
    rho = rho / np.trace(rho).real
    residual = float(np.linalg.norm(gen.apply(rho)))
    if residual > tol:
        raise ConvergenceError(
            f"sparse steady state stalled at residual {residual:.3e} (tol {tol:.1e})",
            residual=residual,
        )
    return rho
