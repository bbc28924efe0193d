"""Feasibility solver over the Hermitian PSD cone for the projected constraints.

The solver whitens the ansatz Gram matrix to an identity metric (dropping
near-null Gram directions), then runs Dykstra-corrected alternating
projections between the affine constraint set {zero projected generator,
unit trace, optional extra linear constraints} and the PSD cone. The
affine projection is least-norm and matrix-free: a conjugate-gradient
solve on the normal equations applies the constraint operator and its
adjoint as short sequences of L x L products, so no L^2 x L^2 system is
ever materialized.

A secondary least-squares mode minimizes the squared generator residual
over the spectrahedron {PSD, unit trace} by projected gradient descent;
it is the fallback when shot noise makes strict feasibility impossible
and reports the honestly achieved residual.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateAnsatzError,
    InfeasibleError,
    IterationBudgetError,
)
from .overlaps import ObservableMatrix, OverlapSet, galerkin_lhs


@dataclass(frozen=True)
class SolverOptions:
    feas_tol: float = 1e-9
    psd_tol: float = 1e-9
    max_iter: int = 10000
    whiten_cutoff: float = 1e-10        # relative Gram eigenvalue cutoff
    cg_tol_factor: float = 0.02         # inner tolerance as fraction of outer
    cg_max_iter: int = 3000
    stall_window: int = 500
    stall_improvement: float = 1e-3     # required relative progress per window
    initial: str = "identity"           # "identity" or "random"
    rng_seed: int = 0
    mode: str = "auto"                  # "feasibility", "least-squares", "auto"
    ls_max_iter: int = 60000
    ls_grad_tol: float = 1e-10
    ls_penalty: float = 1.0

    def __post_init__(self):
        for name in ("feas_tol", "psd_tol", "whiten_cutoff", "cg_tol_factor"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")


@dataclass(frozen=True)
class FeasibilityProblem:
    overlaps: OverlapSet
    rates: tuple[float, ...] | None = None
    extra_constraints: tuple[tuple[ObservableMatrix, float], ...] = ()
    options: SolverOptions = field(default_factory=SolverOptions)

    @property
    def effective_rates(self) -> tuple[float, ...]:
        return self.overlaps.rates if self.rates is None else self.rates

    @property
    def size(self) -> int:
        return self.overlaps.size


@dataclass(frozen=True)
class BetaMatrix:
    """Solver output: Hermitian coefficient matrix with diagnostics.

    subspace_residual is the Frobenius norm of the projected generator
    evaluated in the original (unwhitened) ansatz basis; psd_violation
    is the most negative eigenvalue of beta (>= 0 when beta is PSD).
    """

    matrix: np.ndarray
    subspace_residual: float
    psd_violation: float
    trace_error: float
    iterations: int
    constraint_errors: tuple[float, ...] = ()
    mode: str = "feasibility"
    converged: bool = True
    whitened_dim: int = 0
    objective: float | None = None

    def as_dict(self) -> dict:
        return {
            "subspace_residual": self.subspace_residual,
            "psd_violation": self.psd_violation,
            "trace_error": self.trace_error,
            "iterations": self.iterations,
            "constraint_errors": list(self.constraint_errors),
            "mode": self.mode,
            "converged": self.converged,
            "whitened_dim": self.whitened_dim,
        }


def _hermitize(mat: np.ndarray) -> np.ndarray:
    return (mat + mat.conj().T) / 2


class _WhitenedSystem:
    """Constraint data after the Gram metric has been mapped to identity."""

    def __init__(self, d, r_list, f_list, rates, extras, targets):
        self.d = d
        self.r_list = r_list
        self.f_list = f_list
        self.rates = rates
        self.extras = extras
        self.targets = np.asarray(targets, dtype=float)
        self.dim = d.shape[0]
        self.eye = np.eye(self.dim, dtype=complex)

    def generator(self, x: np.ndarray) -> np.ndarray:
        out = -1j * (self.d @ x - x @ self.d)
        for rate, r, f in zip(self.rates, self.r_list, self.f_list):
            out += rate * (r @ x @ r.conj().T - 0.5 * (f @ x + x @ f))
        return out

    def generator_adjoint(self, y: np.ndarray) -> np.ndarray:
        out = 1j * (self.d @ y - y @ self.d)
        for rate, r, f in zip(self.rates, self.r_list, self.f_list):
            out += rate * (r.conj().T @ y @ r - 0.5 * (f @ y + y @ f))
        return out

    def apply(self, x: np.ndarray):
        """A(x) = (G(x), Tr x, (Tr(x N_k))_k)."""
        vals = np.array([np.vdot(nmat, x).real for nmat in self.extras])
        return self.generator(x), np.trace(x).real, vals

    def adjoint(self, y: np.ndarray, t: float, vals: np.ndarray) -> np.ndarray:
        out = self.generator_adjoint(y) + t * self.eye
        for v, nmat in zip(vals, self.extras):
            out = out + v * nmat
        return out

    # Packed real-vector view of the constraint space, for the CG solve.
    def pack(self, y: np.ndarray, t: float, vals: np.ndarray) -> np.ndarray:
        return np.concatenate([y.real.ravel(), y.imag.ravel(), [t], vals])

    def unpack(self, packed: np.ndarray):
        k = self.dim * self.dim
        y = (packed[:k] + 1j * packed[k:2 * k]).reshape(self.dim, self.dim)
        return y, packed[2 * k], packed[2 * k + 1:]

    def normal_matvec(self, packed: np.ndarray) -> np.ndarray:
        y, t, vals = self.unpack(packed)
        return self.pack(*self.apply(self.adjoint(y, t, vals)))


def whiten(problem: FeasibilityProblem):
    """Map all constraint matrices into an orthonormalized ansatz basis.

    Returns (system, transform) where transform W satisfies W^dag E W = I
    on the retained subspace and beta = W x W^dag recovers a coefficient
    matrix in the original basis.
    """
    opts = problem.options
    gram = _hermitize(problem.overlaps.E)
    vals, vecs = np.linalg.eigh(gram)
    if vals[-1] <= 0:
        raise DegenerateAnsatzError("ansatz Gram matrix is numerically zero")
    keep = vals > opts.whiten_cutoff * vals[-1]
    if not np.any(keep):
        raise DegenerateAnsatzError("no Gram eigenvalue above the whitening cutoff")
    w = vecs[:, keep] / np.sqrt(vals[keep])

    def conj_map(mat):
        return w.conj().T @ mat @ w

    d_w = _hermitize(conj_map(problem.overlaps.D))
    r_w = [conj_map(m) for m in problem.overlaps.R]
    f_w = [_hermitize(conj_map(m)) for m in problem.overlaps.F]
    extras = [_hermitize(conj_map(obs.matrix)) for obs, _ in problem.extra_constraints]
    targets = [target for _, target in problem.extra_constraints]
    system = _WhitenedSystem(d_w, r_w, f_w, problem.effective_rates, extras, targets)
    return system, w


def project_psd(x: np.ndarray) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm (negative eigenvalues clamped)."""
    x = _hermitize(np.asarray(x, dtype=complex))
    vals, vecs = np.linalg.eigh(x)
    if vals[0] >= 0:
        return x
    return _hermitize((vecs * np.clip(vals, 0.0, None)) @ vecs.conj().T)


def _cg_normal(system: _WhitenedSystem, rhs: np.ndarray, mu0: np.ndarray | None,
               tol: float, max_iter: int):
    """CG on the normal equations AA* mu = rhs; returns the best iterate.

    Handles inconsistent systems (empty affine set) by stopping when the
    residual hits a floor; the caller sees converged=False.
    """
    mu = np.zeros_like(rhs) if mu0 is None else mu0.copy()
    r = rhs - system.normal_matvec(mu) if mu.any() else rhs.copy()
    p = r.copy()
    rs = float(r @ r)
    best_mu, best_res = mu.copy(), np.sqrt(rs)
    if best_res <= tol:
        return best_mu, best_res, True
    floor_counter = 0
    for _ in range(max_iter):
        ap = system.normal_matvec(p)
        denom = float(p @ ap)
        if denom <= 0:
            break  # numerically singular direction
        alpha = rs / denom
        mu = mu + alpha * p
        r = r - alpha * ap
        rs_new = float(r @ r)
        res = np.sqrt(rs_new)
        if res < best_res * (1.0 - 1e-4):
            best_mu, best_res = mu.copy(), res
            floor_counter = 0
        else:
            floor_counter += 1
            if floor_counter >= 150:
                break  # residual floor: affine set likely empty
        if res <= tol:
            best_mu, best_res = mu.copy(), res
            return best_mu, best_res, True
        p = r + (rs_new / rs) * p
        rs = rs_new
    return best_mu, best_res, best_res <= tol


def project_affine(x: np.ndarray, system: _WhitenedSystem,
                   tol: float, max_iter: int, mu_warm: np.ndarray | None = None):
    """Least-norm correction of x onto the affine constraint set.

    Returns (projected, mu, info); info carries the inner residual and a
    convergence flag. With an empty affine set the result is the best
    least-squares correction found.
    """
    g, tr, vals = system.apply(x)
    rhs = system.pack(-g, 1.0 - tr, system.targets - vals)
    mu, res, ok = _cg_normal(system, rhs, mu_warm, tol, max_iter)
    correction = system.adjoint(*system.unpack(mu))
    return _hermitize(x + correction), mu, {"inner_residual": res, "inner_converged": ok}


def residuals(problem: FeasibilityProblem, beta: np.ndarray) -> dict:
    """Original-basis diagnostics for any candidate beta (solver-independent)."""
    beta = np.asarray(beta, dtype=complex)
    ovl = problem.overlaps
    gal = galerkin_lhs(ovl, beta, problem.effective_rates)
    eigs = np.linalg.eigvalsh(_hermitize(beta))
    cons = tuple(
        float(abs(np.trace(beta @ obs.matrix) - target))
        for obs, target in problem.extra_constraints
    )
    return {
        "subspace_residual": float(np.linalg.norm(gal)),
        "trace_error": float(abs(np.trace(beta @ ovl.E) - 1.0)),
        "psd_violation": float(eigs[0]),
        "hermiticity_error": float(np.linalg.norm(beta - beta.conj().T)),
        "constraint_errors": cons,
    }


def _initial_point(dim: int, options: SolverOptions) -> np.ndarray:
    if options.initial == "identity":
        return np.eye(dim, dtype=complex) / dim
    if options.initial == "random":
        rng = np.random.default_rng(options.rng_seed)
        g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        x = g @ g.conj().T
        return x / np.trace(x).real
    raise ValueError(f"unknown initial point kind {options.initial!r}")


def _finalize(problem, system, w, x, iterations, mode, converged,
              objective=None) -> BetaMatrix:
    beta = _hermitize(w @ x @ w.conj().T)
    diag = residuals(problem, beta)
    return BetaMatrix(
        matrix=beta,
        subspace_residual=diag["subspace_residual"],
        psd_violation=diag["psd_violation"],
        trace_error=diag["trace_error"],
        iterations=iterations,
        constraint_errors=diag["constraint_errors"],
        mode=mode,
        converged=converged,
        whitened_dim=system.dim,
        objective=objective,
    )


def solve_feasibility(problem: FeasibilityProblem) -> BetaMatrix:
    """Dykstra alternating projections between the affine set and the PSD cone.

    Raises InfeasibleError when the residual stagnates above tolerance
    and IterationBudgetError when max_iter runs out while the residual
    is still improving; both carry the best diagnostics found.
    """
    opts = problem.options
    system, w = whiten(problem)
    gram_scale = float(np.linalg.eigvalsh(_hermitize(problem.overlaps.E))[-1])
    tol_w = opts.feas_tol / max(1.0, gram_scale)
    x = _initial_point(system.dim, opts)
    p = np.zeros((system.dim, system.dim), dtype=complex)
    mu_warm = None
    best_res = np.inf
    window_best = np.inf
    for it in range(opts.max_iter):
        g, tr, vals = system.apply(x)
        res = max(float(np.linalg.norm(g)), abs(1.0 - tr),
                  float(np.max(np.abs(system.targets - vals), initial=0.0)))
        best_res = min(best_res, res)
        if res <= tol_w:
            candidate = _finalize(problem, system, w, x, it, "feasibility", True)
            ok = (candidate.subspace_residual <= opts.feas_tol
                  and candidate.trace_error <= opts.feas_tol
                  and all(c <= opts.feas_tol for c in candidate.constraint_errors))
            if ok:
                return candidate
            tol_w /= 10.0  # whitened tolerance too loose for the original basis
        if it > 0 and it % opts.stall_window == 0:
            if best_res > window_best * (1.0 - opts.stall_improvement):
                report = {"best_residual": best_res, "iterations": it,
                          "tolerance": opts.feas_tol}
                raise InfeasibleError(
                    f"feasibility residual stagnated at {best_res:.3e} "
                    f"(tol {opts.feas_tol:.1e}) after {it} iterations",
                    report=report,
                )
            window_best = best_res
        y, mu_warm, _ = project_affine(
            x, system,
            tol=max(opts.cg_tol_factor * tol_w, 1e-15),
            max_iter=opts.cg_max_iter,
            mu_warm=mu_warm,
        )
        z = project_psd(y + p)
        p = y + p - z
        x = z
    report = {"best_residual": best_res, "iterations": opts.max_iter,
              "tolerance": opts.feas_tol}
    raise IterationBudgetError(
        f"no feasible point within {opts.max_iter} iterations "
        f"(best residual {best_res:.3e}); infeasible or slow",
        report=report,
    )


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of a real vector onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, len(v) + 1)
    valid = u - css / ks > 0
    k = ks[valid][-1]
    return np.clip(v - css[k - 1] / k, 0.0, None)


def _project_spectrahedron(x: np.ndarray) -> np.ndarray:
    """Nearest trace-one PSD matrix: eigenvalues projected onto the simplex."""
    vals, vecs = np.linalg.eigh(_hermitize(x))
    return _hermitize((vecs * _project_simplex(vals)) @ vecs.conj().T)


def solve_least_squares(problem: FeasibilityProblem) -> BetaMatrix:
    """Projected gradient on ||G(x)||^2 (+ penalized extra constraints)
    over the spectrahedron; tolerant of noisy, inconsistent constraints."""
    opts = problem.options
    system, w = whiten(problem)
    pen = opts.ls_penalty

    def quad_op(x):
        out = system.generator_adjoint(system.generator(x))
        for nmat in system.extras:
            out = out + pen * np.vdot(nmat, x).real * nmat
        return _hermitize(out)

    def gradient(x):
        out = system.generator_adjoint(system.generator(x))
        for nmat, target in zip(system.extras, system.targets):
            out = out + pen * (np.vdot(nmat, x).real - target) * nmat
        return 2.0 * _hermitize(out)

    def objective(x):
        g, _, vals = system.apply(x)
        return float(np.linalg.norm(g) ** 2
                     + pen * np.sum((vals - system.targets) ** 2))

    # Lipschitz constant of the gradient via power iteration on the quadratic.
    rng = np.random.default_rng(0)
    z = rng.normal(size=(system.dim, system.dim))
    z = _hermitize(z + 1j * rng.normal(size=z.shape))
    z /= np.linalg.norm(z)
    lam = 1.0
    for _ in range(30):
        z_new = quad_op(z)
        lam = max(float(np.linalg.norm(z_new)), 1e-30)
        z = z_new / lam
    step = 1.0 / (2.0 * lam)

    x = _project_spectrahedron(_initial_point(system.dim, opts))
    best_obj = objective(x)
    stall = 0
    it = 0
    for it in range(opts.ls_max_iter):
        x_new = _project_spectrahedron(x - step * gradient(x))
        grad_map = float(np.linalg.norm(x - x_new)) / step
        x = x_new
        obj = objective(x)
        if obj < best_obj * (1.0 - 1e-12):
            best_obj = obj
            stall = 0
        else:
            stall += 1
        if grad_map <= opts.ls_grad_tol or stall >= 200:
            break
    return _finalize(problem, system, w, x, it + 1, "least-squares", True,
                     objective=objective(x))


def solve(problem: FeasibilityProblem) -> BetaMatrix:
    """Mode dispatch: exact assemblies solve for strict feasibility, noisy
    assemblies fall back to the least-squares mode."""
    mode = problem.options.mode
    if mode == "auto":
        mode = "least-squares" if problem.overlaps.shots is not None else "feasibility"
    if mode == "feasibility":
        return solve_feasibility(problem)
    if mode == "least-squares":
        return solve_least_squares(problem)
    raise ValueError(f"unknown solver mode {mode!r}")
