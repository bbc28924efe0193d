"""Open-system model container and builders for the benchmark families.

A model is a Hermitian Hamiltonian plus a list of (rate, jump operator)
dissipators, all as Pauli sums. Builders are pure: identical parameters
give identical canonical Pauli sums.

Model files are JSON with Pauli words serialized as uppercase strings
and complex coefficients as [re, im] pairs; see ``model_to_obj``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import ConfigError
from .pauli import (
    PauliSum,
    pauli_sum_from_obj,
    pauli_sum_to_obj,
    sigma_minus,
    sigma_plus,
    single_site,
    two_site,
)


@dataclass(frozen=True)
class SymmetryDescriptor:
    """Declares a strong symmetry of a model for the extraction pipeline.

    kind "generator-phase": U = exp(i * phase * generator); eigenvalues
    are derived from the generator spectrum. kind "exchange-parity": the
    site-reversal permutation composed with a global X flip (eigenvalues
    +1/-1). kind "pauli-unitary": U itself is the given Pauli sum.
    """

    kind: str
    generator: PauliSum | None = None
    phase: float | None = None
    unitary: PauliSum | None = None
    label: str = ""


@dataclass(frozen=True)
class OpenSystemModel:
    n_qubits: int
    hamiltonian: PauliSum
    dissipators: tuple[tuple[float, PauliSum], ...]
    label: str = ""
    symmetries: tuple[SymmetryDescriptor, ...] = ()

    @property
    def rates(self) -> tuple[float, ...]:
        return tuple(rate for rate, _ in self.dissipators)

    @property
    def jumps(self) -> tuple[PauliSum, ...]:
        return tuple(jump for _, jump in self.dissipators)


def tfim_chain(n: int, g: float, gamma: float = 1.0) -> OpenSystemModel:
    """Transverse-field Ising chain with per-site dephasing and damping.

    H = (1/2) sum_j Z_j Z_{j+1} + g sum_j X_j on an open chain; each
    site carries jumps Z_j and (1/2)(X_j - i Y_j), all at rate gamma.
    """
    if n < 2:
        raise ConfigError("tfim_chain needs n >= 2")
    h = PauliSum.zero(n)
    for j in range(1, n):
        h = h + two_site(n, j, "Z", j + 1, "Z", 0.5)
    for j in range(1, n + 1):
        h = h + single_site(n, j, "X", g)
    dissipators = []
    for j in range(1, n + 1):
        dissipators.append((gamma, single_site(n, j, "Z")))
        dissipators.append((gamma, sigma_minus(n, j)))
    return OpenSystemModel(
        n_qubits=n,
        hamiltonian=h,
        dissipators=tuple(dissipators),
        label=f"tfim_chain(n={n}, g={g}, gamma={gamma})",
    )


def _xxz_hamiltonian(n: int, delta: float) -> PauliSum:
    h = PauliSum.zero(n)
    for j in range(1, n):
        h = h + two_site(n, j, "X", j + 1, "X")
        h = h + two_site(n, j, "Y", j + 1, "Y")
        h = h + two_site(n, j, "Z", j + 1, "Z", delta)
    return h


def magnetization(n: int) -> PauliSum:
    """Total magnetization M = sum_j Z_j."""
    m = PauliSum.zero(n)
    for j in range(1, n + 1):
        m = m + single_site(n, j, "Z")
    return m


def xxz_dephasing(n: int, delta: float, gamma: float = 1.0) -> OpenSystemModel:
    """XXZ Heisenberg chain with per-site Z dephasing.

    Total magnetization is a strong symmetry, so there are n+1
    magnetization blocks each with its own steady state.
    """
    if n < 2:
        raise ConfigError("xxz_dephasing needs n >= 2")
    dissipators = tuple((gamma, single_site(n, j, "Z")) for j in range(1, n + 1))
    # Default twirl phase keeps all n+1 sector phases distinct.
    descriptor = SymmetryDescriptor(
        kind="generator-phase",
        generator=magnetization(n),
        phase=2.0 * math.pi / (2 * n + 2),
        label="magnetization",
    )
    return OpenSystemModel(
        n_qubits=n,
        hamiltonian=_xxz_hamiltonian(n, delta),
        dissipators=dissipators,
        label=f"xxz_dephasing(n={n}, delta={delta}, gamma={gamma})",
        symmetries=(descriptor,),
    )


def xxz_boundary_driven(n: int, delta: float, drive: float, mu: float) -> OpenSystemModel:
    """XXZ chain driven by two non-local boundary jumps.

    The jumps are sqrt(drive*(1-mu)) sigma+_1 sigma-_n and
    sqrt(drive*(1+mu)) sigma-_1 sigma+_n, each expanding to four Pauli
    terms. Both magnetization and the exchange-parity operator
    S = P * prod_j X_j are strong symmetries.
    """
    if n < 2:
        raise ConfigError("xxz_boundary_driven needs n >= 2")
    if drive <= 0:
        raise ConfigError("drive strength must be > 0")
    if not 0.0 <= mu <= 1.0:
        raise ConfigError("mu must lie in [0, 1]")
    jump_1 = math.sqrt(drive * (1.0 - mu)) * (sigma_plus(n, 1) * sigma_minus(n, n))
    jump_2 = math.sqrt(drive * (1.0 + mu)) * (sigma_minus(n, 1) * sigma_plus(n, n))
    dissipators = tuple((1.0, j) for j in (jump_1, jump_2) if j.n_terms)
    symmetries = (
        SymmetryDescriptor(
            kind="generator-phase",
            generator=magnetization(n),
            phase=2.0 * math.pi / (2 * n + 2),
            label="magnetization",
        ),
        SymmetryDescriptor(kind="exchange-parity", label="exchange-parity"),
    )
    return OpenSystemModel(
        n_qubits=n,
        hamiltonian=_xxz_hamiltonian(n, delta),
        dissipators=dissipators,
        label=f"xxz_boundary_driven(n={n}, delta={delta}, drive={drive}, mu={mu})",
        symmetries=symmetries,
    )


def validate(model: OpenSystemModel) -> list[str]:
    """Structural diagnostics; returns a list of violations, never raises."""
    violations = []
    if not model.hamiltonian.is_hermitian():
        violations.append("hamiltonian is not Hermitian")
    if model.hamiltonian.n_qubits != model.n_qubits:
        violations.append("hamiltonian qubit count differs from model")
    for k, (rate, jump) in enumerate(model.dissipators):
        if rate < 0:
            violations.append(f"dissipator {k} has negative rate {rate}")
        if jump.n_qubits != model.n_qubits:
            violations.append(f"dissipator {k} qubit count differs from model")
    return violations


_BUILDERS = {
    "tfim_chain": tfim_chain,
    "xxz_dephasing": xxz_dephasing,
    "xxz_boundary_driven": xxz_boundary_driven,
}


def build(name: str, **params) -> OpenSystemModel:
    if name not in _BUILDERS:
        raise ConfigError(f"unknown model builder {name!r}; have {sorted(_BUILDERS)}")
    return _BUILDERS[name](**params)


def _symmetry_to_obj(desc: SymmetryDescriptor) -> dict:
    obj = {"kind": desc.kind, "label": desc.label}
    if desc.generator is not None:
        obj["generator"] = pauli_sum_to_obj(desc.generator)
    if desc.phase is not None:
        obj["phase"] = desc.phase
    if desc.unitary is not None:
        obj["unitary"] = pauli_sum_to_obj(desc.unitary)
    return obj


def _symmetry_from_obj(obj: dict, n_qubits: int) -> SymmetryDescriptor:
    return SymmetryDescriptor(
        kind=obj["kind"],
        generator=pauli_sum_from_obj(obj["generator"], n_qubits) if "generator" in obj else None,
        phase=obj.get("phase"),
        unitary=pauli_sum_from_obj(obj["unitary"], n_qubits) if "unitary" in obj else None,
        label=obj.get("label", ""),
    )


def model_to_obj(model: OpenSystemModel) -> dict:
    obj = {
        "label": model.label,
        "n_qubits": model.n_qubits,
        "hamiltonian": pauli_sum_to_obj(model.hamiltonian),
        "dissipators": [
            {"rate": rate, "operator": pauli_sum_to_obj(jump)}
            for rate, jump in model.dissipators
        ],
    }
    if model.symmetries:
        obj["symmetries"] = [_symmetry_to_obj(d) for d in model.symmetries]
    return obj


def model_from_obj(obj: dict) -> OpenSystemModel:
    try:
        n = int(obj["n_qubits"])
        ham = pauli_sum_from_obj(obj["hamiltonian"], n)
        dissipators = tuple(
            (float(d["rate"]), pauli_sum_from_obj(d["operator"], n))
            for d in obj["dissipators"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed model object: {exc}") from exc
    symmetries = tuple(
        _symmetry_from_obj(s, n) for s in obj.get("symmetries", [])
    )
    return OpenSystemModel(
        n_qubits=n,
        hamiltonian=ham,
        dissipators=dissipators,
        label=obj.get("label", ""),
        symmetries=symmetries,
    )


def save_model(model: OpenSystemModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_obj(model), fh, indent=2)


def load_model(path) -> OpenSystemModel:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"model file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"model file is not valid JSON: {path}") from exc
    return model_from_obj(obj)
