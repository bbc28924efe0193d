"""Batch driver: model building, ansatz generation, solving, sweeps, reports.

Configuration is a JSON file; see README for the schema. Outputs are
JSON reports plus a plot-ready CSV for sweeps. Exit codes: 0 success,
2 configuration error, 3 infeasible, 4 iteration budget exhausted,
5 dense-limit / oracle error.
"""
from __future__ import annotations

import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import models, oracle, overlaps, sdp, states, symmetry
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateSteadySpaceError,
    DenseLimitError,
    InfeasibleError,
    IterationBudgetError,
)
from .pauli import PauliSum, pauli_sum_from_obj, single_site, two_site

EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_ITERATION_BUDGET = 4
EXIT_ORACLE = 5


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}")


def _build_model(cfg: dict) -> models.OpenSystemModel:
    mcfg = cfg.get("model")
    if not isinstance(mcfg, dict):
        raise ConfigError("config needs a 'model' section")
    if "file" in mcfg:
        return models.load_model(mcfg["file"])
    if "builder" in mcfg:
        try:
            return models.build(mcfg["builder"], **mcfg.get("params", {}))
        except TypeError as exc:
            raise ConfigError(f"bad model parameters: {exc}")
    raise ConfigError("model section needs 'file' or 'builder'")


def _seed_state(model: models.OpenSystemModel, descriptor: str,
                dense_limit: int) -> states.StateVector:
    if descriptor.startswith("bits:"):
        return states.basis_state(model.n_qubits, descriptor.split(":", 1)[1])
    if descriptor == "uniform":
        return states.StateVector.uniform(model.n_qubits)
    if descriptor == "oracle-top":
        # Benchmarking-only seed: consults the exact steady state.
        if model.n_qubits <= dense_limit:
            rho = oracle.exact_ness(model, dense_limit=dense_limit)
        else:
            rho = oracle.sparse_steady_state(model)
        _, seed = oracle.dominant_eigenstate(rho, model.n_qubits)
        return seed
    raise ConfigError(f"unknown seed descriptor {descriptor!r}")


def _build_ansatz(model: models.OpenSystemModel, cfg: dict,
                  dense_limit: int) -> states.AnsatzSet:
    acfg = cfg.get("ansatz", {})
    descriptor = acfg.get("seed", "bits:" + "1" * model.n_qubits)
    if descriptor.startswith("sector-basis:"):
        return symmetry.sector_basis_ansatz(model.n_qubits,
                                            int(descriptor.split(":", 1)[1]))
    seed = _seed_state(model, descriptor, dense_limit)
    order = int(acfg.get("K", 0))
    q = acfg.get("q")
    if q is None:
        return states.moment_states(model.hamiltonian, seed, order,
                                    seed_descriptor=descriptor)
    return states.moment_states_random(model.hamiltonian, seed, order, int(q),
                                       int(acfg.get("rng_seed", 0)),
                                       seed_descriptor=descriptor)


def _constraints(cfg: dict, ansatz: states.AnsatzSet,
                 model: models.OpenSystemModel):
    out = []
    for entry in cfg.get("constraints", []):
        target = float(entry["target"])
        if entry.get("generator") == "magnetization":
            gen = models.magnetization(model.n_qubits)
        elif "observable" in entry:
            gen = pauli_sum_from_obj(entry["observable"], model.n_qubits)
        else:
            raise ConfigError(f"constraint needs 'generator' or 'observable': {entry}")
        out.append(symmetry.sector_constraint(gen, target, ansatz))
    return tuple(out)


def _solver_options(cfg: dict) -> sdp.SolverOptions:
    scfg = dict(cfg.get("solver", {}))
    if cfg.get("shots") is not None and "mode" not in scfg:
        scfg["mode"] = "least-squares"
    try:
        return sdp.SolverOptions(**scfg)
    except TypeError as exc:
        raise ConfigError(f"bad solver options: {exc}")


def _assemble(model, ansatz, cfg) -> overlaps.OverlapSet:
    ovl = overlaps.assemble(model, ansatz)
    shots = cfg.get("shots")
    if shots is not None:
        ovl = overlaps.add_shot_noise(ovl, int(shots), int(cfg.get("noise_rng_seed", 0)))
    return ovl


def _site_observables(n: int) -> dict[str, PauliSum]:
    """Site-averaged <X>, <Z> and bond-averaged <ZZ> used in sweep reports."""
    x = single_site(n, 1, "X")
    z = single_site(n, 1, "Z")
    for j in range(2, n + 1):
        x = x + single_site(n, j, "X")
        z = z + single_site(n, j, "Z")
    obs = {"avg_X": (1.0 / n) * x, "avg_Z": (1.0 / n) * z}
    if n > 1:
        zz = two_site(n, 1, "Z", 2, "Z")
        for j in range(2, n):
            zz = zz + two_site(n, j, "Z", j + 1, "Z")
        obs["avg_ZZ"] = (1.0 / (n - 1)) * zz
    return obs


def _observable_row(beta: np.ndarray, ansatz: states.AnsatzSet, n: int) -> dict:
    row = {}
    for name, op in _site_observables(n).items():
        mat = overlaps.observable_matrix(op, ansatz)
        row[name] = overlaps.expectation(beta, mat).real
    return row


def _matrix_obj(mat: np.ndarray) -> dict:
    return {"re": np.real(mat).tolist(), "im": np.imag(mat).tolist()}


def _solve_once(model, cfg, dense_limit):
    ansatz = _build_ansatz(model, cfg, dense_limit)
    ovl = _assemble(model, ansatz, cfg)
    problem = sdp.FeasibilityProblem(
        overlaps=ovl,
        extra_constraints=_constraints(cfg, ansatz, model),
        options=_solver_options(cfg),
    )
    beta = sdp.solve(problem)
    return ansatz, ovl, beta


def _oracle_section(model, rho_fit, cfg, dense_limit):
    if not cfg.get("oracle", {}).get("enabled", True):
        return {}
    if model.n_qubits > dense_limit:
        return {"skipped": f"n={model.n_qubits} above dense limit {dense_limit}"}
    try:
        rho_exact = oracle.exact_ness(model, dense_limit=dense_limit)
        fid = oracle.fidelity(rho_fit, rho_exact)
    except DegenerateSteadySpaceError:
        fid = None
    return {
        "fidelity": fid,
        "true_residual": oracle.true_residual(rho_fit, model),
    }


def _write_json(path: Path, obj: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=float)
    click.echo(str(path))


def _run(body):
    """Map package exceptions onto the documented exit codes."""
    try:
        body()
    except ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))
    except InfeasibleError as exc:
        _fail(EXIT_INFEASIBLE, f"{exc} report={exc.report}")
    except IterationBudgetError as exc:
        _fail(EXIT_ITERATION_BUDGET, f"{exc} report={exc.report}")
    except (DenseLimitError, DegenerateSteadySpaceError, ConvergenceError) as exc:
        _fail(EXIT_ORACLE, str(exc))


@click.group()
def main():
    """Steady states of Lindblad systems via a Hermitian feasibility SDP."""


@main.command()
@click.option("--config", "config_path", required=True, type=str)
@click.option("--out", "out_dir", default="ness_out", show_default=True)
@click.option("--dense-limit", default=oracle.DEFAULT_DENSE_LIMIT, show_default=True)
def solve(config_path, out_dir, dense_limit):
    """Solve one configuration and write a solution report."""
    def body():
        cfg = _load_config(config_path)
        model = _build_model(cfg)
        ansatz, ovl, beta = _solve_once(model, cfg, dense_limit)
        rho_fit = states.density_from_beta(beta.matrix, ansatz)
        report = {
            "model": model.label,
            "ansatz": ansatz.to_record(),
            "ansatz_size": ansatz.size,
            "shots": cfg.get("shots"),
            "noisy_mode": beta.mode == "least-squares",
            "diagnostics": beta.as_dict(),
            "beta": _matrix_obj(beta.matrix),
            "observables": _observable_row(beta.matrix, ansatz, model.n_qubits),
            "oracle": _oracle_section(model, rho_fit, cfg, dense_limit),
        }
        _write_json(Path(out_dir) / "solution.json", report)
    _run(body)


_SWEEP_COLUMNS = ("g", "ansatz_size", "feasible", "subspace_residual",
                  "true_residual", "fidelity", "avg_X", "avg_Z", "avg_ZZ",
                  "K", "q", "ansatz_rng_seed", "seed_descriptor", "shots", "feas_tol")


def _sweep_point(cfg, value, ansatz_cfg, dense_limit):
    point_cfg = json.loads(json.dumps(cfg))  # deep copy
    point_cfg["model"]["params"][cfg["sweep"]["parameter"]] = value
    point_cfg["ansatz"] = dict(point_cfg.get("ansatz", {}), **ansatz_cfg)
    model = _build_model(point_cfg)
    acfg = point_cfg.get("ansatz", {})
    row = {
        "g": value,
        "K": acfg.get("K", 0),
        "q": acfg.get("q", ""),
        "ansatz_rng_seed": acfg.get("rng_seed", ""),
        "seed_descriptor": acfg.get("seed", "bits:" + "1" * model.n_qubits),
        "shots": point_cfg.get("shots", ""),
        "feas_tol": _solver_options(point_cfg).feas_tol,
    }
    try:
        ansatz, _, beta = _solve_once(model, point_cfg, dense_limit)
    except (InfeasibleError, IterationBudgetError) as exc:
        row.update({"ansatz_size": "", "feasible": 0,
                    "subspace_residual": exc.report["best_residual"],
                    "true_residual": "", "fidelity": "",
                    "avg_X": "", "avg_Z": "", "avg_ZZ": ""})
        return row
    rho_fit = states.density_from_beta(beta.matrix, ansatz)
    row.update({
        "ansatz_size": ansatz.size,
        "feasible": 1,
        "subspace_residual": beta.subspace_residual,
    })
    row.update(_observable_row(beta.matrix, ansatz, model.n_qubits))
    osec = _oracle_section(model, rho_fit, point_cfg, dense_limit)
    row["true_residual"] = osec.get("true_residual", "")
    row["fidelity"] = "" if osec.get("fidelity") is None else osec.get("fidelity")
    return row


def _format_cell(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


@main.command()
@click.option("--config", "config_path", required=True, type=str)
@click.option("--out", "out_dir", default="ness_out", show_default=True)
@click.option("--dense-limit", default=oracle.DEFAULT_DENSE_LIMIT, show_default=True)
@click.option("--workers", default=1, show_default=True)
def sweep(config_path, out_dir, dense_limit, workers):
    """Sweep a model parameter; one CSV row per sweep point."""
    def body():
        cfg = _load_config(config_path)
        swp = cfg.get("sweep")
        if not swp or "parameter" not in swp or "values" not in swp:
            raise ConfigError("sweep section needs 'parameter' and 'values'")
        values = [float(v) for v in swp["values"]]
        if not all(np.isfinite(values)):
            raise ConfigError("sweep values must be finite")
        if "builder" not in cfg.get("model", {}):
            raise ConfigError("sweep requires a builder-based model section")
        grid = swp.get("ansatz_grid", [{}])
        points = [(v, a) for v in values for a in grid]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(
                lambda p: _sweep_point(cfg, p[0], p[1], dense_limit), points))
        out = Path(out_dir) / "sweep.csv"
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w") as fh:
            fh.write(",".join(_SWEEP_COLUMNS) + "\n")
            for row in rows:
                fh.write(",".join(_format_cell(row[c]) for c in _SWEEP_COLUMNS) + "\n")
        click.echo(str(out))
    _run(body)


@main.command(name="oracle")
@click.option("--config", "config_path", required=True, type=str)
@click.option("--out", "out_dir", default="ness_out", show_default=True)
@click.option("--dense-limit", default=oracle.DEFAULT_DENSE_LIMIT, show_default=True)
def oracle_cmd(config_path, out_dir, dense_limit):
    """Exact steady-state structure; optional seed-overlap table for large n."""
    def body():
        cfg = _load_config(config_path)
        model = _build_model(cfg)
        report = {"model": model.label}
        if model.n_qubits <= dense_limit:
            basis = oracle.steady_states(model, dense_limit=dense_limit)
            report["degeneracy"] = basis.dimension
            report["physical_count"] = int(sum(basis.physical))
            report["smallest_singular_values"] = [
                float(s) for s in basis.singular_values[-max(basis.dimension + 2, 3):]]
        table_cfg = cfg.get("overlap_table")
        if table_cfg:
            column = []
            for value in table_cfg["g_values"]:
                point = json.loads(json.dumps(cfg))
                point["model"]["params"][table_cfg.get("parameter", "g")] = value
                pmodel = _build_model(point)
                if pmodel.n_qubits <= dense_limit:
                    rho = oracle.exact_ness(pmodel, dense_limit=dense_limit)
                else:
                    rho = oracle.sparse_steady_state(pmodel)
                lam, _ = oracle.dominant_eigenstate(rho, pmodel.n_qubits)
                column.append({"value": value, "seed_overlap": lam,
                               "residual": oracle.true_residual(rho, pmodel)})
            report["overlap_table"] = column
        _write_json(Path(out_dir) / "oracle.json", report)
    _run(body)


@main.command(name="symmetry")
@click.option("--config", "config_path", required=True, type=str)
@click.option("--out", "out_dir", default="ness_out", show_default=True)
@click.option("--dense-limit", default=oracle.DEFAULT_DENSE_LIMIT, show_default=True)
def symmetry_cmd(config_path, out_dir, dense_limit):
    """Twirl + Vandermonde extraction of per-sector steady states."""
    def body():
        cfg = _load_config(config_path)
        model = _build_model(cfg)
        scfg = cfg.get("symmetry", {})
        kind = scfg.get("use", "exchange-parity")
        if kind == "exchange-parity":
            spec = symmetry.exchange_parity_symmetry(model.n_qubits)
        elif kind == "magnetization":
            spec = symmetry.magnetization_symmetry(model.n_qubits, scfg.get("phi"))
        else:
            raise ConfigError(f"unknown symmetry kind {kind!r}")
        ansatz = _build_ansatz(model, cfg, dense_limit)
        result = symmetry.extract_all_ness(
            model, spec, ansatz,
            options=_solver_options(cfg),
            extra_constraints=_constraints(cfg, ansatz, model),
            max_retries=int(scfg.get("max_retries", 2)),
        )
        found = result.found
        pairwise = [
            [abs(complex(np.trace(a.state.conj().T @ b.state))) for b in found]
            for a in found
        ]
        report = {
            "model": model.label,
            "symmetry": spec.label,
            "attempts": result.attempts,
            "solver_diagnostics": result.beta.as_dict(),
            "sectors": [
                {
                    "sector": s.sector,
                    "eigenvalue": [s.eigenvalue.real, s.eigenvalue.imag],
                    "missing": s.missing,
                    "trace_weight": None if s.missing else [s.trace_weight.real,
                                                            s.trace_weight.imag],
                    "residual": s.residual,
                    "psd_violation": s.psd_violation,
                    "state": None if s.missing else _matrix_obj(s.state),
                }
                for s in result.states
            ],
            "pairwise_trace_overlaps": pairwise,
        }
        _write_json(Path(out_dir) / "symmetry.json", report)
    _run(body)


@main.group()
def ansatz():
    """Generate or inspect ansatz records."""


@ansatz.command(name="generate")
@click.option("--config", "config_path", required=True, type=str)
@click.option("--out", "out_path", default="ness_out/ansatz.json", show_default=True)
@click.option("--dense-limit", default=oracle.DEFAULT_DENSE_LIMIT, show_default=True)
def ansatz_generate(config_path, out_path, dense_limit):
    def body():
        cfg = _load_config(config_path)
        model = _build_model(cfg)
        ans = _build_ansatz(model, cfg, dense_limit)
        record = ans.to_record()
        record["content_hash"] = ans.content_hash()
        _write_json(Path(out_path), record)
    _run(body)


@ansatz.command(name="inspect")
@click.argument("record_path", type=str)
def ansatz_inspect(record_path):
    def body():
        record = _load_config(record_path)
        words = record.get("words", [])
        click.echo(f"n_qubits:        {record.get('n_qubits')}")
        click.echo(f"seed_descriptor: {record.get('seed_descriptor')}")
        click.echo(f"rng_seed:        {record.get('rng_seed')}")
        click.echo(f"states:          {len(words)}")
        if words:
            depth = max(len(w) for w in words)
            click.echo(f"max word length: {depth}")
    _run(body)


@main.group()
def model():
    """Validate or emit model files."""


@model.command(name="validate")
@click.argument("model_path", type=str)
def model_validate(model_path):
    def body():
        m = models.load_model(model_path)
        violations = models.validate(m)
        if violations:
            raise ConfigError("; ".join(violations))
        click.echo(f"ok: {m.label or model_path} "
                   f"(n={m.n_qubits}, H terms={m.hamiltonian.n_terms}, "
                   f"dissipators={len(m.dissipators)})")
    _run(body)


@model.command(name="emit")
@click.option("--builder", required=True, type=str)
@click.option("--out", "out_path", required=True, type=str)
@click.option("--n", type=int, required=True)
@click.option("--g", type=float, default=None)
@click.option("--delta", type=float, default=None)
@click.option("--gamma", type=float, default=None)
@click.option("--drive", type=float, default=None)
@click.option("--mu", type=float, default=None)
def model_emit(builder, out_path, n, g, delta, gamma, drive, mu):
    def body():
        params = {"n": n}
        for key, val in (("g", g), ("delta", delta), ("gamma", gamma),
                         ("drive", drive), ("mu", mu)):
            if val is not None:
                params[key] = val
        m = models.build(builder, **params)
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        models.save_model(m, out_path)
        click.echo(out_path)
    _run(body)


if __name__ == "__main__":
    main()
