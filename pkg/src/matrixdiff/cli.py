"""Command-line harness: simulation runs and verification suites.

Subcommands
-----------
simulate            solve the SDE on sampled paths and dump states as CSV/JSON
verify              run the operator-inequality suites, emit JSON reports
isometry            Monte Carlo second-moment identity check
picard-convergence  per-iteration distance table and contraction rate fit
trace-moment        Wishart mean-trace identity check

Settings come from a flat JSON config file (--config) overridden by CLI
flags; the seed falls back to the MATRIXDIFF_SEED environment variable.
Exit codes: 0 all requested checks passed, 1 a check failed, 2 bad
configuration.  Output is deterministic byte for byte under a fixed seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .brownian import TimeGrid, sample_path
from .checks import mc_isometry, mc_trace_moment, run_inequality_suite
from .sde import SdeModel, euler_solve, picard_solve, wishart_model
from .symmat import (
    ScalarFunctionSpec,
    SymmetricMatrix,
    clipped_affine_fn,
    clipped_sqrt_fn,
    constant_fn,
)

DEFAULT_SEED = 12345


class ConfigError(Exception):
    pass


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a flat JSON object")
    return cfg


def _resolve(args: argparse.Namespace, config: dict, key: str, default):
    value = getattr(args, key.replace("-", "_"), None)
    if value is not None:
        return value
    if key in config:
        return config[key]
    return default


def _resolve_seed(args, config) -> int:
    seed = _resolve(args, config, "seed", None)
    if seed is None:
        seed = os.environ.get("MATRIXDIFF_SEED", DEFAULT_SEED)
    try:
        return int(seed)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"seed must be a decimal integer, got {seed!r}") from exc


def _parse_matrix(obj, dim: int, what: str) -> np.ndarray:
    arr = np.asarray(obj, dtype=np.float64)
    if arr.ndim == 1 and arr.size == dim * dim:
        arr = arr.reshape(dim, dim)
    if arr.shape != (dim, dim):
        raise ConfigError(f"{what} must be a row-major array of {dim * dim} numbers")
    return arr


def _parse_vector(obj, dim: int, what: str) -> np.ndarray:
    arr = np.asarray(obj, dtype=np.float64).reshape(-1)
    if arr.size != dim:
        raise ConfigError(f"{what} must have {dim} entries")
    return arr


def _scalar_spec(config: dict, prefix: str) -> ScalarFunctionSpec:
    kind = config.get(f"{prefix}_kind")
    if kind == "constant":
        return constant_fn(float(config.get(f"{prefix}_value", 0.0)))
    if kind == "clipped_sqrt":
        return clipped_sqrt_fn(float(config.get(f"{prefix}_clip", 1e6)))
    if kind == "clipped_affine":
        return clipped_affine_fn(
            float(config.get(f"{prefix}_a", 1.0)),
            float(config.get(f"{prefix}_b", 0.0)),
            float(config.get(f"{prefix}_bound", 1e6)),
        )
    raise ConfigError(
        f"{prefix}_kind must be one of constant, clipped_sqrt, clipped_affine; got {kind!r}"
    )


def _build_model(args, config, dim: int) -> SdeModel:
    model_name = _resolve(args, config, "model", "wishart")
    clip = float(_resolve(args, config, "sqrt_clip_bound", 1e6))
    x0_cfg = config.get("x0")
    x0 = SymmetricMatrix(_parse_matrix(x0_cfg, dim, "x0")) if x0_cfg is not None else None
    if model_name == "wishart":
        alpha = float(_resolve(args, config, "alpha", 1.0))
        return wishart_model(dim, alpha, x0=x0, sqrt_clip_bound=clip)
    if model_name == "custom":
        g = _scalar_spec(config, "g")
        f = _scalar_spec(config, "f")
        b = _scalar_spec(config, "b")
        if x0 is None:
            x0 = SymmetricMatrix.zeros(dim)
        return SdeModel(g=g, f=f, b=b, x0=x0)
    raise ConfigError(f"unknown model {model_name!r}")


def _write_output(text: str, out_path) -> None:
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _upper_triangle_header(dim: int, with_path: bool) -> list:
    cols = (["path"] if with_path else []) + ["t"]
    cols += [f"x_{i + 1}_{j + 1}" for i in range(dim) for j in range(i, dim)]
    return cols


def _states_csv(solutions, grid: TimeGrid, dim: int) -> str:
    with_path = len(solutions) > 1
    lines = [",".join(_upper_triangle_header(dim, with_path))]
    iu = np.triu_indices(dim)
    times = grid.times
    for index, sol in enumerate(solutions):
        for k in range(grid.steps + 1):
            row = ([str(index)] if with_path else []) + [_fmt(times[k])]
            row += [_fmt(v) for v in sol.states[k][iu]]
            lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _states_json(solutions, grid: TimeGrid, dim: int) -> str:
    with_path = len(solutions) > 1
    iu = np.triu_indices(dim)
    rows = []
    for index, sol in enumerate(solutions):
        for k in range(grid.steps + 1):
            row = ([index] if with_path else []) + [grid.times[k]]
            row += [float(v) for v in sol.states[k][iu]]
            rows.append(row)
    doc = {"columns": _upper_triangle_header(dim, with_path), "rows": rows}
    return json.dumps(doc, indent=2) + "\n"


def _reports_text(reports, fmt: str) -> str:
    if fmt == "csv":
        lines = ["name,samples,worst_violation,tolerance,pass"]
        for rep in reports:
            lines.append(
                f"{rep.name},{rep.samples},{_fmt(rep.worst_violation)},"
                f"{_fmt(rep.tolerance)},{str(rep.passed).lower()}"
            )
        return "\n".join(lines) + "\n"
    return json.dumps([rep.to_dict() for rep in reports], indent=2) + "\n"


def _cmd_simulate(args, config) -> int:
    dim = int(_resolve(args, config, "dim", 2))
    steps = int(_resolve(args, config, "steps", 256))
    horizon = float(_resolve(args, config, "horizon", 1.0))
    paths = int(_resolve(args, config, "paths", 1))
    method = _resolve(args, config, "method", "euler")
    seed = _resolve_seed(args, config)
    fmt = _resolve(args, config, "format", "csv")
    grid = TimeGrid(horizon=horizon, steps=steps)
    model = _build_model(args, config, dim)
    solutions = []
    for index in range(paths):
        path = sample_path(grid, dim, seed, index)
        if method == "euler":
            solutions.append(euler_solve(model, path))
        elif method == "picard":
            solution, _ = picard_solve(model, path)
            solutions.append(solution)
        else:
            raise ConfigError(f"unknown method {method!r}")
    text = _states_csv(solutions, grid, dim) if fmt == "csv" else _states_json(solutions, grid, dim)
    _write_output(text, args.out)
    return 0


def _cmd_verify(args, config) -> int:
    samples = int(_resolve(args, config, "samples", 10000))
    seed = _resolve_seed(args, config)
    fmt = _resolve(args, config, "format", "json")
    dim = _resolve(args, config, "dim", None)
    dims = [int(dim)] if dim is not None else [2, 3, 5, 8]
    reports = run_inequality_suite(samples, dims, seed)
    _write_output(_reports_text(reports, fmt), args.out)
    return 0 if all(rep.passed for rep in reports) else 1


def _cmd_isometry(args, config) -> int:
    dim = int(_resolve(args, config, "dim", 2))
    steps = int(_resolve(args, config, "steps", 16))
    horizon = float(_resolve(args, config, "horizon", 1.0))
    paths = int(_resolve(args, config, "paths", 20000))
    seed = _resolve_seed(args, config)
    fmt = _resolve(args, config, "format", "json")
    grid = TimeGrid(horizon=horizon, steps=steps)
    a_mat = config.get("a_matrix")
    c_mat = config.get("c_matrix")
    a = SymmetricMatrix(_parse_matrix(a_mat, dim, "a_matrix")) if a_mat is not None \
        else SymmetricMatrix.diagonal(np.arange(1, dim + 1, dtype=np.float64))
    c = SymmetricMatrix(_parse_matrix(c_mat, dim, "c_matrix")) if c_mat is not None \
        else SymmetricMatrix.identity(dim)
    e_last = np.zeros(dim)
    e_last[-1] = 1.0
    x = _parse_vector(config["x_vector"], dim, "x_vector") if "x_vector" in config else e_last
    y = _parse_vector(config["y_vector"], dim, "y_vector") if "y_vector" in config else e_last
    report = mc_isometry(a, c, x, y, paths, grid, seed)
    _write_output(_reports_text([report], fmt), args.out)
    return 0 if report.passed else 1


def _cmd_picard_convergence(args, config) -> int:
    dim = int(_resolve(args, config, "dim", 2))
    steps = int(_resolve(args, config, "steps", 256))
    horizon = float(_resolve(args, config, "horizon", 1.0))
    paths = int(_resolve(args, config, "paths", 1))
    seed = _resolve_seed(args, config)
    fmt = _resolve(args, config, "format", "json")
    max_iter = int(_resolve(args, config, "max_iter", 25))
    stop_tol = float(_resolve(args, config, "stop_tol", 1e-10))
    grid = TimeGrid(horizon=horizon, steps=steps)
    model = _build_model(args, config, dim)
    records = []
    all_converged = True
    for index in range(paths):
        path = sample_path(grid, dim, seed, index)
        _, diag = picard_solve(model, path, max_iter=max_iter, stop_tol=stop_tol)
        all_converged = all_converged and diag.converged
        fit = None
        if diag.rate_fit is not None:
            fit = {"c": diag.rate_fit.c, "beta": diag.rate_fit.beta}
        records.append({
            "path_index": index,
            "converged": diag.converged,
            "iterations": diag.iterates_kept,
            "d_n": [float(v) for v in diag.d_n],
            "rate_fit": fit,
        })
    if fmt == "csv":
        lines = ["path,iteration,d_n"]
        for rec in records:
            for i, value in enumerate(rec["d_n"], start=1):
                lines.append(f"{rec['path_index']},{i},{_fmt(value)}")
        text = "\n".join(lines) + "\n"
    else:
        text = json.dumps(records, indent=2) + "\n"
    _write_output(text, args.out)
    return 0 if all_converged else 1


def _cmd_trace_moment(args, config) -> int:
    dim = int(_resolve(args, config, "dim", 2))
    steps = int(_resolve(args, config, "steps", 256))
    horizon = float(_resolve(args, config, "horizon", 1.0))
    paths = int(_resolve(args, config, "paths", 10000))
    seed = _resolve_seed(args, config)
    fmt = _resolve(args, config, "format", "json")
    grid = TimeGrid(horizon=horizon, steps=steps)
    model = _build_model(args, config, dim)
    report = mc_trace_moment(model, paths, grid, seed)
    _write_output(_reports_text([report], fmt), args.out)
    return 0 if report.passed else 1


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dim", type=int, default=None)
    parser.add_argument("--samples", type=int, default=None)
    parser.add_argument("--paths", type=int, default=None)
    parser.add_argument("--steps", type=int, default=None)
    parser.add_argument("--horizon", type=float, default=None)
    parser.add_argument("--seed", type=int, default=None, help="decimal 64-bit seed")
    parser.add_argument("--model", choices=["wishart", "custom"], default=None)
    parser.add_argument("--alpha", type=float, default=None)
    parser.add_argument("--config", default=None, help="flat JSON config file")
    parser.add_argument("--out", default=None, help="output file (default stdout)")
    parser.add_argument("--format", choices=["csv", "json"], default=None)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matrixdiff",
        description="Simulate symmetric-matrix diffusions and verify their identities.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="solve the SDE and dump path states")
    _add_common(p_sim)
    p_sim.add_argument("--method", choices=["euler", "picard"], default=None)

    p_ver = sub.add_parser("verify", help="run all operator-inequality suites")
    _add_common(p_ver)

    p_iso = sub.add_parser("isometry", help="Monte Carlo second-moment identity check")
    _add_common(p_iso)

    p_pic = sub.add_parser("picard-convergence", help="iteration distances and rate fit")
    _add_common(p_pic)
    p_pic.add_argument("--max-iter", type=int, default=None, dest="max_iter")
    p_pic.add_argument("--stop-tol", type=float, default=None, dest="stop_tol")

    p_trace = sub.add_parser("trace-moment", help="Wishart mean-trace identity check")
    _add_common(p_trace)
    return parser


_COMMANDS = {
    "simulate": _cmd_simulate,
    "verify": _cmd_verify,
    "isometry": _cmd_isometry,
    "picard-convergence": _cmd_picard_convergence,
    "trace-moment": _cmd_trace_moment,
}


def run_cli(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        return _COMMANDS[args.command](args, config)
    except (ConfigError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
