"""Command-line front end: solve, verify, phantom, delta, report.

Exit codes: 0 converged or all checks passed, 2 iteration budget
exhausted, 3 validation or construction failure, 4 I/O or parse failure.
A JSON --config file can supply any field; explicit flags win.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import io
from .constraints import smoothing_validate, sne_sample_check, verify_nesting
from .errors import ConstructionError, DivergenceError, ParseError, ValidationError
from .operators import (
    OperatorSchedule,
    build_cimmino,
    build_diagonal_weighting,
    build_kaczmarz,
    build_landweber_schedule,
    certify_nonexpansiveness,
    validate_properties,
)
from .phantom import PhantomSpec, generate
from .solver import LLSInstance, SolverConfig, fixed_point_shift, run_fca

EXIT_OK = 0
EXIT_MAX_ITER = 2
EXIT_INVALID = 3
EXIT_IO = 4

METHODS = ("kaczmarz", "cimmino", "landweber", "dw")

DEFAULTS = {
    "method": "kaczmarz",
    "relaxation": 1.0,
    "omega": None,
    "omegas": None,
    "weights": None,
    "diagonal": None,
    "box_schedule": None,
    "smoothing": None,
    "step_tol": 1e-10,
    "residual_tol": 1e-12,
    "max_iter": 100_000,
    "store_every": 10,
    "matrix": None,
    "rhs": None,
    "output": None,
}

METHOD_KEYS = ("method", "relaxation", "omega", "omegas", "weights", "diagonal")
SOLVER_KEYS = ("step_tol", "residual_tol", "max_iter", "store_every")
DATA_KEYS = ("matrix", "rhs", "output")
CONSTRAINT_KEYS = ("box_schedule", "smoothing")


class _Parser(argparse.ArgumentParser):
    """Maps usage errors onto the I/O-parse exit code instead of exiting."""

    def error(self, message):
        raise ParseError(f"{self.prog}: {message}")


def _resolve(args, keys) -> dict:
    cfg = {key: DEFAULTS[key] for key in keys}
    config_path = getattr(args, "config", None)
    if config_path:
        loaded = io.read_config(config_path)
        unknown = sorted(set(loaded) - set(keys))
        if unknown:
            raise ParseError(f"{config_path}: unknown config keys: {unknown}")
        cfg.update(loaded)
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return cfg


def _require(cfg: dict, key: str) -> str:
    value = cfg.get(key)
    if not value:
        raise ValidationError(f"missing required setting '{key}'")
    return value


def _omega_list(raw) -> tuple:
    if isinstance(raw, str):
        parts = [piece.strip() for piece in raw.split(",") if piece.strip()]
        try:
            return tuple(float(piece) for piece in parts)
        except ValueError:
            raise ParseError(f"not a comma-separated float list: {raw!r}")
    try:
        return tuple(float(value) for value in raw)
    except (TypeError, ValueError):
        raise ParseError(f"omegas must be a list of numbers, got {raw!r}")


def _build_method(cfg: dict, a: np.ndarray):
    method = cfg["method"]
    if method not in METHODS:
        raise ValidationError(f"unknown method {method!r}; choose from {list(METHODS)}")
    if method == "kaczmarz":
        return build_kaczmarz(a, relaxation=float(cfg["relaxation"]))
    if method == "cimmino":
        weights = io.read_vector(cfg["weights"]) if cfg["weights"] else None
        omega = 1.0 if cfg["omega"] is None else float(cfg["omega"])
        return build_cimmino(a, omega=omega, weights=weights)
    if method == "landweber":
        if cfg["omegas"] is not None:
            omegas = _omega_list(cfg["omegas"])
        elif cfg["omega"] is not None:
            omegas = (float(cfg["omega"]),)
        else:
            omegas = ()
        return build_landweber_schedule(a, omegas=omegas)
    diagonal_path = cfg["diagonal"]
    if not diagonal_path:
        raise ValidationError("method 'dw' needs a --diagonal vector file")
    diagonal = io.read_vector(diagonal_path)
    omega = 1.0 if cfg["omega"] is None else float(cfg["omega"])
    return build_diagonal_weighting(a, diagonal, omega=omega)


def _load_constraint(cfg: dict):
    if cfg["box_schedule"] and cfg["smoothing"]:
        raise ValidationError("give at most one of box_schedule and smoothing")
    if cfg["box_schedule"]:
        return io.read_box_schedule(cfg["box_schedule"])
    if cfg["smoothing"]:
        return smoothing_validate(io.read_matrix(cfg["smoothing"]))
    return None


def _solver_config(cfg: dict) -> SolverConfig:
    return SolverConfig(
        step_tol=float(cfg["step_tol"]),
        residual_tol=float(cfg["residual_tol"]),
        max_iter=int(cfg["max_iter"]),
        store_every=int(cfg["store_every"]),
    )


def cmd_solve(args) -> int:
    cfg = _resolve(args, METHOD_KEYS + SOLVER_KEYS + DATA_KEYS + CONSTRAINT_KEYS)
    a = io.read_matrix(_require(cfg, "matrix"))
    b = io.read_vector(_require(cfg, "rhs"))
    out_dir = _require(cfg, "output")
    instance = LLSInstance(a, b)
    q = _build_method(cfg, a)
    constraint = _load_constraint(cfg)
    trace = run_fca(q, instance, constraint=constraint, config=_solver_config(cfg))
    os.makedirs(out_dir, exist_ok=True)
    io.write_trace_csv(os.path.join(out_dir, "trace.csv"), trace)
    io.write_vector(os.path.join(out_dir, "final_x.txt"), trace.final_x)
    summary = trace.summary_text()
    io.write_summary(os.path.join(out_dir, "summary.txt"), summary)
    sys.stdout.write(summary)
    return EXIT_OK if trace.status == "converged" else EXIT_MAX_ITER


def cmd_verify(args) -> int:
    cfg = _resolve(args, METHOD_KEYS + CONSTRAINT_KEYS + ("matrix", "rhs"))
    a = io.read_matrix(_require(cfg, "matrix"))
    b = io.read_vector(cfg["rhs"]) if cfg["rhs"] else np.zeros(a.shape[0])
    q = _build_method(cfg, a)
    members = q.operators if isinstance(q, OperatorSchedule) else (q,)
    all_ok = True
    for index, member in enumerate(members):
        report = validate_properties(member, a)
        sys.stdout.write(f"operator {index} ({member.label}):\n{report}\n")
        all_ok &= report.ok
        cert = certify_nonexpansiveness(member, a, b)
        sys.stdout.write(
            "  nonexpansiveness: "
            f"max_defect={cert.max_defect!r} "
            f"equality_defect={cert.equality_defect!r} "
            f"orthogonality_defect={cert.orthogonality_defect!r} "
            f"-> {'PASS' if cert.ok else 'FAIL'}\n"
        )
        all_ok &= cert.ok
    if cfg["box_schedule"] and cfg["smoothing"]:
        raise ValidationError("give at most one of box_schedule and smoothing")
    if cfg["box_schedule"]:
        schedule = io.read_box_schedule(cfg["box_schedule"])
        nesting = verify_nesting(schedule)
        sys.stdout.write(f"box schedule nesting:\n{nesting}\n")
        all_ok &= nesting.ok
        for stage, box in schedule.distinct_boxes():
            sne = sne_sample_check(box.project, box.lower.size)
            sys.stdout.write(
                f"  box at index {stage}: sne max_defect={sne.max_defect!r} "
                f"equality_defect={sne.equality_defect!r} -> {'PASS' if sne.ok else 'FAIL'}\n"
            )
            all_ok &= sne.ok
    if cfg["smoothing"]:
        smoother = smoothing_validate(io.read_matrix(cfg["smoothing"]))
        sne = sne_sample_check(smoother.apply, smoother.n)
        sys.stdout.write(
            f"smoothing: eigenvalues in [{smoother.eigenvalues.min()!r}, "
            f"{smoother.eigenvalues.max()!r}], sne max_defect={sne.max_defect!r} "
            f"-> {'PASS' if sne.ok else 'FAIL'}\n"
        )
        all_ok &= sne.ok
    sys.stdout.write("verify: PASS\n" if all_ok else "verify: FAIL\n")
    return EXIT_OK if all_ok else EXIT_INVALID


def cmd_phantom(args) -> int:
    angles = tuple(piece.strip() for piece in args.angles.split(",") if piece.strip())
    spec = PhantomSpec(
        grid=args.grid, particles=args.particles, seed=args.seed, angles=angles
    )
    instance, truth = generate(spec)
    os.makedirs(args.output, exist_ok=True)
    io.write_matrix(os.path.join(args.output, "matrix.mtx"), instance.a)
    io.write_vector(os.path.join(args.output, "rhs.txt"), instance.b)
    io.write_vector(os.path.join(args.output, "truth.txt"), truth)
    sys.stdout.write(
        f"phantom: grid={spec.grid} particles={spec.particles} seed={spec.seed} "
        f"angles={','.join(spec.angles)} matrix_shape={instance.a.shape}\n"
    )
    return EXIT_OK


def cmd_delta(args) -> int:
    cfg = _resolve(args, METHOD_KEYS + ("matrix", "rhs", "output"))
    a = io.read_matrix(_require(cfg, "matrix"))
    b = io.read_vector(_require(cfg, "rhs"))
    instance = LLSInstance(a, b)
    q = _build_method(cfg, a)
    terminal = q.at(len(q) - 1) if isinstance(q, OperatorSchedule) else q
    report = fixed_point_shift(terminal, instance)
    sys.stdout.write(f"shift_norm: {float(np.linalg.norm(report.shift))!r}\n")
    sys.stdout.write(f"contraction_norm: {report.contraction_norm!r}\n")
    sys.stdout.write(f"solve_residual: {report.solve_residual!r}\n")
    sys.stdout.write(f"fixed_point_defect: {report.fixed_point_defect!r}\n")
    sys.stdout.write("shift:\n")
    for value in report.shift:
        sys.stdout.write(f"{float(value)!r}\n")
    if cfg["output"]:
        os.makedirs(cfg["output"], exist_ok=True)
        io.write_vector(os.path.join(cfg["output"], "shift.txt"), report.shift)
    return EXIT_OK


def cmd_report(args) -> int:
    data = io.read_trace_csv(args.trace)
    rows = len(data["k"])
    if rows == 0:
        raise ParseError(f"{args.trace}: trace has no rows")
    lines = [
        f"rows: {rows}",
        f"final_k: {data['k'][-1]}",
        f"final_residual: {data['residual'][-1]!r}",
        f"final_step_norm: {data['step_norm'][-1]!r}",
    ]
    fejer = np.asarray(data["fejer_distance"])
    if np.isfinite(fejer).any():
        finite = fejer[np.isfinite(fejer)]
        increases = np.diff(finite)
        worst = float(increases.max()) if increases.size else 0.0
        lines.append(f"max_fejer_increase: {worst!r}")
    cond1 = np.asarray(data["condition1_defect"])
    if np.isfinite(cond1).any():
        lines.append(f"max_condition1_defect: {float(np.nanmax(cond1))!r}")
    stages = sorted({index for index in data["box_index"] if index >= 0})
    if stages:
        lines.append(f"box_stages: {stages}")
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def _add_method_flags(parser) -> None:
    parser.add_argument("--method", choices=METHODS, help="iteration method")
    parser.add_argument("--relaxation", type=float, help="kaczmarz relaxation in (0, 2)")
    parser.add_argument("--omega", type=float, help="step size (cimmino, landweber, dw)")
    parser.add_argument("--omegas", help="comma-separated landweber step sizes")
    parser.add_argument("--weights", help="cimmino row-weight vector file")
    parser.add_argument("--diagonal", help="dw positive diagonal vector file")


def _add_constraint_flags(parser) -> None:
    parser.add_argument("--box-schedule", dest="box_schedule", help="box schedule JSON file")
    parser.add_argument("--smoothing", help="smoothing matrix Matrix Market file")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fcls", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    solve = commands.add_parser("solve", help="run the constrained iteration")
    solve.add_argument("--config", help="JSON config file; flags override")
    solve.add_argument("--matrix", help="system matrix (Matrix Market)")
    solve.add_argument("--rhs", help="right-hand side vector file")
    solve.add_argument("--output", help="output directory")
    _add_method_flags(solve)
    _add_constraint_flags(solve)
    solve.add_argument("--step-tol", dest="step_tol", type=float)
    solve.add_argument("--residual-tol", dest="residual_tol", type=float)
    solve.add_argument("--max-iter", dest="max_iter", type=int)
    solve.add_argument("--store-every", dest="store_every", type=int)
    solve.set_defaults(func=cmd_solve)

    verify = commands.add_parser("verify", help="certify operator and constraint properties")
    verify.add_argument("--config", help="JSON config file; flags override")
    verify.add_argument("--matrix", help="system matrix (Matrix Market)")
    verify.add_argument("--rhs", help="right-hand side vector file (optional)")
    _add_method_flags(verify)
    _add_constraint_flags(verify)
    verify.set_defaults(func=cmd_verify)

    phantom = commands.add_parser("phantom", help="write a deterministic phantom fixture")
    phantom.add_argument("--grid", type=int, default=8)
    phantom.add_argument("--particles", type=int, default=6)
    phantom.add_argument("--seed", type=int, default=42)
    phantom.add_argument("--angles", default="rows,cols,diag,anti-diag")
    phantom.add_argument("--output", required=True)
    phantom.set_defaults(func=cmd_phantom)

    delta = commands.add_parser("delta", help="report the fixed-point shift")
    delta.add_argument("--config", help="JSON config file; flags override")
    delta.add_argument("--matrix", help="system matrix (Matrix Market)")
    delta.add_argument("--rhs", help="right-hand side vector file")
    delta.add_argument("--output", help="optional directory for shift.txt")
    _add_method_flags(delta)
    delta.set_defaults(func=cmd_delta)

    report = commands.add_parser("report", help="summarize a trace CSV")
    report.add_argument("--trace", required=True, help="trace.csv path")
    report.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ParseError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_IO
    except (ValidationError, ConstructionError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except DivergenceError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
