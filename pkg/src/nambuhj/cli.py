"""Command-line front end.

    nambuhj simulate       --config run.yaml [--seed N] [--out DIR] [--format csv|json]
    nambuhj verify SUITE   --config run.yaml
    nambuhj derive-density --config run.yaml
    nambuhj hj-scan        --config run.yaml
    nambuhj list-systems

Exit status: 0 all checks pass, 1 a check failed, 2 usage or config error,
3 runtime (domain / integration) error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__, dynamics, hj
from .config import RunConfig, build_system, load_config
from .errors import (ConfigError, DegenerateError, DomainError, DomainExitError, ExprSyntaxError, NambuError,
                     StationaryPointError, StepUnderflowError)
from .nambu import divergence
from .report import Check, check_from, checks_report, dumps, write_json, write_table
from .sampling import RNG_ALGORITHM, make_rng, sample_points
from .systems import PRESETS, derive_density, get_preset
from .verify import (SUITES, bracket_suite, fi_suite, hj_suite, lagrangian_suite, system_suite)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(NambuError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        _emit_error("usage", message)
        raise SystemExit(EXIT_USAGE)


def _emit_error(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def _globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", default=d, help="YAML or JSON run configuration")
    p.add_argument("--seed", type=int, default=d, help="64-bit seed (overrides the config)")
    p.add_argument("--out", default=d, help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS if suppress else "csv",
                   help="data table format")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nambuhj", description="Volume Nambu-Poisson dynamics and Hamilton-Jacobi checks")
    parser.add_argument("--version", action="version", version=__version__)
    _globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _Parser(add_help=False)
    _globals(common, suppress=True)
    sub.add_parser("simulate", parents=[common], help="integrate flows and report conservation")
    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("suite", help=f"one of {', '.join(SUITES)}")
    sub.add_parser("derive-density", parents=[common], help="numerical conformal density rho*")
    sub.add_parser("hj-scan", parents=[common], help="scan a lambda family of sections")
    sub.add_parser("list-systems", parents=[common], help="list built-in presets")
    return parser


# ---------------------------------------------------------------------------

def _seed(args, cfg: RunConfig) -> int:
    return int(args.seed) if args.seed is not None else cfg.seed


def _out_dir(args, cfg: RunConfig | None) -> Path:
    if args.out:
        return Path(args.out)
    if cfg is not None and cfg.out_dir:
        return Path(cfg.out_dir)
    return Path("nambuhj-out")


def _finish(report: dict[str, Any], out: Path, name: str) -> int:
    write_json(out / f"{name}.json", report)
    sys.stdout.write(dumps(report) + "\n")
    return EXIT_OK if all(c["pass"] for c in report["checks"]) else EXIT_FAIL


def cmd_simulate(cfg: RunConfig, args) -> int:
    if not cfg.initial_conditions:
        raise UsageError("initial_conditions is empty")
    system = build_system(cfg.system)
    opts = cfg.section("simulate")
    flow = opts.get("flow", "nambu")
    if flow == "nambu":
        X = system.flow_field()
    elif flow == "rhs":
        X = system.rhs
    else:
        raise ConfigError(f"unknown flow {flow!r}; use 'nambu' or 'rhs'")
    structure = system.flow_structure()
    tol = float(opts.get("drift_tolerance", 1e-7))
    out = _out_dir(args, cfg)
    H = list(system.hamiltonians.fields)
    header = ["t", *system.coords, *[f.name for f in H], "divergence"]
    checks: list[Check] = []
    runs = []
    for k, x0 in enumerate(cfg.initial_conditions):
        if len(x0) != system.dim:
            raise ConfigError(f"initial condition {k} has {len(x0)} entries, expected {system.dim}")
        if not system.domain(x0):
            raise ConfigError(f"initial condition {k} is outside the domain")
        traj = dynamics.integrate(X, x0, cfg.integrator, system.domain)
        div = [divergence(structure, X, list(s), float(t)) for s, t in zip(traj.states, traj.times)]
        rows = []
        for i, (t, s) in enumerate(zip(traj.times, traj.states)):
            rows.append([t, *s, *[f.value(list(s), float(t)) for f in H], div[i]])
        path = write_table(out / f"trajectory_{k}", header, rows, args.format)
        drifts = dynamics.conservation_report(traj, H)
        for name, d in drifts.items():
            if d.conserved_claim:
                checks.append(Check(f"ic{k}: drift {name}", len(traj), d.max_drift, tol))
        runs.append({"index": k, "file": path.name, "samples": len(traj), "steps": traj.steps,
                     "final_state": [float(v) for v in traj.final],
                     "drift": {n: {"max": d.max_drift, "final": d.final_drift, "conserved_claim": d.conserved_claim}
                               for n, d in drifts.items()},
                     "max_abs_divergence": float(np.max(np.abs(div)))})
    extra: dict[str, Any] = {"runs": runs}
    steps = opts.get("convergence_steps")
    if steps:
        x0 = cfg.initial_conditions[0]
        t0, t1 = cfg.integrator.t_span
        try:
            order = dynamics.convergence_order(X, x0, t1, [float(h) for h in steps], t0, system.domain)
            extra["convergence_order"] = order
            checks.append(Check("rk4 convergence order |p - 4|", len(steps), abs(order - 4.0), 0.5))
        except DegenerateError as exc:
            extra["convergence_order"] = None
            extra["convergence_note"] = str(exc)
    return _finish(checks_report(system.name, checks, **extra), out, "simulate_summary")


def cmd_verify(cfg: RunConfig, args) -> int:
    suite = args.suite
    if suite not in SUITES:
        raise UsageError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    system = build_system(cfg.system)
    opts = cfg.section("verify")
    rng = make_rng(_seed(args, cfg))
    samples = int(opts.get("samples", 100))
    section = str(opts.get("section", "0"))
    if "=" in section:
        section = section.split("=", 1)[1]
    if suite == "bracket":
        checks = bracket_suite(system, rng, samples)
    elif suite == "fi":
        low, high = (float(v) for v in opts.get("box", [-1.0, 1.0]))
        pts = sample_points(rng, system.dim, samples, low, high, accept=system.domain)
        checks = [fi_suite(system.structure, system.coords, pts, rng, int(opts.get("degree", 3)),
                           float(opts.get("tolerance", 1e-6)))]
    elif suite == "hj":
        if "section" not in opts:
            raise ConfigError("verify.section is required for the hj suite")
        checks = hj_suite(system, section, rng, samples, float(opts.get("tolerance", 1e-8)))
    elif suite == "lagrangian":
        checks = lagrangian_suite(system, section, rng, samples)
    else:
        checks = system_suite(system, rng, samples, int(opts.get("cross_integration", 10)))
    report = checks_report(system.name, checks, suite=suite, seed=_seed(args, cfg), rng=RNG_ALGORITHM)
    return _finish(report, _out_dir(args, cfg), f"verify_{suite}")


def cmd_derive_density(cfg: RunConfig, args) -> int:
    system = build_system(cfg.system)
    opts = cfg.section("derive_density")
    rng = make_rng(_seed(args, cfg))
    samples = int(opts.get("samples", 100))
    time = float(opts.get("time", 0.0))
    compare = bool(opts.get("compare_printed", system.printed_density is not None))
    if compare and system.printed_density is None:
        raise ConfigError(f"system {system.name!r} has no printed density to compare against")
    pts = system.sample(rng, samples)
    header = [*system.coords, "rho_star", "spread"] + (["printed_ratio"] if compare else [])
    rows, spreads, skipped = [], [], 0
    for p in pts:
        try:
            est = derive_density(system, list(p), time)
        except StationaryPointError:
            skipped += 1
            continue
        row = [*p, est.rho, est.spread]
        if compare:
            row.append(est.rho / system.printed_density(list(p), time))
        rows.append(row)
        spreads.append(est.spread)
    out = _out_dir(args, cfg)
    path = write_table(out / "density", header, rows, args.format)
    checks = [check_from("density consistency spread", spreads, float(opts.get("tolerance", 1e-6)))]
    report = checks_report(system.name, checks, samples=samples, skipped=skipped, file=path.name,
                           seed=_seed(args, cfg))
    return _finish(report, out, "density_summary")


def _lambdas(given: Any) -> list[float]:
    if given is None:
        return []
    if isinstance(given, dict):
        num = int(given.get("num", 0))
        if num <= 0:
            return []
        return [float(v) for v in np.linspace(float(given["start"]), float(given["stop"]), num)]
    return [float(v) for v in given]


def cmd_hj_scan(cfg: RunConfig, args) -> int:
    system = build_system(cfg.system)
    opts = cfg.section("hj_scan")
    if "section" not in opts:
        raise ConfigError("hj_scan.section is required (use 'lam' as the family parameter)")
    lams = _lambdas(opts.get("lambdas"))
    if not lams:
        raise UsageError("lambda range is empty")
    base_coords = system.coords[:-1]
    text = str(opts["section"])
    if "=" in text:
        text = text.split("=", 1)[1]
    cs = hj.CompleteSolution.from_expr(text, base_coords, lams, system.table)
    tol = float(opts.get("tolerance", 1e-8))
    if "base_grid" in opts:
        grid = np.array(opts["base_grid"], dtype=float).reshape(-1, len(base_coords))
    else:
        rng = make_rng(_seed(args, cfg))
        grid = sample_points(rng, len(base_coords), int(opts.get("base_samples", 10)), *system.box)
    H = system.hamiltonians
    rows = []
    per_lambda = []
    for lam in lams:
        sec = cs.family(lam)
        worst = 0.0
        for b in grid:
            d = hj.hj_det_residual(H, sec, list(b))
            r = hj.relatedness_residual(H, sec, list(b))
            rows.append([lam, *b, d, r])
            worst = max(worst, abs(d))
        per_lambda.append(Check(f"lambda={lam!r}: hj_det_residual", len(grid), worst, tol))
    rep = hj.complete_solution_check(H, cs, grid, tol)
    out = _out_dir(args, cfg)
    path = write_table(out / "hj_scan", ["lambda", *base_coords, "hj_det_residual", "relatedness_residual"],
                       rows, args.format)
    checks = per_lambda + [
        Check("complete solution: nonsingular Phi (singular points)", len(grid) * len(lams),
              float(len(rep.singular_at)), 0.0),
        Check("complete solution: fiber values monotone in lambda (violations)", len(grid),
              0.0 if rep.monotone else 1.0, 0.0),
        Check("complete solution: recovered label error", len(grid) * len(lams), rep.label_error,
              1e-8 * max(1.0, max(abs(l) for l in lams))),
    ]
    report = checks_report(system.name, checks, file=path.name, complete_solution=rep.passed)
    return _finish(report, out, "hj_scan_summary")


def cmd_list_systems(args) -> int:
    info = []
    for name in PRESETS:
        p = get_preset(name)
        info.append({"name": name, "coordinates": p.coords,
                     "hamiltonians": [f.name for f in p.hamiltonians.fields],
                     "coefficients": p.table.names()})
    sys.stdout.write(dumps({"version": __version__, "systems": info}) + "\n")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "derive-density": cmd_derive_density,
    "hj-scan": cmd_hj_scan,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "list-systems":
            return cmd_list_systems(args)
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, UsageError, ExprSyntaxError) as exc:
        _emit_error("usage" if isinstance(exc, UsageError) else "config", str(exc))
        return EXIT_USAGE
    except (DomainError, DomainExitError, StepUnderflowError, StationaryPointError, NambuError,
            ArithmeticError, RuntimeError) as exc:
        _emit_error("runtime", str(exc))
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
