"""Command-line entry point: ``aniso-el check|solve|scan``.

Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 hypothesis failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import gfunction as gf
from . import lagrangian as lg
from . import solvers
from .config import ConfigError, ProblemConfig, load_config, render_config
from .discretization import DiscreteFunction, make_grid, phi
from .errors import HypothesisFailure, InputError, NumericalFailure
from .reports import CheckReport, Status, _plain

log = logging.getLogger("aniso_el")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_HYPOTHESIS = 0, 2, 3, 4
REQUIRED_G_CHECKS = ("Delta2", "Nabla2")


# --------------------------------------------------------------------------
# output helpers


def atomic_write(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj):
    atomic_write(path, json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n")


def write_table(path, meta: dict, header, rows):
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    atomic_write(path, buf.getvalue())


def function_csv(u: DiscreteFunction, meta: dict) -> tuple:
    header = ["t"] + [f"u_{k + 1}" for k in range(u.dim)]
    rows = [[float(t)] + [float(v) for v in row] for t, row in zip(u.grid.nodes, u.values)]
    return meta, header, rows


def _base_meta(cfg: ProblemConfig, command: str) -> dict:
    return {"tool": f"aniso-el {__version__}", "command": command,
            "problem": cfg.problem, "seed": cfg.seed}


# --------------------------------------------------------------------------
# commands


def run_checks(cfg: ProblemConfig, L: lg.Lagrangian) -> list[CheckReport]:
    ck = cfg.checks
    reports = solvers.hypothesis_reports(L, ck.samples, cfg.seed, ck.box)
    rays = gf.default_ray_samples(L.dim, ck.ray_samples, seed=cfg.seed)
    reports.append(gf.check_delta2(L.g_fun, rays))
    reports.append(gf.check_nabla2(L.g_fun, rays))
    r0 = np.linspace(ck.legacy_r0_max / ck.legacy_r0_points, ck.legacy_r0_max, ck.legacy_r0_points)
    reports.append(lg.check_legacy(L, r0))
    return reports


def required_names(L: lg.Lagrangian) -> tuple:
    return solvers.required_check_names(L) + REQUIRED_G_CHECKS


def _check_summary(reports, required):
    failing = [r.name for r in reports if r.name in required and not r.passed]
    lines = [r.summary_line() + ("" if r.name in required else "  (informational)") for r in reports]
    return failing, lines


def cmd_check(cfg: ProblemConfig, out: Path) -> int:
    L = cfg.lagrangian()
    reports = run_checks(cfg, L)
    required = required_names(L)
    failing, lines = _check_summary(reports, required)
    report = {
        "meta": _base_meta(cfg, "check"),
        "config": cfg.echo(),
        "checks": [r.to_dict() for r in reports],
        "required": list(required),
        "failing_required": failing,
        "status": "pass" if not failing else "fail",
    }
    write_json(out / "check_report.json", report)
    summary = "\n".join(lines + [f"required checks: {'all pass' if not failing else 'FAILING ' + ', '.join(failing)}"])
    atomic_write(out / "check_summary.txt", summary + "\n")
    print(summary)
    return EXIT_OK if not failing else EXIT_HYPOTHESIS


def _dump_path_factory(out: Path):
    def dump(sweep, state: solvers.PathState):
        rows = []
        for k, (node, e) in enumerate(zip(state.nodes, state.energies)):
            for t, row in zip(node.grid.nodes, node.values):
                rows.append([k, float(e), float(t)] + [float(v) for v in row])
        header = ["node", "energy", "t"] + [f"u_{k + 1}" for k in range(state.nodes[0].dim)]
        write_table(out / "paths" / f"sweep_{sweep:05d}.csv", {"sweep": sweep}, header, rows)
    return dump


def cmd_solve(cfg: ProblemConfig, out: Path, force: bool = False) -> int:
    L = cfg.lagrangian()
    grid = make_grid(L.T, cfg.n)
    reports = run_checks(cfg, L)
    required = required_names(L)
    failing, lines = _check_summary(reports, required)
    report = {"meta": _base_meta(cfg, "solve"), "config": cfg.echo(),
              "checks": [r.to_dict() for r in reports], "failing_required": failing,
              "hypotheses": "verified" if not failing else "hypotheses-unverified"}
    if failing and not force:
        report["status"] = "refused"
        write_json(out / "solve_report.json", report)
        print("refusing to solve; failing required checks: " + ", ".join(failing), file=sys.stderr)
        print("\n".join(lines), file=sys.stderr)
        return EXIT_HYPOTHESIS

    on_sweep = _dump_path_factory(out) if cfg.dump_paths else None
    try:
        res = solvers.two_solution_run(L, grid, cfg.solver, force=True, reports=reports, on_sweep=on_sweep)
    except NumericalFailure as exc:
        trace = exc.trace if exc.trace is not None else []
        report["status"] = "solver-failure"
        report["error"] = {"type": type(exc).__name__, "message": str(exc),
                           "stage": getattr(exc, "stage", None), "trace": [list(p) for p in trace]}
        path = out / "solve_report.json"
        write_json(path, report)
        print(f"solver failure: {exc}; trace written to {path}", file=sys.stderr)
        return EXIT_SOLVER

    for tag, cp in (("u1", res.u1), ("u2", res.u2)):
        meta = _base_meta(cfg, "solve") | {"kind": cp.kind, "value": repr(cp.value), "residual": repr(cp.residual)}
        write_table(out / f"{tag}.csv", *function_csv(cp.u, meta))
    report.update({
        "status": "two-distinct-solutions" if res.distinct else "not-certified",
        "c1": res.u1.value, "c2": res.u2.value,
        "certificate": res.certificate,
        "boundary_estimate": res.boundary_estimate,
        "e1": res.e1.values[0].tolist(),
        "mountain_pass": res.u1.to_dict(),
        "omega_minimizer": res.u2.to_dict(),
        "residual_norm_kind": "sqrt(sum_i |g_i|^2 / h), a stand-in for the dual Sobolev norm",
    })
    write_json(out / "solve_report.json", report)
    print(f"c1 = {res.u1.value:.10g} (residual {res.u1.residual:.3g})")
    print(f"c2 = {res.u2.value:.10g} (residual {res.u2.residual:.3g}, Phi = {res.u2.details['phi']:.3g})")
    print(f"separation = {res.certificate['separation_sobolev']:.6g}; {report['status']}; {report['hypotheses']}")
    return EXIT_OK if res.distinct else EXIT_SOLVER


SCAN_TARGETS = ("h1", "h2", "regions", "boundary")


def cmd_scan(cfg: ProblemConfig, out: Path, target: str) -> int:
    L = cfg.lagrangian()
    ck = cfg.checks
    meta = _base_meta(cfg, f"scan {target}")
    if target in ("h1", "h2"):
        tab = lg.scan_h(L, target, ck.scan_box, ck.scan_resolution)
        meta |= {"max_value": repr(tab.max_value), "argmax": tab.argmax, "C_inf": repr(tab.meta["C_inf"])}
        # flag "+" marks points where h is positive
        rows = [[float(a), float(b), float(tab.values[i, j]), "+" if tab.values[i, j] > 0 else ""]
                for i, b in enumerate(tab.x2) for j, a in enumerate(tab.x1)]
        write_table(out / f"{target}.csv", meta, ["x1", "x2", "value", "flags"], rows)
        print(f"max {target} = {tab.max_value:.6g} at {tab.argmax}")
    elif target == "regions":
        tab = lg.region_scan(L, ck.scan_box, ck.scan_resolution)
        c_not_a = int(np.sum(tab.in_C & ~tab.in_A))
        meta |= {"r0": repr(tab.r0), "C_points": int(tab.in_C.sum()), "C_points_outside_A": c_not_a}
        rows = []
        for i, b in enumerate(tab.x2):
            for j, a in enumerate(tab.x1):
                flags = "".join(s for s, m in (("A", tab.in_A), ("C", tab.in_C), ("B", tab.in_B)) if m[i, j])
                rows.append([float(a), float(b), float(tab.margin_A[i, j]), flags])
        write_table(out / "regions.csv", meta, ["x1", "x2", "value", "flags"], rows)
        print(f"C points: {int(tab.in_C.sum())}, outside A: {c_not_a}")
    elif target == "boundary":
        grid = make_grid(L.T, cfg.n)
        values, pts = solvers.boundary_values(L, grid, L.constants.rho,
                                              cfg.solver.boundary_directions, cfg.seed)
        meta |= {"rho": repr(L.constants.rho), "min_value": repr(float(values.min())),
                 "all_positive": bool(np.all(values > 0))}
        rows = [[k, float(v), float(phi(L.g_fun, p))] for k, (v, p) in enumerate(zip(values, pts))]
        write_table(out / "boundary.csv", meta, ["direction", "value", "phi"], rows)
        print(f"min J on the boundary sample = {values.min():.6g}")
    else:
        raise ConfigError(f"unknown scan target {target!r}")
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="path to the run configuration")
    common.add_argument("--out", help="output directory (overrides [output] dir)")
    common.add_argument("--seed", type=int, help="random seed (overrides [problem] seed)")
    common.add_argument("--grid-n", type=int, help="number of grid nodes (overrides [grid] n)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="aniso-el", description="Periodic solutions of anisotropic Euler-Lagrange systems")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="run the hypothesis checkers")
    solve = sub.add_parser("solve", parents=[common], help="compute the two critical points")
    solve.add_argument("--force", action="store_true", help="solve even if required checks fail")
    scan = sub.add_parser("scan", parents=[common], help="write planar scan tables")
    scan.add_argument("target", choices=SCAN_TARGETS)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be nonnegative")
            cfg.seed = args.seed
            cfg.solver = dataclasses.replace(cfg.solver, seed=args.seed)
        if args.grid_n is not None:
            cfg.n = args.grid_n
            make_grid(cfg.lagrangian().T, cfg.n)
        if args.out is not None:
            cfg.out = args.out
    except InputError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(cfg.out)
    start = time.perf_counter()
    try:
        if args.command == "check":
            code = cmd_check(cfg, out)
        elif args.command == "solve":
            code = cmd_solve(cfg, out, args.force)
        else:
            code = cmd_scan(cfg, out, args.target)
    except HypothesisFailure as exc:
        print(f"hypothesis failure: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except InputError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    # timing lives beside the report so the report itself stays byte-identical
    write_json(out / f"timing_{args.command}.json",
               {"seconds": round(time.perf_counter() - start, 3), "exit_code": code})
    atomic_write(out / "config_echo.ini", render_config(cfg))
    return code


if __name__ == "__main__":
    sys.exit(main())
