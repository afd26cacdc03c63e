"""Run configuration: a sectioned key/value file read with configparser.

Example::

    [problem]
    name = example5
    seed = 0

    [grid]
    n = 64

    [solver]
    tol = 1e-4

    [constants]
    rho = 0.004
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field

from . import lagrangian as lg
from .errors import InputError
from .solvers import SolverParams


class ConfigError(InputError):
    pass


@dataclass
class CheckParams:
    samples: int = 10_000
    box: float = 10.0
    ray_samples: int = 256
    legacy_r0_points: int = 100
    legacy_r0_max: float = 10.0
    scan_box: tuple = (-3.0, 3.0, -3.0, 3.0)
    scan_resolution: int = 400


@dataclass
class ProblemConfig:
    problem: str
    seed: int
    T: float | None = None
    n: int = 64
    solver: SolverParams = field(default_factory=SolverParams)
    checks: CheckParams = field(default_factory=CheckParams)
    constants: dict = field(default_factory=dict)
    forcing_scale: float = 1.0
    g: float | None = None
    out: str = "out"
    dump_paths: bool = False

    def lagrangian(self) -> lg.Lagrangian:
        L = lg.problem(self.problem)
        if self.T is not None:
            L = L.replace(T=self.T)
        if self.constants:
            L = L.with_constants(**self.constants)
        if self.forcing_scale != 1.0:
            L = lg.scaled_forcing(L, self.forcing_scale)
        if self.g is not None:
            L = lg.constant_envelope(L, self.g)
        return L

    def echo(self) -> dict:
        """Sections and keys that reproduce this configuration when written back."""
        solver = dataclasses.asdict(self.solver)
        solver.pop("seed")
        checks = dataclasses.asdict(self.checks)
        checks["scan_box"] = ",".join(repr(float(v)) for v in self.checks.scan_box)
        out = {
            "problem": {"name": self.problem, "seed": self.seed},
            "grid": {"n": self.n},
            "solver": solver,
            "checks": checks,
            "constants": dict(self.constants),
            "output": {"dir": self.out, "dump_paths": self.dump_paths},
        }
        if self.T is not None:
            out["grid"]["T"] = self.T
        if self.forcing_scale != 1.0:
            out["constants"]["forcing_scale"] = self.forcing_scale
        if self.g is not None:
            out["constants"]["g"] = self.g
        return out


_CONSTANT_KEYS = {f.name for f in dataclasses.fields(lg.Constants)}
_SOLVER_TYPES = {f.name: f.type for f in dataclasses.fields(SolverParams) if f.name != "seed"}
_CHECK_TYPES = {f.name: f.type for f in dataclasses.fields(CheckParams)}
_SECTIONS = {"problem", "grid", "solver", "checks", "constants", "output"}


def _convert(section, key, raw, kind):
    try:
        if kind in ("int", int):
            return int(raw)
        if kind in ("float", float):
            return float(raw)
        if kind in ("bool", bool):
            low = raw.strip().lower()
            if low not in ("true", "false", "yes", "no", "1", "0"):
                raise ValueError(raw)
            return low in ("true", "yes", "1")
        if kind in ("tuple", tuple):
            vals = tuple(float(v) for v in raw.split(","))
            if len(vals) != 4:
                raise ValueError(raw)
            return vals
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} as {kind}") from None
    return raw


def _reject_unknown(section, keys, allowed):
    extra = sorted(set(keys) - set(allowed))
    if extra:
        raise ConfigError(f"[{section}] unknown keys: {', '.join(extra)}")


def parse_config(text: str) -> ProblemConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    unknown = set(cp.sections()) - _SECTIONS
    if unknown:
        raise ConfigError(f"unknown sections: {', '.join(sorted(unknown))}")
    if not cp.has_section("problem"):
        raise ConfigError("missing [problem] section")

    prob = cp["problem"]
    _reject_unknown("problem", prob.keys(), {"name", "seed"})
    if "name" not in prob:
        raise ConfigError("[problem] name is required")
    if "seed" not in prob:
        raise ConfigError("[problem] seed is required for reproducibility")
    name = prob["name"].strip()
    if name not in lg.PROBLEMS:
        raise ConfigError(f"unknown problem {name!r}; choose from {', '.join(sorted(lg.PROBLEMS))}")
    seed = _convert("problem", "seed", prob["seed"], int)
    if seed < 0:
        raise ConfigError("[problem] seed must be nonnegative")
    cfg = ProblemConfig(problem=name, seed=seed)

    if cp.has_section("grid"):
        sec = cp["grid"]
        _reject_unknown("grid", sec.keys(), {"T", "n"})
        if "T" in sec:
            cfg.T = _convert("grid", "T", sec["T"], float)
        if "n" in sec:
            cfg.n = _convert("grid", "n", sec["n"], int)

    solver = {}
    if cp.has_section("solver"):
        sec = cp["solver"]
        _reject_unknown("solver", sec.keys(), _SOLVER_TYPES)
        solver = {k: _convert("solver", k, v, _SOLVER_TYPES[k]) for k, v in sec.items()}
    cfg.solver = SolverParams(**solver, seed=seed)

    if cp.has_section("checks"):
        sec = cp["checks"]
        _reject_unknown("checks", sec.keys(), _CHECK_TYPES)
        cfg.checks = CheckParams(**{k: _convert("checks", k, v, _CHECK_TYPES[k]) for k, v in sec.items()})

    if cp.has_section("constants"):
        sec = cp["constants"]
        _reject_unknown("constants", sec.keys(), _CONSTANT_KEYS | {"g", "forcing_scale"})
        for k, v in sec.items():
            val = _convert("constants", k, v, float)
            if k == "g":
                cfg.g = val
            elif k == "forcing_scale":
                cfg.forcing_scale = val
            else:
                cfg.constants[k] = val

    if cp.has_section("output"):
        sec = cp["output"]
        _reject_unknown("output", sec.keys(), {"dir", "dump_paths"})
        cfg.out = sec.get("dir", cfg.out)
        if "dump_paths" in sec:
            cfg.dump_paths = _convert("output", "dump_paths", sec["dump_paths"], bool)

    # surface invalid constants or grids now rather than mid-run
    cfg.lagrangian()
    from .discretization import make_grid
    make_grid(cfg.lagrangian().T, cfg.n)
    return cfg


def load_config(path) -> ProblemConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def render_config(cfg: ProblemConfig) -> str:
    lines = []
    for section, items in cfg.echo().items():
        if not items:
            continue
        lines.append(f"[{section}]")
        for k, v in items.items():
            lines.append(f"{k} = {str(v).lower() if isinstance(v, bool) else v}")
        lines.append("")
    return "\n".join(lines)
