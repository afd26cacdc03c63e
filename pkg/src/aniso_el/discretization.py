"""Uniform periodic grids on I = [-T, T] and nodal functions on them.

The forward difference and the rectangle rule are paired on purpose: summation
by parts is then exact, so the gradient of any discrete functional built from
them is exact as well.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError
from .gfunction import GFunction


@dataclass(frozen=True)
class Grid:
    T: float
    n: int

    def __post_init__(self):
        if 2 * self.T < 1:
            raise DomainError(f"|I| = {2 * self.T} < 1; the interval must have length at least 1")
        if self.n < 4 or self.n % 2:
            raise InputError(f"grid needs an even number of nodes >= 4, got {self.n}")

    @property
    def length(self) -> float:
        return 2.0 * self.T

    @property
    def h(self) -> float:
        return self.length / self.n

    @property
    def nodes(self) -> np.ndarray:
        return -self.T + self.h * np.arange(self.n)


def make_grid(T: float, n: int) -> Grid:
    return Grid(float(T), int(n))


class DiscreteFunction:
    """Nodal values (n x dim) of a periodic function; node n is node 0."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        v = np.array(values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != grid.n:
            raise InputError(f"values must have shape ({grid.n}, dim), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InputError("discrete function has non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", v)

    def __setattr__(self, key, value):
        raise AttributeError("DiscreteFunction is immutable")

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_callable(cls, grid: Grid, fn):
        return cls(grid, np.asarray(fn(grid.nodes), dtype=float))

    @classmethod
    def zeros(cls, grid: Grid, dim: int):
        return cls(grid, np.zeros((grid.n, dim)))

    @classmethod
    def constant(cls, grid: Grid, vector):
        vec = np.asarray(vector, dtype=float)
        return cls(grid, np.tile(vec, (grid.n, 1)))

    def _coerce(self, other):
        if isinstance(other, DiscreteFunction):
            if other.grid != self.grid:
                raise InputError("discrete functions live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return DiscreteFunction(self.grid, self.values + self._coerce(other))

    def __sub__(self, other):
        return DiscreteFunction(self.grid, self.values - self._coerce(other))

    def __mul__(self, c):
        return DiscreteFunction(self.grid, self.values * float(c))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return DiscreteFunction(self.grid, self.values / float(c))

    def __neg__(self):
        return DiscreteFunction(self.grid, -self.values)

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def sup_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.values, axis=1)))

    def __repr__(self):
        return f"DiscreteFunction(n={self.grid.n}, dim={self.dim}, T={self.grid.T})"


def derivative(u: DiscreteFunction) -> DiscreteFunction:
    """Forward difference with periodic wrap: (u_{i+1} - u_i) / h."""
    return DiscreteFunction(u.grid, (np.roll(u.values, -1, axis=0) - u.values) / u.grid.h)


def integrate(grid: Grid, node_values) -> float:
    """Periodic trapezoid (= rectangle) rule: h * sum of nodal values."""
    vals = np.asarray(node_values, dtype=float)
    if vals.shape[0] != grid.n:
        raise InputError(f"expected {grid.n} nodal values, got {vals.shape[0]}")
    return float(grid.h * vals.sum(axis=0)) if vals.ndim == 1 else grid.h * vals.sum(axis=0)


def phi(g: GFunction, u: DiscreteFunction) -> float:
    """Phi(u) = int G(u') + G(u) dt."""
    if u.dim != g.dim:
        raise InputError(f"function dimension {u.dim} != G dimension {g.dim}")
    du = derivative(u).values
    return integrate(u.grid, g.value(du) + g.value(u.values))


def project_to_boundary(g: GFunction, u: DiscreteFunction, rho: float,
                        tol: float = 1e-10) -> DiscreteFunction:
    """Scale u along its ray so that Phi(s u) = rho.

    s -> Phi(s u) is convex, vanishes at 0 and increases strictly, so the
    crossing is unique.
    """
    if rho <= 0:
        raise InputError("rho must be positive")
    if u.is_zero():
        raise InputError("cannot project the zero function: its ray never meets the boundary")
    f = lambda s: phi(g, u * s) - rho
    lo, hi = 0.0, 1.0
    while f(hi) < 0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise InputError("Phi does not reach rho along this ray")
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        val = f(mid)
        if abs(val) <= tol:
            return u * mid
        if val < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            break
    s = 0.5 * (lo + hi)
    return u * s


# --------------------------------------------------------------------------
# CSV serialisation: columns t, u_1..u_N


def write_csv(u: DiscreteFunction, path, header_lines=()):
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"u_{k + 1}" for k in range(u.dim)])
        for t, row in zip(u.grid.nodes, u.values):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in row])


def read_csv(path) -> DiscreteFunction:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    header, body = rows[0], rows[1:]
    if header[0] != "t" or len(header) < 2:
        raise InputError(f"{path}: expected header 't,u_1,...'")
    data = np.array(body, dtype=float)
    t = data[:, 0]
    n = len(t)
    T = -t[0]
    grid = make_grid(T, n)
    if not np.allclose(t, grid.nodes, rtol=0, atol=1e-9 * max(1.0, T)):
        raise InputError(f"{path}: t column is not a uniform periodic grid on [-T, T)")
    return DiscreteFunction(grid, data[:, 1:])
