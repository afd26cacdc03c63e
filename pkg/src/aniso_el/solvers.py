"""Numerical mountain pass and constrained minimisation for the discrete action.

Both solvers measure steps in the discrete W^{1,2} inner product
<a, b>_P = h * sum(a.b + Da.Db), i.e. they follow Sobolev gradients
P^{-1} grad J. P is circulant, so it is applied with an FFT.

The mountain-pass solver runs in two stages:

1. string sweeps: every interior node of a path from e0 to e1 descends along
   the component of the Sobolev gradient normal to the path, then the nodes
   are re-spaced by arc length. The highest energy on the path never rises.
2. polish: the highest node climbs along the lowest-curvature mode and
   descends along all others until the gradient residual meets the tolerance.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from . import lagrangian as lg
from .discretization import DiscreteFunction, Grid, phi, project_to_boundary
from .errors import (BoundaryTrap, HypothesisFailure, InputError, NonConvergence,
                     NumericalFailure, SearchFailure)
from .functional import action, gradient_values, residual_norm
from .orlicz import sobolev_norm

log = logging.getLogger(__name__)


@dataclass
class SolverParams:
    path_nodes: int = 17
    tol: float = 1e-4
    max_iter: int = 50_000
    starts: int = 8
    sep_tol: float = 1e-3
    armijo: float = 1e-4
    step0: float = 1.0
    stall_sweeps: int = 50
    stall_tol: float = 1e-14
    max_move: float = 0.25
    handoff_drop: float = 1e-3
    sweep_budget: int = 500
    polish_max_iter: int = 5_000
    mode_refresh: int = 10
    boundary_directions: int = 200
    seed: int = 0


@dataclass
class CriticalPoint:
    u: DiscreteFunction
    value: float
    residual: float
    kind: str  # "mountain_pass" | "omega_minimizer"
    iterations: int
    trace: list = field(default_factory=list)  # (value, residual) pairs
    details: dict = field(default_factory=dict)

    def to_dict(self, include_values: bool = True) -> dict:
        out = {
            "kind": self.kind,
            "value": self.value,
            "residual": self.residual,
            "iterations": self.iterations,
            "trace_length": len(self.trace),
            "trace_tail": [list(p) for p in self.trace[-20:]],
            "details": self.details,
        }
        if include_values:
            out["t"] = self.u.grid.nodes.tolist()
            out["u"] = self.u.values.tolist()
        return out


@dataclass
class PathState:
    nodes: list  # DiscreteFunction per path node, from e0 to the current endpoint
    energies: np.ndarray

    @property
    def top(self) -> int:
        return int(np.argmax(self.energies[1:-1])) + 1


# --------------------------------------------------------------------------
# Sobolev metric


class SobolevMetric:
    """The circulant operator P = h (I + D^T D) on nodal arrays of shape (n, N)."""

    def __init__(self, grid: Grid):
        n, h = grid.n, grid.h
        k = np.arange(n)
        self.h = h
        self.eig = h * (1.0 + (2.0 - 2.0 * np.cos(2 * np.pi * k / n)) / h**2)

    def _apply(self, X, power):
        Xf = np.fft.fft(X, axis=0)
        return np.fft.ifft(Xf * (self.eig**power)[:, None], axis=0).real

    def apply(self, X):
        return self._apply(X, 1.0)

    def solve(self, X):
        return self._apply(X, -1.0)

    def inv_sqrt(self, X):
        return self._apply(X, -0.5)

    def sqrt(self, X):
        return self._apply(X, 0.5)

    def inner(self, A, B):
        return float(np.sum(A * self.apply(B)))

    def norm(self, A):
        return float(np.sqrt(max(self.inner(A, A), 0.0)))


class _Objective:
    """Array-level access to J and grad J with an evaluation counter."""

    def __init__(self, L: lg.Lagrangian, grid: Grid):
        self.L = L
        self.grid = grid
        self.evals = 0

    def fn(self, X) -> float:
        self.evals += 1
        try:
            return action(self.L, DiscreteFunction(self.grid, X))
        except (NumericalFailure, InputError):
            return np.inf

    def grad(self, X) -> np.ndarray:
        return gradient_values(self.L, DiscreteFunction(self.grid, X))

    def residual(self, G) -> float:
        return residual_norm(G, self.grid.h)


# --------------------------------------------------------------------------
# endpoint search and boundary estimate


def default_psi(grid: Grid, dim: int) -> DiscreteFunction:
    return DiscreteFunction.constant(grid, np.ones(dim) / np.sqrt(dim))


def find_e1(L: lg.Lagrangian, psi: DiscreteFunction, rho: float | None = None,
            lambda_max: float = 2.0**16) -> DiscreteFunction:
    """e = lam * psi with J(e) < 0 and Phi(e) > rho, lam = 1, 2, 4, ..."""
    rho = L.constants.rho if rho is None else rho
    if psi.is_zero():
        raise InputError("psi must be nonzero on a set of positive measure")
    lam = 1.0
    while lam <= lambda_max:
        e = psi * lam
        if action(L, e) < 0 and phi(L.g_fun, e) > rho:
            return e
        lam *= 2.0
    raise SearchFailure(f"no lambda <= {lambda_max:g} gives J(lambda psi) < 0; "
                        "the superlinearity hypotheses may be violated")


def random_directions(grid: Grid, dim: int, count: int, seed: int = 0, modes: int = 4):
    """Random smooth periodic functions: a constant plus low Fourier modes."""
    rng = np.random.default_rng(seed)
    t = grid.nodes
    omega = np.pi / grid.T
    out = []
    for _ in range(count):
        vals = np.tile(rng.normal(size=dim), (grid.n, 1))
        for k in range(1, modes + 1):
            a, b = rng.normal(size=(2, dim)) / (1.0 + k)
            vals = vals + np.outer(np.cos(k * omega * t), a) + np.outer(np.sin(k * omega * t), b)
        out.append(DiscreteFunction(grid, vals))
    return out


def boundary_values(L: lg.Lagrangian, grid: Grid, rho: float | None = None,
                    n_directions: int = 200, seed: int = 0):
    """J on Phi^{-1}(rho) along random smooth directions; returns (values, points)."""
    if n_directions < 1:
        raise InputError("n_directions must be at least 1")
    rho = L.constants.rho if rho is None else rho
    pts = [project_to_boundary(L.g_fun, d, rho) for d in random_directions(grid, L.dim, n_directions, seed)]
    return np.array([action(L, p) for p in pts]), pts


def boundary_infimum(L: lg.Lagrangian, grid: Grid, rho: float | None = None,
                     n_directions: int = 200, seed: int = 0) -> float:
    """Sampled upper estimate of inf J over the boundary of Omega."""
    values, _ = boundary_values(L, grid, rho, n_directions, seed)
    return float(values.min())


# --------------------------------------------------------------------------
# mountain pass


def _armijo(obj, X, fX, G, D, params, min_step=1e-12, max_move=np.inf, metric=None):
    """Backtracking along -D; returns (step, new point, new value) or None.

    With a metric, the first trial step is capped at length max_move.
    """
    slope = float(np.sum(G * D))
    if slope <= 0:
        return None
    a = params.step0
    if metric is not None and np.isfinite(max_move):
        a = min(a, max_move / max(metric.norm(D), 1e-300))
    while a >= min_step:
        Y = X - a * D
        fY = obj.fn(Y)
        if fY <= fX - params.armijo * a * slope:
            return a, Y, fY
        a *= 0.5
    return None


def _respace(path, metric, count=None):
    """Equal arc-length re-spacing by piecewise-linear interpolation."""
    count = len(path) if count is None else count
    seg = np.array([metric.norm(path[i + 1] - path[i]) for i in range(len(path) - 1)])
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] == 0:
        return [p.copy() for p in path]
    target = np.linspace(0.0, s[-1], count)
    out = [path[0].copy()]
    for tgt in target[1:-1]:
        j = min(int(np.searchsorted(s, tgt, side="right")) - 1, len(path) - 2)
        w = (tgt - s[j]) / seg[j] if seg[j] > 0 else 0.0
        out.append((1 - w) * path[j] + w * path[j + 1])
    out.append(path[-1].copy())
    return out


def _tangent(path, j, metric):
    tau = path[j + 1] - path[j - 1]
    nrm = metric.norm(tau)
    return tau / nrm if nrm > 0 else tau


def _min_mode(obj, X, metric, guess):
    """Lowest eigenpair of H v = mu P v via finite-difference Hessian products."""
    shape = X.shape
    size = X.size
    scale = 1e-5 * (1.0 + np.abs(X).max())

    def hess_vec(V):
        nv = np.abs(V).max()
        if nv == 0:
            return np.zeros_like(V)
        eps = scale / nv
        return (obj.grad(X + eps * V) - obj.grad(X - eps * V)) / (2 * eps)

    def matvec(w):
        W = metric.inv_sqrt(np.asarray(w).reshape(shape))
        return metric.inv_sqrt(hess_vec(W)).ravel()

    op = LinearOperator((size, size), matvec=matvec, dtype=float)
    v0 = metric.sqrt(guess).ravel()
    if not np.any(v0):
        v0 = np.ones(size)
    try:
        mu, w = eigsh(op, k=1, which="SA", v0=v0, tol=1e-8, maxiter=500)
    except ArpackNoConvergence as exc:
        if len(exc.eigenvalues) == 0:
            raise NumericalFailure("lowest-mode estimate failed") from exc
        mu, w = exc.eigenvalues, exc.eigenvectors
    V = metric.inv_sqrt(w[:, 0].reshape(shape))
    return float(mu[0]), V / metric.norm(V)


def _dual_sq(G, metric):
    return float(np.sum(G * metric.solve(G)))


def _polish_saddle(obj, X, tangent, metric, params, trace):
    """Climb along the lowest mode, descend along the rest."""
    V = tangent / max(metric.norm(tangent), 1e-300)
    G = obj.grad(X)
    merit = _dual_sq(G, metric)
    mu = np.nan
    failures = 0
    for it in range(params.polish_max_iter):
        res = obj.residual(G)
        trace.append((obj.fn(X), res))
        if res <= params.tol:
            return X, G, it, mu
        if it % params.mode_refresh == 0 or failures:
            mu, V = _min_mode(obj, X, metric, V)
        D = metric.solve(G)
        D = D - 2.0 * float(np.sum(G * V)) * V
        a = params.step0
        accepted = False
        while a >= 1e-10:
            Y = X - a * D
            try:
                GY = obj.grad(Y)
            except (NumericalFailure, InputError):
                a *= 0.5
                continue
            mY = _dual_sq(GY, metric)
            if mY < merit * (1.0 - 1e-4 * a):
                X, G, merit = Y, GY, mY
                accepted = True
                break
            a *= 0.5
        failures = 0 if accepted else failures + 1
        if failures > 3:
            break
    raise NonConvergence(
        f"saddle polish stopped with residual {obj.residual(G):.3g} > tol {params.tol:g}",
        best=X, trace=trace)


def mountain_pass(L: lg.Lagrangian, e0: DiscreteFunction, e1: DiscreteFunction,
                  params: SolverParams | None = None, on_sweep=None) -> CriticalPoint:
    """Minimax over discrete paths from e0 to e1, then saddle polish."""
    params = params or SolverParams()
    if e0.grid != e1.grid:
        raise InputError("endpoints live on different grids")
    if np.array_equal(e0.values, e1.values):
        raise InputError("mountain pass needs distinct endpoints")
    if params.path_nodes < 3:
        raise InputError("path needs at least 3 nodes")
    grid = e0.grid
    obj = _Objective(L, grid)
    metric = SobolevMetric(grid)
    m = params.path_nodes
    path = [e0.values + s * (e1.values - e0.values) for s in np.linspace(0.0, 1.0, m)]
    energies = np.array([obj.fn(p) for p in path])
    end_max = max(energies[0], energies[-1])

    rho = L.constants.rho
    cuts = 0
    trace = []
    history = []
    sweeps = 0
    converged_in_sweeps = False
    for sweeps in range(1, params.max_iter + 1):
        k = int(np.argmax(energies[1:-1])) + 1
        top = energies[k]
        if top <= end_max:
            raise NonConvergence("path maximum fell to the endpoint level; "
                                 "mountain-pass geometry is absent", trace=trace)
        Gk = obj.grad(path[k])
        res_k = obj.residual(Gk)
        trace.append((float(top), res_k))
        history.append(float(top))
        if res_k <= params.tol:
            converged_in_sweeps = True
            break
        # normal descent of every interior node; steps are capped by the node
        # spacing so that no node can hop across the ridge
        spacing = min(metric.norm(path[i + 1] - path[i]) for i in range(m - 1))
        new_path = [path[0]]
        new_E = [energies[0]]
        for j in range(1, m - 1):
            G = Gk if j == k else obj.grad(path[j])
            D = metric.solve(G)
            tau = _tangent(path, j, metric)
            D = D - float(np.sum(G * tau)) * tau
            step = _armijo(obj, path[j], energies[j], G, D, params,
                           max_move=params.max_move * spacing, metric=metric)
            if step is None:
                new_path.append(path[j])
                new_E.append(energies[j])
            else:
                new_path.append(step[1])
                new_E.append(step[2])
        new_path.append(path[-1])
        new_E.append(energies[-1])
        new_E = np.array(new_E)
        # cut the path at the first node past the top that already lies in
        # {Phi > rho, J < J(e0)}: it is a valid endpoint and keeps the nodes
        # from drifting off into the region where J is unbounded below
        top_j = int(np.argmax(new_E[1:-1])) + 1
        cut = len(new_path) - 1
        for j in range(top_j + 1, len(new_path) - 1):
            if new_E[j] < energies[0] and phi(L.g_fun, DiscreteFunction(grid, new_path[j])) > rho:
                cut = j
                break
        respaced = _respace(new_path[:cut + 1], metric, m)
        resp_E = np.array([obj.fn(p) for p in respaced])
        if resp_E[1:-1].max() <= new_E[1:-1].max():
            path, energies = respaced, resp_E
            cuts += cut < len(new_path) - 1
        else:
            path, energies = new_path, new_E
        assert energies[1:-1].max() <= top + 1e-12 * (1 + abs(top)), "path maximum increased"
        if on_sweep is not None:
            on_sweep(sweeps, PathState([DiscreteFunction(grid, p) for p in path], energies.copy()))
        if sweeps >= params.sweep_budget:
            break
        if len(history) > params.stall_sweeps:
            drop = history[-params.stall_sweeps - 1] - history[-1]
            if drop < max(params.stall_tol, params.handoff_drop) * (1 + abs(history[-1])):
                break

    k = int(np.argmax(energies[1:-1])) + 1
    polish_iters = 0
    mu = None
    if converged_in_sweeps:
        X = path[k]
        G = obj.grad(X)
    else:
        X, G, polish_iters, mu = _polish_saddle(obj, path[k], _tangent(path, k, metric),
                                                metric, params, trace)
    value = obj.fn(X)
    res = obj.residual(G)
    if not value > end_max:
        raise NonConvergence(f"critical value {value:.6g} does not exceed endpoint level {end_max:.6g}",
                             best=X, trace=trace)
    return CriticalPoint(
        DiscreteFunction(grid, X), float(value), res, "mountain_pass", sweeps + polish_iters, trace,
        {"sweeps": sweeps, "polish_iterations": polish_iters, "endpoint_cuts": cuts, "path_max_history_tail": history[-5:],
         "lowest_mode_curvature": mu, "endpoint_values": [float(energies[0]), float(energies[-1])],
         "function_evaluations": obj.evals, "phi": phi(L.g_fun, DiscreteFunction(grid, X))},
    )


# --------------------------------------------------------------------------
# minimisation over the closed sublevel set


def _starts(L, grid, rho, count, seed):
    psi = default_psi(grid, L.dim)
    rand = random_directions(grid, L.dim, count, seed + 17)
    levels = [1e-1, 1e-4, 1e-7, 0.5, 1e-2, 1e-5, 1e-8]
    out = [DiscreteFunction.zeros(grid, L.dim)]
    for i, lev in enumerate(levels):
        base = psi if i < 3 else rand[i]
        out.append(project_to_boundary(L.g_fun, base, lev * rho))
    i = len(levels)
    while len(out) < count:
        out.append(project_to_boundary(L.g_fun, rand[i % len(rand)], 10.0 ** (-(i % 8)) * rho))
        i += 1
    return out[:count]


def _descend_in_omega(obj, metric, L, X, rho, params):
    g = L.g_fun
    grid = obj.grid
    fX = obj.fn(X)
    G = obj.grad(X)
    values = [fX]
    steps = []
    it = 0
    inner_tol = params.tol * 1e-4
    for it in range(1, params.max_iter + 1):
        if obj.residual(G) <= inner_tol:
            break
        D = metric.solve(G)
        a = params.step0
        accepted = None
        while a >= 1e-12:
            Y = X - a * D
            if phi(g, DiscreteFunction(grid, Y)) > rho:
                Y = project_to_boundary(g, DiscreteFunction(grid, Y), rho).values
            fY = obj.fn(Y)
            if fY <= fX - params.armijo * float(np.sum(G * (X - Y))) and fY < fX:
                accepted = (Y, fY)
                break
            a *= 0.5
        if accepted is None:
            break
        steps.append(metric.norm(accepted[0] - X))
        X, fX = accepted
        G = obj.grad(X)
        values.append(fX)
    return X, fX, G, it, values, steps


def ekeland_trace(values, steps):
    """Per-step slope (J_{n+1} - J_n)/|step| against -sqrt(eps_n)."""
    values = np.asarray(values, dtype=float)
    final = values[-1]
    rows = []
    for n, st in enumerate(steps):
        gap = values[n] - final
        eps_n = gap if gap > 0 else 1.0 / (n + 1)
        slope = (values[n + 1] - values[n]) / st if st > 0 else 0.0
        rows.append((float(eps_n), float(slope), bool(slope >= -np.sqrt(eps_n))))
    return rows


def minimize_in_omega(L: lg.Lagrangian, grid: Grid, rho: float | None = None,
                      params: SolverParams | None = None) -> CriticalPoint:
    """Multi-start projected Sobolev-gradient descent on the closure of Omega."""
    params = params or SolverParams()
    rho = L.constants.rho if rho is None else rho
    if rho <= 0:
        raise InputError("rho must be positive")
    obj = _Objective(L, grid)
    metric = SobolevMetric(grid)
    results = []
    for idx, start in enumerate(_starts(L, grid, rho, params.starts, params.seed)):
        X, fX, G, iters, values, steps = _descend_in_omega(obj, metric, L, start.values, rho, params)
        u = DiscreteFunction(grid, X)
        results.append({
            "start": idx, "u": u, "value": float(fX), "residual": obj.residual(G),
            "phi": phi(L.g_fun, u), "iterations": iters, "values": values, "steps": steps,
        })

    interior = [r for r in results if r["phi"] < rho * (1 - 1e-9)]
    if not interior:
        raise BoundaryTrap("every start ended on the boundary of Omega",
                           best=[r["u"] for r in results])
    interior.sort(key=lambda r: (r["value"], r["residual"], tuple(r["u"].values.ravel())))
    best = interior[0]
    if best["residual"] > params.tol:
        raise NonConvergence(f"best interior point has residual {best['residual']:.3g} > tol",
                             best=best["u"])
    ek = ekeland_trace(best["values"], best["steps"])
    trace = [(v, np.nan) for v in best["values"]]
    trace[-1] = (best["value"], best["residual"])
    return CriticalPoint(
        best["u"], best["value"], best["residual"], "omega_minimizer", best["iterations"], trace,
        {"phi": best["phi"], "interior_margin": rho - best["phi"], "rho": rho,
         "start_index": best["start"],
         "starts": [{k: r[k] for k in ("start", "value", "residual", "phi", "iterations")} for r in results],
         "ekeland_slope_ok_fraction": float(np.mean([r[2] for r in ek])) if ek else 1.0,
         "ekeland_tail": ek[-5:],
         "values_nonincreasing": bool(np.all(np.diff(best["values"]) <= 0))},
    )


# --------------------------------------------------------------------------
# the two-solution driver


REQUIRED_ALWAYS = ("F1", "F3", "F4", "F5", "V1", "V2", "V3", "V4", "f")
REQUIRED_UNFORCED = ("F6", "V5")


def required_check_names(L: lg.Lagrangian) -> tuple:
    return REQUIRED_ALWAYS + (REQUIRED_UNFORCED if L.forcing_is_zero() else ())


def hypothesis_reports(L: lg.Lagrangian, samples: int = 10_000, seed: int = 0, box: float = 10.0):
    cloud = lg.sample_cloud(L, samples, seed, box)
    return lg.check_F(L, cloud) + lg.check_V(L, cloud) + [lg.check_forcing(L)]


@dataclass
class TwoSolutionResult:
    u1: CriticalPoint
    u2: CriticalPoint
    e1: DiscreteFunction
    boundary_estimate: float
    certificate: dict
    hypotheses_verified: bool
    reports: list

    @property
    def distinct(self) -> bool:
        return bool(self.certificate["distinct"])


def _tag(stage, exc):
    exc.stage = stage
    exc.args = (f"[{stage}] {exc.args[0] if exc.args else ''}",) + exc.args[1:]
    return exc


def two_solution_run(L: lg.Lagrangian, grid: Grid, params: SolverParams | None = None,
                     force: bool = False, reports=None, psi: DiscreteFunction | None = None,
                     on_sweep=None) -> TwoSolutionResult:
    params = params or SolverParams()
    if reports is None:
        reports = hypothesis_reports(L, seed=params.seed)
    needed = set(required_check_names(L))
    failing = [r for r in reports if r.name in needed and r.failed]
    if failing and not force:
        raise HypothesisFailure("required hypotheses fail: " + ", ".join(r.name for r in failing), failing)
    rho = L.constants.rho
    zero = DiscreteFunction.zeros(grid, L.dim)
    psi = psi or default_psi(grid, L.dim)
    unforced = L.forcing_is_zero()

    try:
        e1 = find_e1(L, psi, rho)
    except NumericalFailure as exc:
        raise _tag("find_e1", exc)
    try:
        b_est = boundary_infimum(L, grid, rho, params.boundary_directions, params.seed)
    except NumericalFailure as exc:
        raise _tag("boundary_infimum", exc)
    try:
        u1 = mountain_pass(L, zero, e1, params, on_sweep)
    except NumericalFailure as exc:
        raise _tag("mountain_pass", exc)
    try:
        u2 = minimize_in_omega(L, grid, rho, params)
    except NumericalFailure as exc:
        raise _tag("minimize_in_omega", exc)

    sep = sobolev_norm(L.g_fun, u1.u - u2.u)
    c1, c2 = u1.value, u2.value
    order_ok = c1 > 0 and (c2 < 0 if unforced else c2 <= 0)
    cert = {
        "c1": c1, "c2": c2, "gap": c1 - c2, "separation_sobolev": sep,
        "value_order_ok": bool(order_ok), "separated": bool(sep > params.sep_tol),
        "geometry_ok": bool(b_est > max(action(L, zero), action(L, e1))),
        "u2_nontrivial": bool(not u2.u.is_zero() and (c2 < 0 if unforced else True)),
        "forcing_zero": unforced,
    }
    cert["distinct"] = bool(order_ok and cert["separated"])
    return TwoSolutionResult(u1, u2, e1, b_est, cert, not failing, reports)
