"""Anisotropic G-functions: evaluation, gradient, Fenchel conjugate, growth
certificates and the greatest convex radial minorant.

A G-function here is convex, even, superlinear and vanishes at the origin.
All callables are vectorised over leading axes: ``value`` maps ``(..., N)`` to
``(...)`` and ``gradient`` maps ``(..., N)`` to ``(..., N)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InputError, NumericalFailure, RangeError
from .reports import CheckReport, Status

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 100
SEED_POINTS_PER_AXIS = 41
DELTA2_THRESHOLD = 1.0


@dataclass(frozen=True)
class GFunction:
    dim: int
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray] | None = None
    hessian: Callable[[np.ndarray], np.ndarray] | None = None
    analytic_conjugate: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = "custom"

    def __call__(self, x):
        return eval_g(self, x)


def _check_dim(g, x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != g.dim:
        raise InputError(f"expected trailing dimension {g.dim}, got shape {x.shape}")
    return x


def eval_g(g: GFunction, x) -> np.ndarray | float:
    x = _check_dim(g, x)
    out = g.value(x)
    return float(out) if np.ndim(out) == 0 else out


def grad_g(g: GFunction, x) -> np.ndarray:
    x = _check_dim(g, x)
    if g.gradient is None:
        raise InputError(f"G-function {g.name!r} has no gradient")
    return g.gradient(x)


# --------------------------------------------------------------------------
# built-in G-functions


def quadratic(matrix, name="quadratic") -> GFunction:
    """G(x) = <x, A x> for a symmetric positive definite A."""
    A = np.array(matrix, dtype=float)
    A = 0.5 * (A + A.T)
    if np.linalg.eigvalsh(A).min() <= 0:
        raise InputError("quadratic G-function needs a positive definite matrix")
    Ainv = np.linalg.inv(A)
    n = A.shape[0]

    def value(x):
        return np.einsum("...i,ij,...j->...", x, A, x)

    def gradient(x):
        return 2.0 * x @ A

    def hessian(x):
        return np.broadcast_to(2.0 * A, x.shape[:-1] + (n, n))

    def conj(y):
        # sup_x <x,y> - x'Ax is attained at x = A^{-1} y / 2
        return 0.25 * np.einsum("...i,ij,...j->...", y, Ainv, y)

    return GFunction(n, value, gradient, hessian, conj, name)


def example5() -> GFunction:
    """G(v) = v1^2 + (v1 - v2)^2 on R^2."""
    return quadratic([[2.0, -1.0], [-1.0, 1.0]], name="example5")


def pnorm(p: float, dim: int = 2) -> GFunction:
    """G(x) = |x|^p (Euclidean norm), p > 1."""
    if p <= 1:
        raise InputError("pnorm needs p > 1")
    q = p / (p - 1.0)

    def value(x):
        return np.linalg.norm(x, axis=-1) ** p

    def gradient(x):
        r = np.linalg.norm(x, axis=-1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(r > 0, p * r ** (p - 2.0), 0.0)
        return scale * x

    def hessian(x):
        r = np.linalg.norm(x, axis=-1)[..., None, None]
        eye = np.eye(x.shape[-1])
        outer = x[..., :, None] * x[..., None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            H = p * r ** (p - 2.0) * (eye + (p - 2.0) * outer / r**2)
        return np.where(r > 0, H, 0.0)

    def conj(y):
        return (p - 1.0) * (np.linalg.norm(y, axis=-1) / p) ** q

    return GFunction(dim, value, gradient, hessian, conj, f"pnorm({p:g})")


def from_name(name: str, **params) -> GFunction:
    if name == "example5":
        return example5()
    if name == "pnorm":
        return pnorm(float(params.get("p", 2.0)), int(params.get("dim", 2)))
    raise InputError(f"unknown G-function {name!r}")


# --------------------------------------------------------------------------
# Fenchel conjugate


def _fd_hessian(g, x, step=1e-6):
    n = x.size
    H = np.empty((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = step
        H[:, k] = (g.gradient(x + e) - g.gradient(x - e)) / (2 * step)
    return 0.5 * (H + H.T)


def _seed_points(dim, radius):
    if dim <= 3:
        axis = np.linspace(-radius, radius, SEED_POINTS_PER_AXIS)
        return np.array(list(itertools.product(axis, repeat=dim)))
    rng = np.random.default_rng(0)
    return rng.uniform(-radius, radius, size=(4096, dim))


def _conjugate_newton(g: GFunction, y: np.ndarray) -> float:
    ynorm = float(np.linalg.norm(y))
    if ynorm == 0.0:
        return 0.0
    if g.gradient is None:
        raise InputError("numeric conjugate needs the gradient of G")

    def objective(x):
        return x @ y - g.value(x)

    # coarse seed: best point of a grid over a box scaled by |y|, growing the
    # box while the maximiser sits on its boundary
    radius = max(ynorm, 1.0)
    for _ in range(12):
        pts = _seed_points(g.dim, radius)
        vals = pts @ y - g.value(pts)
        x = pts[int(np.argmax(vals))]
        if np.max(np.abs(x)) < radius * (1 - 1e-9):
            break
        radius *= 4.0
    best = float(objective(x))

    tol = NEWTON_TOL * max(1.0, ynorm)
    for _ in range(NEWTON_MAX_ITER):
        r = y - g.gradient(x)
        if np.linalg.norm(r) <= tol:
            return float(objective(x))
        H = g.hessian(x) if g.hessian is not None else _fd_hessian(g, x)
        try:
            step = np.linalg.solve(H, r)
        except np.linalg.LinAlgError:
            step = r
        f0 = objective(x)
        t = 1.0
        while t > 1e-12 and objective(x + t * step) < f0 - 1e-15 * abs(f0):
            t *= 0.5
        x = x + t * step
        best = max(best, float(objective(x)))
    r = y - g.gradient(x)
    if np.linalg.norm(r) <= 1e3 * tol:
        return float(objective(x))
    raise NumericalFailure(
        f"conjugate Newton did not converge at y={y.tolist()} (residual {np.linalg.norm(r):.3g})",
        best=best,
    )


def conjugate(g: GFunction, y, method: str = "auto"):
    """G*(y) = sup_x <x,y> - G(x).

    ``method`` is ``"auto"`` (analytic when available), ``"analytic"`` or
    ``"numeric"`` (damped Newton on grad G(x) = y).
    """
    y = _check_dim(g, y)
    if method not in ("auto", "analytic", "numeric"):
        raise InputError(f"unknown conjugate method {method!r}")
    if method != "numeric" and g.analytic_conjugate is not None:
        out = g.analytic_conjugate(y)
        return float(out) if np.ndim(out) == 0 else out
    if method == "analytic":
        raise InputError(f"G-function {g.name!r} has no analytic conjugate")
    flat = y.reshape(-1, g.dim)
    out = np.array([_conjugate_newton(g, row) for row in flat])
    if y.ndim == 1:
        return float(out[0])
    return out.reshape(y.shape[:-1])


def conjugate_function(g: GFunction, method: str = "auto") -> GFunction:
    """The conjugate as a G-function (value only), e.g. for dual Luxemburg norms."""
    return GFunction(g.dim, lambda y: conjugate(g, y, method), name=f"{g.name}*")


# --------------------------------------------------------------------------
# growth conditions


def default_ray_samples(dim, n=256, r_min=1.0, r_max=100.0, seed=0):
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(n, dim))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = np.exp(rng.uniform(np.log(r_min), np.log(r_max), size=n))
    return d * r[:, None]


def _doubling_report(name, values, samples, radius_threshold, ratio_cap):
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2 or len(x) == 0:
        return CheckReport(name, Status.INCONCLUSIVE, float("nan"), None, 0,
                           {"threshold": radius_threshold}, "empty sample set")
    keep = np.linalg.norm(x, axis=1) >= radius_threshold
    x = x[keep]
    if len(x) == 0:
        return CheckReport(name, Status.INCONCLUSIVE, float("nan"), None, 0,
                           {"threshold": radius_threshold},
                           "no samples at or beyond the threshold radius")
    num = values(2.0 * x)
    den = values(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(den > 0, num / den, np.inf)
    i = int(np.argmax(ratios))
    k_hat = float(ratios[i])
    details = {
        "K_hat": k_hat,
        "threshold": radius_threshold,
        "ratio_cap": ratio_cap,
        "threshold_note": "threshold for 'at infinity' is a configurable choice",
    }
    ok = np.isfinite(k_hat) and k_hat <= ratio_cap
    return CheckReport(name, Status.PASS if ok else Status.FAIL, ratio_cap - k_hat,
                       {"x": x[i].tolist(), "ratio": k_hat}, int(len(x)), details,
                       f"K_hat={k_hat:.6g} (empirical, sampled)")


def check_delta2(g: GFunction, ray_samples=None, radius_threshold=DELTA2_THRESHOLD,
                 ratio_cap=1e6) -> CheckReport:
    """Empirical Delta_2 at infinity: max G(2x)/G(x) over samples with |x| >= threshold."""
    if ray_samples is None:
        ray_samples = default_ray_samples(g.dim)
    return _doubling_report("Delta2", lambda x: eval_g(g, x), ray_samples, radius_threshold, ratio_cap)


def check_nabla2(g: GFunction, ray_samples=None, radius_threshold=DELTA2_THRESHOLD,
                 ratio_cap=1e6, method="auto") -> CheckReport:
    """Empirical nabla_2 at infinity: the doubling ratio of the conjugate G*."""
    if ray_samples is None:
        ray_samples = default_ray_samples(g.dim)
    return _doubling_report("Nabla2", lambda y: np.atleast_1d(conjugate(g, y, method)),
                            ray_samples, radius_threshold, ratio_cap)


# --------------------------------------------------------------------------
# greatest convex minorant of the radial profile


@dataclass(frozen=True)
class ConvexMinorant:
    radii: np.ndarray
    values: np.ndarray
    sampled: np.ndarray  # radial minima before taking the envelope

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        slope = (self.values[-1] - self.values[-2]) / (self.radii[-1] - self.radii[-2])
        out = np.interp(r, self.radii, self.values)
        beyond = r > self.radii[-1]
        return np.where(beyond, self.values[-1] + slope * (r - self.radii[-1]), out)


def sphere_directions(dim, n_sphere, seed=0):
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        ang = 2 * np.pi * np.arange(n_sphere) / n_sphere
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(n_sphere, dim))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def lower_convex_envelope(x, y):
    """Lower convex hull of points (x_i, y_i), x increasing, evaluated at x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    hull = []
    for i in range(len(x)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b if it lies on or above the chord a -> i
            if (y[b] - y[a]) * (x[i] - x[a]) >= (y[i] - y[a]) * (x[b] - x[a]):
                hull.pop()
            else:
                break
        hull.append(i)
    return np.interp(x, x[hull], y[hull])


def convex_minorant(g: GFunction, r_max: float, n_r: int = 256, n_sphere: int = 720,
                    seed: int = 0) -> ConvexMinorant:
    if r_max <= 0 or n_r < 2 or n_sphere < 4:
        raise InputError("convex_minorant needs r_max > 0, n_r >= 2, n_sphere >= 4")
    dirs = sphere_directions(g.dim, n_sphere, seed)
    radii = np.linspace(0.0, r_max, n_r)
    pts = radii[:, None, None] * dirs[None, :, :]
    m = eval_g(g, pts).min(axis=1)
    return ConvexMinorant(radii, lower_convex_envelope(radii, m), m)


def minorant_inverse(a: ConvexMinorant, y: float) -> float:
    """r with A_G(r) = y by piecewise-linear inversion of the table."""
    if y < 0 or y > a.values[-1]:
        raise RangeError(f"{y} outside the minorant table range [0, {a.values[-1]:.6g}]")
    if y == 0:
        return 0.0
    i = int(np.searchsorted(a.values, y, side="left"))
    r0, r1 = a.radii[i - 1], a.radii[i]
    v0, v1 = a.values[i - 1], a.values[i]
    if v1 == v0:
        return float(r1)
    return float(r0 + (y - v0) * (r1 - r0) / (v1 - v0))
