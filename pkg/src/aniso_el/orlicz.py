"""Modulars, Luxemburg norms and the Orlicz-space inequality suite, evaluated
on discrete periodic functions."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .discretization import DiscreteFunction, derivative, integrate
from .errors import InputError, NumericalFailure
from .gfunction import (GFunction, conjugate_function, convex_minorant, eval_g,
                        minorant_inverse, sphere_directions)
from .reports import CheckReport, Status

RELATION_SLACK = 1e-10


class RelationSide(str, Enum):
    BELOW_ONE = "below_one"
    ABOVE_ONE = "above_one"
    AT_ONE = "at_one"


@dataclass(frozen=True)
class NormReport:
    luxemburg: float
    modular: float
    relation_side: RelationSide

    @property
    def relation_holds(self) -> bool:
        """R_G(u) <= ||u|| when ||u|| <= 1, R_G(u) > ||u|| when ||u|| > 1."""
        if self.luxemburg <= 1.0:
            return self.modular <= self.luxemburg + RELATION_SLACK
        return self.modular > self.luxemburg - RELATION_SLACK


def _check(g, u):
    if u.dim != g.dim:
        raise InputError(f"function dimension {u.dim} != G dimension {g.dim}")


def modular(g: GFunction, u: DiscreteFunction) -> float:
    """R_G(u) = int_I G(u(t)) dt."""
    _check(g, u)
    return integrate(u.grid, g.value(u.values))


def luxemburg_norm(g: GFunction, u: DiscreteFunction, tol: float = 1e-10) -> float:
    """inf{lam > 0 : R_G(u/lam) <= 1}, by bisection on the decreasing map lam -> R_G(u/lam)."""
    _check(g, u)
    if u.is_zero():
        return 0.0
    vals = u.values
    f = lambda lam: integrate(u.grid, g.value(vals / lam)) - 1.0

    lo = 1e-12
    hi = max(1.0, modular(g, u)) * (1.0 + float(np.abs(vals).max()))
    for _ in range(200):
        if f(hi) <= 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise NumericalFailure("Luxemburg bisection could not bracket the norm from above")
    while f(lo) <= 0:
        hi, lo = lo, lo / 2.0
        if lo < 1e-300:
            raise NumericalFailure("Luxemburg bisection could not bracket the norm from below")

    for _ in range(500):
        mid = np.sqrt(lo * hi) if hi > 4 * lo else 0.5 * (lo + hi)
        val = f(mid)
        if abs(val) <= tol:
            return float(mid)
        if val > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 2 * np.finfo(float).eps * hi:
            return float(hi)
    raise NumericalFailure("Luxemburg bisection did not converge", best=hi)


def norm_report(g: GFunction, u: DiscreteFunction) -> NormReport:
    lux = luxemburg_norm(g, u)
    mod = modular(g, u)
    if abs(lux - 1.0) <= 1e-12:
        side = RelationSide.AT_ONE
    elif lux < 1.0:
        side = RelationSide.BELOW_ONE
    else:
        side = RelationSide.ABOVE_ONE
    return NormReport(lux, mod, side)


def sobolev_norm(g: GFunction, u: DiscreteFunction) -> float:
    """||u|| + ||u'|| in the Luxemburg norm of G."""
    return luxemburg_norm(g, u) + luxemburg_norm(g, derivative(u))


def pointwise_bound_margin(g: GFunction, u: DiscreteFunction) -> float:
    """min_i [R_G(u') + R_G(u) - 2 G(u(t_i) / (2|I|))]; nonnegative when |I| >= 1."""
    _check(g, u)
    total = modular(g, derivative(u)) + modular(g, u)
    scaled = u.values / (2.0 * u.grid.length)
    return float(total - 2.0 * g.value(scaled).max())


def embedding_constant(g: GFunction, interval_length: float, n_r: int = 256,
                       n_sphere: int = 720) -> float:
    """C_{inf,G} = max{1, |I|} * A_G^{-1}(1/|I|)."""
    if interval_length < 1:
        raise InputError("interval length must be at least 1")
    target = 1.0 / interval_length
    # pick the table range so that it just covers the target level
    dirs = sphere_directions(g.dim, n_sphere)
    r_max = 1.0
    while eval_g(g, r_max * dirs).min() < target:
        r_max *= 2.0
    a = convex_minorant(g, r_max, n_r, n_sphere)
    return max(1.0, interval_length) * minorant_inverse(a, target)


def holder_gap(g: GFunction, u: DiscreteFunction, v: DiscreteFunction,
               method: str = "auto") -> float:
    """2 ||u||_G ||v||_{G*} - int <u, v> dt; nonnegative by Hoelder."""
    _check(g, u)
    _check(g, v)
    if u.grid != v.grid:
        raise InputError("u and v live on different grids")
    gstar = conjugate_function(g, method)
    pairing = integrate(u.grid, np.sum(u.values * v.values, axis=1))
    return 2.0 * luxemburg_norm(g, u) * luxemburg_norm(gstar, v) - pairing


def brezis_lieb_check(g: GFunction, x, y, k: float, eps: float,
                      slack: float = 1e-10) -> CheckReport:
    """|G(x+y) - G(x)| <= eps |G(kx) - k G(x)| + 2 G(C_eps y), C_eps = 1/(eps (k-1))."""
    if not k > 1:
        raise InputError("Brezis-Lieb needs k > 1")
    if not 0 < eps < 1.0 / k:
        raise InputError("Brezis-Lieb needs 0 < eps < 1/k")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    c_eps = 1.0 / (eps * (k - 1.0))
    lhs = abs(eval_g(g, x + y) - eval_g(g, x))
    rhs = eps * abs(eval_g(g, k * x) - k * eval_g(g, x)) + 2.0 * eval_g(g, c_eps * y)
    margin = rhs + slack - lhs
    status = Status.PASS if margin >= 0 else Status.FAIL
    return CheckReport("BrezisLieb", status, float(margin),
                       {"x": x.tolist(), "y": y.tolist(), "k": k, "eps": eps}, 1,
                       {"lhs": lhs, "rhs": rhs, "C_eps": c_eps})


def modular_coercivity_probe(g: GFunction, u: DiscreteFunction, scales) -> list[float]:
    """R_G(s u) / ||s u||_G for each scale s."""
    _check(g, u)
    if u.is_zero():
        raise InputError("coercivity probe needs a nonzero function")
    out = []
    for s in scales:
        su = u * s
        out.append(modular(g, su) / luxemburg_norm(g, su))
    return out
