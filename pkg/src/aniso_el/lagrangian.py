"""Problem data L(t,x,v) = F(t,x,v) + V(t,x) + <f(t),x> with V = K - W, the
built-in example problems, and sampled checkers for the growth hypotheses.

Every checker returns :class:`~aniso_el.reports.CheckReport` objects. Margins
are normalised by ``1 + |terms|`` so one tolerance serves all scales; the raw
margin at the witness is kept in the witness record.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import qmc

from . import gfunction as gf
from .errors import InputError
from .orlicz import embedding_constant
from .reports import DEFAULT_TOL, CheckReport, Status, report_from_margins


@dataclass(frozen=True)
class Constants:
    theta_F: float
    theta_V: float
    eps_V: float
    Lambda: float
    M: float
    b: float
    rho: float
    p_K: float
    zeta_F: float
    zeta_K: float
    zeta_W: float
    lambda0: float

    def __post_init__(self):
        problems = []
        if not self.theta_V > self.theta_F > 0:
            problems.append("need theta_V > theta_F > 0")
        if not self.eps_V > 0:
            problems.append("need eps_V > 0")
        if not 1 < self.p_K <= self.theta_V - self.eps_V:
            problems.append("need 1 < p_K <= theta_V - eps_V")
        if not self.b > 1:
            problems.append("need b > 1")
        if not self.rho > 0:
            problems.append("need rho > 0")
        if not self.Lambda > 0:
            problems.append("need Lambda > 0")
        if not self.M > 0:
            problems.append("need M > 0")
        if not 0 < self.lambda0 < 1:
            problems.append("need lambda0 in (0, 1)")
        if not (self.zeta_F > 1 and self.zeta_K > 1 and self.zeta_W > 1):
            problems.append("need zeta_F, zeta_K, zeta_W > 1")
        if not self.zeta_W < min(self.zeta_F, self.zeta_K):
            problems.append("need zeta_W < min(zeta_F, zeta_K)")
        if problems:
            raise InputError("invalid constants: " + "; ".join(problems))


VecFn = Callable[..., np.ndarray]


@dataclass(frozen=True)
class Lagrangian:
    """All callables are vectorised: t has shape (m,), x and v have shape (m, N)."""

    name: str
    g_fun: gf.GFunction
    T: float
    F: VecFn
    F_x: VecFn
    F_v: VecFn
    K: VecFn
    K_x: VecFn
    W: VecFn
    W_x: VecFn
    f: VecFn
    g_env: VecFn
    constants: Constants
    notes: tuple = ()

    @property
    def dim(self) -> int:
        return self.g_fun.dim

    @property
    def interval_length(self) -> float:
        return 2.0 * self.T

    def V(self, t, x):
        return self.K(t, x) - self.W(t, x)

    def V_x(self, t, x):
        return self.K_x(t, x) - self.W_x(t, x)

    def forcing_is_zero(self, n: int = 1024) -> bool:
        t = np.linspace(-self.T, self.T, n)
        return not np.any(self.f(t))

    def replace(self, **changes) -> "Lagrangian":
        return dataclasses.replace(self, **changes)

    def with_constants(self, **changes) -> "Lagrangian":
        return self.replace(constants=dataclasses.replace(self.constants, **changes))


# --------------------------------------------------------------------------
# the worked example: N = 2, I = [-1, 1]

_A5 = np.array([[2.0, -1.0], [-1.0, 1.0]])


def _G5(x):
    return np.einsum("...i,ij,...j->...", x, _A5, x)


def _gradG5(x):
    return 2.0 * x @ _A5


def _K5(t, x):
    r2 = np.sum(x * x, axis=-1)
    return 2.0 * _G5(x) + r2 * np.log1p(r2)


def _K5_x(t, x):
    r2 = np.sum(x * x, axis=-1)[..., None]
    return 2.0 * _gradG5(x) + 2.0 * x * np.log1p(r2) + 2.0 * x * r2 / (1.0 + r2)


def _W5(t, x):
    r = np.linalg.norm(x, axis=-1)
    return _G5(x) ** 2 + (r**1.5 + r**5) / 100.0


def _W5_x(t, x):
    r = np.linalg.norm(x, axis=-1)[..., None]
    # grad |x|^{3/2} = 1.5 |x|^{-1/2} x, continuous with value 0 at the origin
    with np.errstate(divide="ignore", invalid="ignore"):
        root = np.where(r > 0, 1.5 / np.sqrt(r), 0.0)
    return 2.0 * _G5(x)[..., None] * _gradG5(x) + (root * x + 5.0 * r**3 * x) / 100.0


def _f0(t):
    return (2.0 - np.asarray(t, dtype=float) ** 2) / 2500.0


def _forcing5(t):
    f0 = _f0(t)
    return np.stack([f0, f0], axis=-1)


def _no_forcing(t):
    return np.zeros(np.shape(t) + (2,))


def _F_is_G(t, x, v):
    return _G5(v)


def _F_is_G_x(t, x, v):
    return np.zeros_like(x)


def _F_is_G_v(t, x, v):
    return _gradG5(v)


def _F_remark(t, x, v):
    r = np.linalg.norm(x, axis=-1)
    return _G5(v) * (2.0 + r**4.5 - np.sin(t))


def _F_remark_x(t, x, v):
    r = np.linalg.norm(x, axis=-1)[..., None]
    return _G5(v)[..., None] * 4.5 * r**2.5 * x


def _F_remark_v(t, x, v):
    r = np.linalg.norm(x, axis=-1)
    return _gradG5(v) * (2.0 + r**4.5 - np.sin(t))[..., None]


def _g_env5(t):
    return np.full(np.shape(t), 0.001)


EXAMPLE5_CONSTANTS = Constants(
    theta_F=4.0, theta_V=4.9, eps_V=0.001, Lambda=1.0,
    M=6500.0,       # not given numerically; W's |x|^5 term dominates the AR bound only beyond ~6155
    b=2.0, rho=0.004,
    p_K=1.5,        # not given numerically
    zeta_F=2.0, zeta_K=2.0, zeta_W=31.0 / 16.0,
    lambda0=0.04,   # existential; (V5) fails for lambda near 0.5 and holds below ~0.048
)


def example5() -> Lagrangian:
    return Lagrangian(
        name="example5", g_fun=gf.example5(), T=1.0,
        F=_F_is_G, F_x=_F_is_G_x, F_v=_F_is_G_v,
        K=_K5, K_x=_K5_x, W=_W5, W_x=_W5_x,
        f=_forcing5, g_env=_g_env5, constants=EXAMPLE5_CONSTANTS,
        notes=("M, p_K and lambda0 are implementation choices (not fixed numerically for the example)",),
    )


def example5_f0() -> Lagrangian:
    """The example with the forcing term removed."""
    return example5().replace(name="example5_f0", f=_no_forcing)


def example5_remark() -> Lagrangian:
    """F(t,x,v) = G(v)(2 + |x|^{9/2} - sin t); no constants are known for it."""
    return example5().replace(
        name="example5_remark", F=_F_remark, F_x=_F_remark_x, F_v=_F_remark_v,
        notes=("alternative F; checker output is informative only",),
    )


PROBLEMS = {
    "example5": example5,
    "example5_f0": example5_f0,
    "example5_remark": example5_remark,
}


def problem(name: str) -> Lagrangian:
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise InputError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None


def scaled_forcing(L: Lagrangian, factor: float) -> Lagrangian:
    f = L.f
    return L.replace(f=lambda t: factor * f(t))


def constant_envelope(L: Lagrangian, value: float) -> Lagrangian:
    return L.replace(g_env=lambda t: np.full(np.shape(t), float(value)))


# --------------------------------------------------------------------------
# sample clouds


@dataclass(frozen=True)
class SampleCloud:
    """Quasi-random samples for the checkers.

    ``t, x, v``: box samples of (t, x, v). ``t_c, x_c, v_c, lam``: samples with
    x in the region G(x/(2|I|)) <= rho/2, with lam in (0, lambda0).
    ``t_far, x_far``: samples with M < |x| <= far_factor * M.
    """

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    t_c: np.ndarray
    x_c: np.ndarray
    v_c: np.ndarray
    lam: np.ndarray
    t_far: np.ndarray
    x_far: np.ndarray

    @property
    def size(self) -> int:
        return len(self.t) + len(self.t_c) + len(self.t_far)


def ray_level(g: gf.GFunction, dirs: np.ndarray, level: float) -> np.ndarray:
    """For each unit direction d, the s >= 0 with G(s d) = level (bisection)."""
    lo = np.zeros(len(dirs))
    hi = np.ones(len(dirs))
    for _ in range(200):
        low = g.value(hi[:, None] * dirs) < level
        if not low.any():
            break
        hi = np.where(low, 2.0 * hi, hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        below = g.value(mid[:, None] * dirs) <= level
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return lo


def _unit(z):
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def c_region_radius(L: Lagrangian, dirs: np.ndarray) -> np.ndarray:
    """Radius along each direction of the region {x : G(x/(2|I|)) <= rho/2}."""
    two_I = 2.0 * L.interval_length
    return two_I * ray_level(L.g_fun, dirs, L.constants.rho / 2.0)


def in_c_region(L: Lagrangian, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return L.g_fun.value(x / (2.0 * L.interval_length)) <= L.constants.rho / 2.0


def sample_cloud(L: Lagrangian, n: int = 10_000, seed: int = 0, box: float = 10.0,
                 far_factor: float = 100.0) -> SampleCloud:
    from scipy.special import ndtri

    N = L.dim
    T = L.T
    c = L.constants

    s = qmc.Halton(d=1 + 2 * N, scramble=True, seed=seed).random(n)
    t = -T + 2 * T * s[:, 0]
    x = box * (2 * s[:, 1:1 + N] - 1)
    v = box * (2 * s[:, 1 + N:] - 1)

    s = qmc.Halton(d=2 + 2 * N, scramble=True, seed=seed + 1).random(n)
    t_c = -T + 2 * T * s[:, 0]
    dirs = _unit(ndtri(np.clip(s[:, 1:1 + N], 1e-12, 1 - 1e-12)))
    frac = s[:, 1 + N] ** (1.0 / N)
    frac[: n // 4] = 1.0  # a quarter of the samples sit on the region boundary
    x_c = dirs * (c_region_radius(L, dirs) * frac)[:, None]
    v_c = box * (2 * s[:, 2 + N:] - 1)
    keep = in_c_region(L, x_c)
    lam = c.lambda0 * qmc.Halton(d=1, scramble=True, seed=seed + 2).random(n)[:, 0]
    t_c, x_c, v_c, lam = t_c[keep], x_c[keep], v_c[keep], lam[keep]

    s = qmc.Halton(d=1 + N, scramble=True, seed=seed + 3).random(n)
    t_far = -T + 2 * T * s[:, 0]
    dirs = _unit(ndtri(np.clip(s[:, 1:], 1e-12, 1 - 1e-12)))
    r = c.M * far_factor ** qmc.Halton(d=1, scramble=True, seed=seed + 4).random(n)[:, 0]
    r = np.maximum(r, c.M * (1 + 1e-9))
    x_far = dirs * r[:, None]
    return SampleCloud(t, x, v, t_c, x_c, v_c, lam, t_far, x_far)


# --------------------------------------------------------------------------
# checkers


def _rel(margin, *terms):
    scale = 1.0
    for term in terms:
        scale = scale + np.abs(term)
    return margin / scale


def _witness(t, x, v=None, **extra):
    def fn(i):
        out = {"t": float(t[i]), "x": np.asarray(x[i]).tolist()}
        if v is not None:
            out["v"] = np.asarray(v[i]).tolist()
        for key, arr in extra.items():
            out[key] = float(np.asarray(arr)[i])
        return out
    return fn


def check_F(L: Lagrangian, cloud: SampleCloud, tol: float = DEFAULT_TOL) -> list[CheckReport]:
    """Sampled checks of (F1)-(F6)."""
    if len(cloud.t) == 0:
        raise InputError("empty sample cloud")
    c = L.constants
    t, x, v = cloud.t, cloud.x, cloud.v
    reports = []

    # (F1) midpoint convexity in v, pairing each sample with a shuffled partner
    w = v[::-1]
    avg = 0.5 * (L.F(t, x, v) + L.F(t, x, w))
    mid = L.F(t, x, 0.5 * (v + w))
    raw = avg - mid
    reports.append(report_from_margins("F1", _rel(raw, avg, mid), _witness(t, x, v, raw=raw), tol))

    reports.append(_check_F2(L, cloud))

    # (F3) <F_x, x> + <F_v, v> <= theta_F F
    Fv = L.F(t, x, v)
    lhs = np.sum(L.F_x(t, x, v) * x, axis=1) + np.sum(L.F_v(t, x, v) * v, axis=1)
    raw = c.theta_F * Fv - lhs
    reports.append(report_from_margins("F3", _rel(raw, Fv, lhs), _witness(t, x, v, raw=raw), tol))

    # (F4) F >= Lambda G(v)
    Gv = L.g_fun.value(v)
    raw = Fv - c.Lambda * Gv
    reports.append(report_from_margins("F4", _rel(raw, Fv, Gv), _witness(t, x, v, raw=raw), tol))

    # (F5) F(t,x,0) = 0 and F_v(t,x,0) = 0
    zero = np.zeros_like(v)
    F0 = L.F(t, x, zero)
    Fv0 = np.linalg.norm(L.F_v(t, x, zero), axis=1)
    raw = -np.maximum(np.abs(F0), Fv0)
    reports.append(report_from_margins("F5", raw, _witness(t, x, raw=raw), tol))

    # (F6) F(t, lam x, lam v) <= lam^zeta_F F(t,x,v) on the C-region
    tc, xc, vc, lam = cloud.t_c, cloud.x_c, cloud.v_c, cloud.lam
    lhs = L.F(tc, lam[:, None] * xc, lam[:, None] * vc)
    rhs = lam**c.zeta_F * L.F(tc, xc, vc)
    raw = rhs - lhs
    reports.append(report_from_margins("F6", _rel(raw, lhs, rhs), _witness(tc, xc, vc, lam=lam, raw=raw), tol,
                                       details={"lambda0": c.lambda0, "zeta_F": c.zeta_F}))
    return reports


def _check_F2(L: Lagrangian, cloud: SampleCloud) -> CheckReport:
    """(F2) has existential envelopes a(.), b(.); only sampled boundedness is reported."""
    t, x, v = cloud.t, cloud.x, cloud.v
    if L.g_fun.analytic_conjugate is None:
        t, x, v = t[:500], x[:500], v[:500]
    Gv = L.g_fun.value(v)
    r1 = np.abs(L.F(t, x, v)) / (1.0 + Gv)
    r2 = np.linalg.norm(L.F_x(t, x, v), axis=1) / (1.0 + Gv)
    gs_Fv = np.atleast_1d(gf.conjugate(L.g_fun, L.F_v(t, x, v)))
    gs_grad = np.atleast_1d(gf.conjugate(L.g_fun, gf.grad_g(L.g_fun, v)))
    r3 = gs_Fv / (1.0 + gs_grad)
    bounded = bool(np.all(np.isfinite([r1.max(), r2.max(), r3.max()])))
    return CheckReport(
        "F2", Status.INCONCLUSIVE if bounded else Status.FAIL, 0.0 if bounded else float("-inf"),
        None, int(len(t)),
        {"sup_F_ratio": float(r1.max()), "sup_Fx_ratio": float(r2.max()),
         "sup_conjugate_Fv_ratio": float(r3.max())},
        "envelopes a(.), b(.) are existential; sampled ratios are finite (inconclusive by design)",
    )


def check_V(L: Lagrangian, cloud: SampleCloud, tol: float = DEFAULT_TOL,
            n_quad: int = 2048) -> list[CheckReport]:
    """Sampled checks of (V1)-(V5)."""
    if len(cloud.t) == 0:
        raise InputError("empty sample cloud")
    c = L.constants
    reports = []

    # (V1) V = K - W holds by construction; checked on the box samples anyway
    t, x = cloud.t, cloud.x
    raw = -np.abs(L.V(t, x) - (L.K(t, x) - L.W(t, x)))
    reports.append(report_from_margins("V1", raw, _witness(t, x), tol))

    # (V2) for M < |x|: AR inequality and W > K > |x|^{p_K}
    tf, xf = cloud.t_far, cloud.x_far
    K, W = L.K(tf, xf), L.W(tf, xf)
    dot = np.sum(L.V_x(tf, xf) * xf, axis=1)
    ar_rhs = (c.theta_V - c.eps_V) * K - c.theta_V * W
    m_ar = _rel(ar_rhs - dot, ar_rhs, dot)
    rpk = np.linalg.norm(xf, axis=1) ** c.p_K
    m_wk = _rel(W - K, W, K)
    m_kp = _rel(K - rpk, K, rpk)
    margins = np.minimum(m_ar, np.minimum(m_wk, m_kp))
    reports.append(report_from_margins(
        "V2", margins, _witness(tf, xf, ar=m_ar, w_gt_k=m_wk, k_gt_p=m_kp), tol,
        details={"M": c.M, "p_K": c.p_K, "worst_AR": float(m_ar.min()) if len(m_ar) else None,
                 "worst_W_gt_K": float(m_wk.min()) if len(m_wk) else None,
                 "worst_K_gt_pow": float(m_kp.min()) if len(m_kp) else None},
        note="M and p_K are implementation choices",
    ))

    # (V3) V >= b G(x) - g(t) on the C-region
    tc, xc = cloud.t_c, cloud.x_c
    Vc = L.V(tc, xc)
    bG = c.b * L.g_fun.value(xc)
    gt = L.g_env(tc)
    raw = Vc - bG + gt
    reports.append(report_from_margins("V3", _rel(raw, Vc, bG, gt), _witness(tc, xc, raw=raw), tol))

    # (V4) int_I V(t, 0) dt = 0
    tq = -L.T + (2 * L.T / n_quad) * np.arange(n_quad)
    integral = (2 * L.T / n_quad) * float(np.sum(L.V(tq, np.zeros((n_quad, L.dim)))))
    reports.append(CheckReport("V4", Status.PASS if abs(integral) <= tol else Status.FAIL,
                               -abs(integral), {"integral": integral}, n_quad))

    # (V5) V(t, lam x) <= lam^zeta_K K - lam^zeta_W W and W > 0 on the C-region
    lam = cloud.lam
    nz = np.linalg.norm(xc, axis=1) > 0
    tc5, xc5, lam5 = tc[nz], xc[nz], lam[nz]
    lhs = L.V(tc5, lam5[:, None] * xc5)
    Kc, Wc = L.K(tc5, xc5), L.W(tc5, xc5)
    rhs = lam5**c.zeta_K * Kc - lam5**c.zeta_W * Wc
    m_scale = _rel(rhs - lhs, lhs, lam5**c.zeta_K * Kc, lam5**c.zeta_W * Wc)
    m_pos = Wc / (1.0 + Wc)
    reports.append(report_from_margins(
        "V5", np.minimum(m_scale, m_pos), _witness(tc5, xc5, lam=lam5, raw=rhs - lhs), tol,
        details={"lambda0": c.lambda0, "zeta_K": c.zeta_K, "zeta_W": c.zeta_W}))
    return reports


def forcing_integral(L: Lagrangian, n_quad: int = 2048, method: str = "auto") -> float:
    """int_I G*(f(t)) + g(t) dt by the periodic rectangle rule."""
    h = 2 * L.T / n_quad
    t = -L.T + h * np.arange(n_quad)
    gstar = np.atleast_1d(gf.conjugate(L.g_fun, L.f(t), method))
    return h * float(np.sum(gstar + L.g_env(t)))


def check_forcing(L: Lagrangian, n_quad: int = 2048, method: str = "auto") -> CheckReport:
    """(f): int_I G*(f) + g dt < min{Lambda, b - 1} rho."""
    c = L.constants
    lhs = forcing_integral(L, n_quad, method)
    rhs = min(c.Lambda, c.b - 1.0) * c.rho
    status = Status.PASS if lhs < rhs else Status.FAIL
    return CheckReport("f", status, rhs - lhs, {"lhs": lhs, "rhs": rhs}, n_quad,
                       {"lhs": lhs, "rhs": rhs}, f"lhs={lhs:.8g} rhs={rhs:.8g}")


# --------------------------------------------------------------------------
# comparison with the ball-based conditions (A3)/(f1)/(f2)


def legacy_scan_points(dim: int = 2, r_max: float = 10.0, n_radii: int = 800,
                       n_dirs: int = 720) -> np.ndarray:
    """Polar candidate grid, log-spaced in radius so that tiny radii are resolved."""
    radii = np.geomspace(1e-6, r_max, n_radii)
    dirs = gf.sphere_directions(dim, n_dirs)
    return (radii[:, None, None] * dirs[None]).reshape(-1, dim)


def legacy_envelopes(r0, c_inf):
    """Admissible sup of a for (f1) and (f2) at ball radius r0."""
    s = np.asarray(r0, dtype=float) / (2.0 * c_inf)
    return s, np.minimum(s**2, s**4)


def check_legacy(L: Lagrangian, r0_grid=None, x_scan_grid=None, t: float = 0.0,
                 c_inf: float | None = None) -> CheckReport:
    """Search, for each r0, a point |x| <= r0 with G(x) - V(x) >= a_max(r0).

    Such x violates V >= b G - a for every b > 1 and every admissible a, for
    both envelopes. PASS means a witness exists for every r0 and both
    envelopes, i.e. the ball-based assumptions cannot hold.
    """
    if r0_grid is None:
        r0_grid = np.linspace(0.1, 10.0, 100)
    r0_grid = np.asarray(r0_grid, dtype=float)
    if r0_grid.size == 0:
        raise InputError("check_legacy needs a nonempty r0 grid")
    if x_scan_grid is None:
        x_scan_grid = legacy_scan_points(L.dim, float(np.max(r0_grid)))
    X = np.asarray(x_scan_grid, dtype=float)
    if r0_grid.size == 0 or X.size == 0:
        raise InputError("check_legacy needs nonempty r0 and x grids")
    if c_inf is None:
        c_inf = embedding_constant(L.g_fun, L.interval_length)

    tt = np.full(len(X), t)
    gap = L.g_fun.value(X) - L.V(tt, X)
    radius = np.linalg.norm(X, axis=1)
    order = np.argsort(radius)
    radius, gap, X = radius[order], gap[order], X[order]
    # running argmax of G - V over the growing ball
    run_idx = np.zeros(len(gap), dtype=int)
    best = 0
    for i in range(1, len(gap)):
        if gap[i] > gap[best]:
            best = i
        run_idx[i] = best

    a1, a2 = legacy_envelopes(r0_grid, c_inf)
    rows = []
    margins = []
    worst = None
    for r0, e1, e2 in zip(r0_grid, a1, a2):
        k = int(np.searchsorted(radius, r0, side="right")) - 1
        if k < 0:
            hmax, xbest = -np.inf, None
        else:
            j = run_idx[k]
            hmax, xbest = float(gap[j]), X[j]
        ok1, ok2 = hmax >= e1, hmax >= e2
        rows.append({
            "r0": float(r0), "a_max_f1": float(e1), "a_max_f2": float(e2),
            "max_gap": hmax, "witness": None if xbest is None else xbest.tolist(),
            "witness_f1": bool(ok1), "witness_f2": bool(ok2),
        })
        m = min(hmax - e1, hmax - e2)
        margins.append(m)
        if worst is None or m < worst[0]:
            worst = (m, rows[-1])
    missing1 = [r["r0"] for r in rows if not r["witness_f1"]]
    missing2 = [r["r0"] for r in rows if not r["witness_f2"]]
    status = Status.PASS if not missing1 and not missing2 else Status.FAIL
    return CheckReport(
        "legacy", status, float(min(margins)), worst[1], int(len(X)),
        {"C_inf": c_inf, "rows": rows, "r0_without_f1_witness": missing1,
         "r0_without_f2_witness": missing2,
         "envelopes": "f1: a < r0/(2C); f2: a < min{(r0/2C)^2, (r0/2C)^4}"},
        f"witness missing for {len(missing1)} r0 (f1), {len(missing2)} r0 (f2) of {len(rows)}",
    )


@dataclass(frozen=True)
class ScanTable:
    x1: np.ndarray
    x2: np.ndarray
    values: np.ndarray  # values[i, j] at (x1[j], x2[i])
    max_value: float
    argmax: tuple
    meta: dict


def _mesh(box, resolution):
    x1 = np.linspace(box[0], box[1], resolution)
    x2 = np.linspace(box[2], box[3], resolution)
    X1, X2 = np.meshgrid(x1, x2)
    return x1, x2, np.stack([X1, X2], axis=-1)


def scan_h(L: Lagrangian, which: str = "h1", box=(-3.0, 3.0, -3.0, 3.0), resolution: int = 400,
           t: float = 0.0, c_inf: float | None = None) -> ScanTable:
    """h1 = G - V - |x|/(2C), h2 = G - V - (|x|/(2C))^2 on a planar grid."""
    if L.dim != 2:
        raise InputError("scan_h works on planar problems only")
    if which not in ("h1", "h2"):
        raise InputError("which must be 'h1' or 'h2'")
    if c_inf is None:
        c_inf = embedding_constant(L.g_fun, L.interval_length)
    x1, x2, P = _mesh(box, resolution)
    flat = P.reshape(-1, 2)
    s = np.linalg.norm(flat, axis=1) / (2.0 * c_inf)
    base = L.g_fun.value(flat) - L.V(np.full(len(flat), t), flat)
    h = base - (s if which == "h1" else s**2)
    vals = h.reshape(P.shape[:2])
    i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
    return ScanTable(x1, x2, vals, float(vals[i, j]), (float(x1[j]), float(x2[i])),
                     {"which": which, "C_inf": c_inf})


@dataclass(frozen=True)
class RegionTable:
    x1: np.ndarray
    x2: np.ndarray
    margin_A: np.ndarray  # V - b G + g
    in_A: np.ndarray
    in_C: np.ndarray
    in_B: np.ndarray
    r0: float


def region_scan(L: Lagrangian, box=(-3.0, 3.0, -3.0, 3.0), resolution: int = 400,
                t: float = 0.0, r0: float | None = None) -> RegionTable:
    """Membership of grid points in A = {V >= bG - g}, C and a ball B_{r0}.

    Without an explicit r0 the ball is the largest one centred at 0 that the
    grid shows inside A.
    """
    if L.dim != 2:
        raise InputError("region_scan works on planar problems only")
    x1, x2, P = _mesh(box, resolution)
    flat = P.reshape(-1, 2)
    tt = np.full(len(flat), t)
    margin = L.V(tt, flat) - L.constants.b * L.g_fun.value(flat) + L.g_env(tt)
    in_A = margin >= 0
    in_C = in_c_region(L, flat)
    radius = np.linalg.norm(flat, axis=1)
    if r0 is None:
        outside = radius[~in_A]
        r0 = float(outside.min()) * (1 - 1e-12) if outside.size else float(radius.max())
    in_B = radius <= r0
    shape = P.shape[:2]
    return RegionTable(x1, x2, margin.reshape(shape), in_A.reshape(shape), in_C.reshape(shape),
                       in_B.reshape(shape), float(r0))
