"""The discrete action J(u) = h * sum_i [F(t_i,u_i,Du_i) + V(t_i,u_i) + <f(t_i),u_i>]
and its exact gradient."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discretization import DiscreteFunction, derivative, integrate
from .errors import InputError, NumericalFailure
from .lagrangian import Lagrangian


@dataclass(frozen=True)
class ActionEvaluation:
    value: float
    gradient: DiscreteFunction
    residual_norm: float

    def to_dict(self, include_gradient: bool = False) -> dict:
        out = {
            "value": self.value,
            "residual": self.residual_norm,
            "residual_norm_kind": "L2 norm of nodal gradient density (proxy for the dual Sobolev norm)",
        }
        if include_gradient:
            out["gradient"] = self.gradient.values.tolist()
        return out


def _validate(L: Lagrangian, u: DiscreteFunction):
    if u.dim != L.dim:
        raise InputError(f"function dimension {u.dim} != problem dimension {L.dim}")
    if abs(u.grid.T - L.T) > 1e-12:
        raise InputError(f"grid half-length {u.grid.T} != problem half-length {L.T}")


def integrand(L: Lagrangian, u: DiscreteFunction) -> np.ndarray:
    _validate(L, u)
    t = u.grid.nodes
    x = u.values
    v = derivative(u).values
    out = L.F(t, x, v) + L.V(t, x) + np.sum(L.f(t) * x, axis=1)
    bad = ~np.isfinite(out)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise NumericalFailure(f"non-finite action integrand at node {i} (t={t[i]:.6g})", best=i)
    return out


def action(L: Lagrangian, u: DiscreteFunction) -> float:
    return integrate(u.grid, integrand(L, u))


def residual_norm(gradient_values: np.ndarray, h: float) -> float:
    """L2 norm of the gradient density g_i / h, i.e. sqrt(sum |g_i|^2 / h).

    Independent of the mesh for a fixed continuum residual.
    """
    return float(np.sqrt(np.sum(gradient_values**2) / h))


def gradient_values(L: Lagrangian, u: DiscreteFunction) -> np.ndarray:
    """Nodal gradient of the discrete action (shape n x N)."""
    _validate(L, u)
    grid = u.grid
    t = grid.nodes
    x = u.values
    v = derivative(u).values
    Fv = L.F_v(t, x, v)
    local = L.F_x(t, x, v) + L.V_x(t, x) + L.f(t)
    # adjoint of the forward difference: sum_i <Fv_i, phi_{i+1} - phi_i>
    grad = grid.h * local + (np.roll(Fv, 1, axis=0) - Fv)
    if not np.all(np.isfinite(grad)):
        i = int(np.flatnonzero(~np.isfinite(grad).all(axis=1))[0])
        raise NumericalFailure(f"non-finite gradient at node {i}", best=i)
    return grad


def action_gradient(L: Lagrangian, u: DiscreteFunction) -> ActionEvaluation:
    grad = gradient_values(L, u)
    return ActionEvaluation(action(L, u), DiscreteFunction(u.grid, grad),
                            residual_norm(grad, u.grid.h))


def fd_check(L: Lagrangian, u: DiscreteFunction, step: float = 1e-6) -> float:
    """Worst relative mismatch between central differences of J and its gradient."""
    if step <= 0:
        raise InputError("step must be positive")
    grad = gradient_values(L, u)
    base = u.values
    worst = 0.0
    for i in range(base.shape[0]):
        for k in range(base.shape[1]):
            plus = base.copy()
            minus = base.copy()
            plus[i, k] += step
            minus[i, k] -= step
            fd = (action(L, DiscreteFunction(u.grid, plus))
                  - action(L, DiscreteFunction(u.grid, minus))) / (2 * step)
            worst = max(worst, abs(fd - grad[i, k]) / (1.0 + abs(grad[i, k])))
    return worst
