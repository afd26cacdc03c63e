import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from aniso_el import lagrangian as lg
from aniso_el import orlicz as oz
from aniso_el.discretization import DiscreteFunction, derivative, integrate, make_grid, project_to_boundary
from aniso_el.errors import InputError, NumericalFailure
from aniso_el.functional import action, action_gradient, fd_check, gradient_values, residual_norm
from aniso_el.solvers import random_directions

L5 = lg.example5()
GRID = make_grid(1.0, 64)


def pure_kinetic():
    """F = G, V = 0, f = 0."""
    zero = lambda t, x: np.zeros(np.shape(x)[:-1])
    return lg.example5_f0().replace(K=zero, W=zero, K_x=lambda t, x: np.zeros_like(x),
                                    W_x=lambda t, x: np.zeros_like(x))


def test_action_at_zero():
    assert action(L5, DiscreteFunction.zeros(GRID, 2)) == 0.0


def test_action_constant_closed_form():
    c = 0.05
    x = np.array([c, c])
    r = np.sqrt(2) * c
    Gx = c**2
    V = 2 * Gx + r**2 * np.log1p(r**2) - Gx**2 - (r**1.5 + r**5) / 100
    forcing, _ = quad(lambda t: 2 * c * (2 - t**2) / 2500, -1, 1)
    expected = 2 * V + forcing
    grid = make_grid(1.0, 4096)
    assert action(L5, DiscreteFunction.constant(grid, x)) == pytest.approx(expected, abs=1e-10)


def test_gradient_at_zero_is_forcing():
    g = gradient_values(L5, DiscreteFunction.zeros(GRID, 2))
    f0 = (2 - GRID.nodes**2) / 2500
    assert np.allclose(g, GRID.h * np.stack([f0, f0], 1), rtol=0, atol=1e-18)
    assert np.any(g != 0)


def test_constants_are_critical_for_pure_kinetic():
    L = pure_kinetic()
    ev = action_gradient(L, DiscreteFunction.constant(GRID, [1.5, -2.0]))
    assert np.all(ev.gradient.values == 0)
    assert ev.residual_norm == 0


def test_fd_check_random():
    rng = np.random.default_rng(0)
    for _ in range(20):
        u = DiscreteFunction(GRID, rng.normal(size=(64, 2)) * rng.uniform(0.1, 2))
        assert fd_check(L5, u, 1e-6) <= 1e-5


def test_fd_check_at_zero_and_step_behaviour():
    assert fd_check(L5, DiscreteFunction.zeros(GRID, 2), 1e-6) <= 1e-8
    u = DiscreteFunction(GRID, np.random.default_rng(1).normal(size=(64, 2)))
    errs = [fd_check(L5, u, s) for s in (1e-1, 1e-2, 1e-3)]
    assert errs[0] > errs[1] > errs[2]
    with pytest.raises(InputError):
        fd_check(L5, u, 0.0)


def test_residual_norm_zero_iff_gradient_zero():
    assert residual_norm(np.zeros((8, 2)), 0.25) == 0
    assert residual_norm(np.eye(8, 2), 0.25) > 0
    # the h-weighting makes a fixed density mesh independent
    for n in (32, 64, 128):
        g = make_grid(1.0, n)
        assert residual_norm(g.h * np.ones((n, 1)), g.h) == pytest.approx(np.sqrt(2.0))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.lists(st.floats(-5, 5), min_size=2, max_size=2))
def test_translation_invariance(seed, shift):
    L = pure_kinetic()
    u = DiscreteFunction(GRID, np.random.default_rng(seed).normal(size=(64, 2)))
    assert action(L, u + np.array(shift)) == pytest.approx(action(L, u), rel=1e-12, abs=1e-12)
    assert np.allclose(gradient_values(L, u).sum(axis=0), 0, atol=1e-10)


def test_ar_type_decrease():
    c = L5.constants
    rng = np.random.default_rng(3)
    for _ in range(50):
        u = DiscreteFunction(GRID, rng.normal(size=(64, 2)) * rng.uniform(0.1, 3))
        t, x, v = GRID.nodes, u.values, derivative(u).values
        dens = (c.theta_V * L5.F(t, x, v) - np.sum(L5.F_v(t, x, v) * v, 1)
                - np.sum(L5.F_x(t, x, v) * x, 1))
        lhs = integrate(GRID, dens)
        assert lhs >= c.Lambda * (c.theta_V - c.theta_F) * oz.modular(L5.g_fun, derivative(u)) - 1e-8


def test_boundary_positivity():
    for d in random_directions(GRID, 2, 100, seed=5):
        assert action(L5, project_to_boundary(L5.g_fun, d, L5.constants.rho)) > 0


def test_dimension_and_length_checks():
    with pytest.raises(InputError):
        action(L5, DiscreteFunction.zeros(GRID, 3))
    with pytest.raises(InputError):
        action(L5, DiscreteFunction.zeros(make_grid(2.0, 64), 2))


def test_non_finite_integrand_reported():
    L = L5.replace(K=lambda t, x: np.where(t > 0.5, np.inf, 0.0))
    with pytest.raises(NumericalFailure, match="node"):
        action(L, DiscreteFunction.zeros(GRID, 2))


def test_to_dict():
    ev = action_gradient(L5, DiscreteFunction.zeros(GRID, 2))
    d = ev.to_dict(include_gradient=True)
    assert d["value"] == 0 and len(d["gradient"]) == 64
