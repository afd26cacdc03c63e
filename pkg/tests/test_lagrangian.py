import dataclasses

import numpy as np
import pytest

from aniso_el import gfunction as gf
from aniso_el import lagrangian as lg
from aniso_el.errors import InputError
from aniso_el.reports import Status

L5 = lg.example5()
A = np.array([[2.0, -1.0], [-1.0, 1.0]])


def G(x):
    x = np.asarray(x, float)
    return x[..., 0] ** 2 + (x[..., 0] - x[..., 1]) ** 2


def V_direct(x):
    x = np.asarray(x, float)
    r = np.linalg.norm(x, axis=-1)
    return 2 * G(x) + r**2 * np.log(1 + r**2) - G(x) ** 2 - (r**1.5 + r**5) / 100


@pytest.fixture(scope="module")
def cloud():
    return lg.sample_cloud(L5, 10_000, seed=0)


@pytest.fixture(scope="module")
def reports(cloud):
    return {r.name: r for r in lg.check_F(L5, cloud) + lg.check_V(L5, cloud)}


def test_example_data():
    t = np.array([0.0])
    assert L5.K(t, np.array([[1.0, 1.0]]))[0] == pytest.approx(2 + 2 * np.log(3), abs=1e-12)
    assert L5.K(t, np.array([[1.0, 1.0]]))[0] == pytest.approx(4.19722, abs=1e-5)
    assert L5.W(t, np.zeros((1, 2)))[0] == 0
    assert L5.f(t)[0, 0] == pytest.approx(0.0008)
    assert L5.g_env(t)[0] == 0.001
    rng = np.random.default_rng(0)
    x = rng.normal(size=(50, 2)) * 3
    assert np.allclose(L5.V(np.zeros(50), x), V_direct(x), rtol=1e-12)


def test_partials_match_finite_differences():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(20, 2)) * 2
    t = rng.uniform(-1, 1, 20)
    step = 1e-6
    for fn, grad in ((L5.K, L5.K_x), (L5.W, L5.W_x)):
        fd = np.stack([(fn(t, x + step * e) - fn(t, x - step * e)) / (2 * step) for e in np.eye(2)], 1)
        assert np.allclose(fd, grad(t, x), rtol=1e-6, atol=1e-6)
    Lr = lg.example5_remark()
    v = rng.normal(size=(20, 2))
    for arg, grad in ((0, Lr.F_x), (1, Lr.F_v)):
        def F_shift(d):
            return Lr.F(t, x + d, v) if arg == 0 else Lr.F(t, x, v + d)
        fd = np.stack([(F_shift(step * e) - F_shift(-step * e)) / (2 * step) for e in np.eye(2)], 1)
        assert np.allclose(fd, grad(t, x, v), rtol=1e-5, atol=1e-5)


def test_constants_validation():
    with pytest.raises(InputError):
        L5.with_constants(theta_V=3.0)
    with pytest.raises(InputError):
        L5.with_constants(b=1.0)
    with pytest.raises(InputError):
        L5.with_constants(zeta_W=2.5)
    with pytest.raises(InputError):
        L5.with_constants(lambda0=1.5)


def test_check_F(reports):
    for name in ("F1", "F3", "F4", "F5", "F6"):
        assert reports[name].status is Status.PASS, reports[name].summary_line()
    assert reports["F4"].worst_margin == pytest.approx(0.0, abs=1e-15)
    assert reports["F2"].status is Status.INCONCLUSIVE


def test_F3_margin_is_euler_identity(cloud):
    t, x, v = cloud.t, cloud.x, cloud.v
    F = L5.F(t, x, v)
    lhs = np.sum(L5.F_x(t, x, v) * x, 1) + np.sum(L5.F_v(t, x, v) * v, 1)
    assert np.allclose(L5.constants.theta_F * F - lhs, (L5.constants.theta_F - 2) * G(v), rtol=1e-12, atol=1e-9)


def test_check_V_structural(reports):
    for name in ("V1", "V2", "V4", "V5"):
        assert reports[name].status is Status.PASS, reports[name].summary_line()


def test_V3_on_C_region(reports):
    """(V3) should hold on the whole C-region for the example."""
    assert reports["V3"].status is Status.PASS, reports["V3"].summary_line()


def test_V3_counterexample_by_direct_evaluation():
    # independent oracle: a point of C where V < bG - g, found along the stiff direction
    x = np.array([0.0938, -0.0578])
    assert G(x / 4) <= 0.004 / 2
    assert V_direct(x) - 2 * G(x) + 0.001 < 0


def test_V2_direct_at_twice_M():
    M = L5.constants.M
    rng = np.random.default_rng(2)
    d = rng.normal(size=(200, 2))
    x = 2 * M * d / np.linalg.norm(d, axis=1, keepdims=True)
    t = np.zeros(len(x))
    K, W = L5.K(t, x), L5.W(t, x)
    c = L5.constants
    assert np.all(np.sum(L5.V_x(t, x) * x, 1) <= (c.theta_V - c.eps_V) * K - c.theta_V * W)
    assert np.all(W > K) and np.all(K > np.linalg.norm(x, axis=1) ** c.p_K)


def test_V2_fails_for_small_radius(cloud):
    # the AR inequality is false at |x| = 4: W's quintic term has not taken over yet
    x = np.array([[4.0, 0.0]])
    t = np.zeros(1)
    c = L5.constants
    lhs = np.sum(L5.V_x(t, x) * x, 1)
    assert lhs[0] > (c.theta_V - c.eps_V) * L5.K(t, x)[0] - c.theta_V * L5.W(t, x)[0]
    small = lg.sample_cloud(L5.with_constants(M=3.0), 2000, seed=0)
    rep = {r.name: r for r in lg.check_V(L5.with_constants(M=3.0), small)}
    assert rep["V2"].status is Status.FAIL
    assert rep["V2"].witness is not None


def test_lambda_scaling_seed_is_negative():
    # with f = 0, J(lam psi) = |I| V(lam psi) for constant psi; negative for small lam
    psi = np.ones(2) / np.sqrt(2)
    for lam in (1e-6, 1e-5, 2e-5):
        assert V_direct(lam * psi) < 0


def test_empty_cloud_rejected(cloud):
    empty = dataclasses.replace(cloud, t=cloud.t[:0], x=cloud.x[:0], v=cloud.v[:0])
    with pytest.raises(InputError):
        lg.check_F(L5, empty)
    with pytest.raises(InputError):
        lg.check_V(L5, empty)


def test_check_forcing():
    rep = lg.check_forcing(L5)
    # G*(s, s) = 5 s^2 / 4 and int (2 - t^2)^2 dt = 86/15
    closed = 5 / 4 * (86 / 15) / 2500**2 + 0.002
    assert rep.details["lhs"] == pytest.approx(closed, abs=1e-6)
    assert rep.details["lhs"] == pytest.approx(0.0020011467, abs=1e-9)
    assert rep.details["rhs"] == pytest.approx(0.004)
    assert rep.status is Status.PASS
    fine = lg.check_forcing(L5, n_quad=4096)
    assert fine.details["lhs"] == pytest.approx(rep.details["lhs"], rel=1e-6)
    zero = lg.constant_envelope(lg.example5_f0(), 0.0)
    assert lg.check_forcing(zero).details["lhs"] == 0.0
    bad = lg.check_forcing(lg.constant_envelope(L5, 0.01))
    assert bad.status is Status.FAIL
    assert bad.details["lhs"] == pytest.approx(0.020001, abs=1e-5)


def test_forcing_numeric_conjugate_agrees():
    assert lg.forcing_integral(L5, 256, "numeric") == pytest.approx(lg.forcing_integral(L5, 256), rel=1e-9)


def test_legacy_reproduces_negative_claim():
    rep = lg.check_legacy(L5, np.linspace(0.1, 10, 100))
    assert rep.status is Status.PASS, rep.note


def test_legacy_no_witness_for_small_balls_by_direct_search():
    # independent oracle: dense polar search of max (G - V) over |x| <= 0.6
    c = 2 * np.sqrt(0.5 / ((3 - np.sqrt(5)) / 2))
    r = np.linspace(0, 0.6, 1201)[1:]
    ang = np.linspace(0, 2 * np.pi, 2001)
    P = r[:, None, None] * np.stack([np.cos(ang), np.sin(ang)], -1)[None]
    gap = G(P) + 0 - V_direct(P)
    assert gap.max() < min((0.1 / (2 * c)) ** 2, (0.1 / (2 * c)) ** 4)


def test_legacy_control_has_no_witness():
    ctrl = L5.replace(K=lambda t, x: 3 * L5.g_fun.value(x), K_x=lambda t, x: 3 * gf.grad_g(L5.g_fun, x),
                      W=lambda t, x: np.zeros(np.shape(x)[:-1]), W_x=lambda t, x: np.zeros_like(x))
    rep = lg.check_legacy(ctrl, np.linspace(0.5, 5, 10))
    assert rep.status is Status.FAIL
    assert len(rep.details["r0_without_f1_witness"]) == 10
    with pytest.raises(InputError):
        lg.check_legacy(L5, [], None)


def test_legacy_consistent_with_h_scans():
    rep = lg.check_legacy(L5, np.linspace(0.1, 10, 100))
    c = rep.details["C_inf"]
    for row in rep.details["rows"]:
        if row["witness_f1"] or row["witness_f2"]:
            x = np.array(row["witness"])
            s = np.linalg.norm(x) / (2 * c)
            base = G(x) - V_direct(x)
            assert base - s > 0 or base - s**2 > 0


def test_scan_h():
    for which in ("h1", "h2"):
        tab = lg.scan_h(L5, which, resolution=200)
        assert tab.max_value > 0
        i = np.argmin(np.abs(tab.x1 - tab.argmax[0]))
        j = np.argmin(np.abs(tab.x2 - tab.argmax[1]))
        assert tab.values[j, i] == tab.max_value
    ctrl = L5.replace(K=lambda t, x: 2 * L5.g_fun.value(x) + 1.0, W=lambda t, x: np.zeros(np.shape(x)[:-1]))
    assert lg.scan_h(ctrl, "h1", (-0.5, 0.5, -0.5, 0.5), 50).max_value < 0
    with pytest.raises(InputError):
        lg.scan_h(L5, "h3")


def test_region_scan_C_inside_A():
    tab = lg.region_scan(L5, resolution=400)
    assert tab.in_C.any()
    assert np.all(tab.in_A[tab.in_C]), f"{int(np.sum(tab.in_C & ~tab.in_A))} points of C outside A"


def test_region_scan_flags():
    tab = lg.region_scan(L5, resolution=201)
    assert tab.in_A[100, 100] and tab.in_C[100, 100]  # the origin
    assert lg.in_c_region(L5, np.zeros((1, 2)))[0]
    # G(x / 4) = rho on the x1-axis at x1 = 4 sqrt(rho / 2)
    x = np.array([[4 * np.sqrt(0.004 / 2) * 1.0001, 0.0]])
    assert not lg.in_c_region(L5, x)[0]
    assert np.all(tab.in_A[tab.in_B])
