import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ffgnc.controllers import (ActuatorSpec, AdaptiveGainState, NftsmParams,
                               adaptive_gain_euler, adaptive_gain_step,
                               adaptive_smooth_control,
                               attitude_linear_matrices, care_residual,
                               error_bound_solve, hcw_matrices, lqr_gain,
                               param_feasibility, pd_control,
                               sliding_variable_att, sliding_variable_orb,
                               solve_error_bound, thrust_actuator,
                               thrust_actuator_core, wheel_actuator,
                               wheel_actuator_core)

ORB = NftsmParams(rho=1.9, alpha=7e-3, beta=7e-3, epsilon=1.2e-2,
                  k_init=3e-5, k0=1e-8, eta=4.5e-4)
ATT = NftsmParams(rho=1.1, alpha=1.44, beta=1.44, epsilon=6e-2,
                  k_init=2e-4, k0=2e-7, eta=5e-2)
SPEC = ActuatorSpec()

vec3 = st.lists(st.floats(-10.0, 10.0), min_size=3, max_size=3).map(np.array)


def test_sliding_orb_zero():
    assert np.array_equal(sliding_variable_orb(np.zeros(3), np.zeros(3), ORB),
                          np.zeros(3))


def test_sliding_orb_published_arithmetic():
    # alpha*1 + beta*1 with the published orbit gains
    s = sliding_variable_orb(np.array([1.0, 0, 0]), np.zeros(3), ORB)
    assert np.allclose(s, [1.4e-2, 0, 0], rtol=1e-15)


def test_sliding_att_arithmetic():
    s = sliding_variable_att(np.array([0.1, 0.0, 0.0]), np.zeros(3), ATT)
    expect = 1.44 * math.pow(0.1, 1.1) + 1.44 * 0.1
    assert s[0] == pytest.approx(expect, rel=1e-14)
    assert s[1] == 0.0 and s[2] == 0.0


def test_sliding_att_componentwise_independence():
    q1 = np.array([0.1, 0.05, -0.2])
    q2 = q1.copy()
    q2[1] += 0.03
    s1 = sliding_variable_att(q1, np.zeros(3), ATT)
    s2 = sliding_variable_att(q2, np.zeros(3), ATT)
    assert s1[0] == s2[0] and s1[2] == s2[2] and s1[1] != s2[1]


@settings(deadline=None)
@given(st.lists(st.floats(-10.0, 10.0), min_size=3, max_size=3).map(np.array))
def test_on_surface_velocity_opposes_error(r_e):
    # s = 0 with r_e != 0 forces sign(v_e,i) = -sign(r_e,i) componentwise
    v_e = -(ORB.alpha * np.sign(r_e) * np.abs(r_e) ** ORB.rho
            + ORB.beta * r_e)
    s = sliding_variable_orb(r_e, v_e, ORB)
    assert np.allclose(s, 0.0, atol=1e-12)
    for i in range(3):
        if abs(r_e[i]) > 1e-300:   # away from underflow
            assert np.sign(v_e[i]) == -np.sign(r_e[i])


def test_adaptive_smooth_control_properties():
    s = np.array([0.3, -0.1, 0.2])
    u = adaptive_smooth_control(s, 2e-4, 6e-2)
    assert np.linalg.norm(u) == pytest.approx(
        2e-4 / 6e-2 * np.linalg.norm(s), rel=1e-15)
    cos = u @ s / (np.linalg.norm(u) * np.linalg.norm(s))
    assert cos == pytest.approx(-1.0, abs=1e-12)
    assert np.array_equal(adaptive_smooth_control(np.zeros(3), 2e-4, 6e-2),
                          np.zeros(3))


def test_gain_fixed_point_at_floor():
    k_new, k_dot = adaptive_gain_euler(1e-8, 1e-8, 4.5e-4, 0.0, 5.0)
    assert k_dot == 0.0
    assert k_new == 1e-8


def test_gain_sign_behavior():
    # ||u|| > K - K0 -> K grows; ||u|| < K - K0 -> K decays
    k_up, kd_up = adaptive_gain_euler(1e-4, 1e-8, 4.5e-4, 2e-4, 5.0)
    assert kd_up > 0 and k_up > 1e-4
    k_dn, kd_dn = adaptive_gain_euler(1e-3, 1e-8, 4.5e-4, 1e-5, 5.0)
    assert kd_dn < 0 and k_dn < 1e-3


def test_gain_floor_clamp():
    k_new, _ = adaptive_gain_euler(1.1e-8, 1e-8, 1.0, 0.0, 1.0)
    assert k_new >= 1e-8


def test_gain_step_wrapper_and_validation():
    g = AdaptiveGainState(k=3e-5, k0=1e-8, eta=4.5e-4)
    g2 = adaptive_gain_step(g, np.array([1e-4, 0, 0]), 5.0)
    assert g2.k > g.k
    with pytest.raises(ValueError):
        adaptive_gain_step(g, np.zeros(3), 0.0)


@settings(deadline=None, max_examples=50)
@given(st.floats(1e-8, 1e-2), vec3)
def test_reorganized_adaptation_equivalence(k, s):
    """eta*K*(||s/eps|| - (1 - K0/K)) equals eta*(||u|| - K + K0) with
    u = -(K/eps) s, to machine precision."""
    eps, eta, k0 = 1.2e-2, 4.5e-4, 1e-8
    u = adaptive_smooth_control(s, k, eps)
    direct = eta * (np.linalg.norm(u) - k + k0)
    reorganized = eta * k * (np.linalg.norm(s / eps) - (1.0 - k0 / k))
    # machine precision scaled to the largest participating magnitude
    tol = 1e-12 * eta * (k + k0 + float(np.linalg.norm(u)))
    assert abs(direct - reorganized) <= tol


def test_gain_rate_sign_flip_threshold():
    # sign of K' flips exactly when ||s||/eps crosses 1 - K0/K
    eps, eta, k0, k = 1.2e-2, 4.5e-4, 1e-8, 5e-5
    thresh = (1.0 - k0 / k) * eps
    for scale, positive in ((1.0001, True), (0.9999, False)):
        s = np.array([thresh * scale, 0, 0])
        u = adaptive_smooth_control(s, k, eps)
        _, k_dot = adaptive_gain_euler(k, k0, eta, np.linalg.norm(u), 5.0)
        assert (k_dot > 0) == positive


def grid_scan_root(eps, alpha, beta, rho):
    """Brute-force root of F(x) = eps - alpha x^rho - beta x by two-stage
    dense grid scan (independent of the bisection path)."""
    def f(x):
        return eps - alpha * x**rho - beta * x
    hi = eps / beta
    xs = np.linspace(0.0, hi, 100001)
    vals = f(xs)
    i = int(np.argmax(vals <= 0.0))
    lo, hi = xs[i - 1], xs[i]
    xs = np.linspace(lo, hi, 100001)
    vals = f(xs)
    i = int(np.argmax(vals <= 0.0))
    return 0.5 * (xs[i - 1] + xs[i])


def test_error_bound_alpha_zero_limit():
    assert solve_error_bound(1.2e-2, 0.0, 7e-3, 1.9) == pytest.approx(
        1.2e-2 / 7e-3, rel=1e-15)


def test_error_bound_orbit_against_grid_oracle():
    eb = error_bound_solve(ORB)
    oracle = grid_scan_root(1.2e-2, 7e-3, 7e-3, 1.9)
    for i in range(3):
        assert eb.bound[i] == pytest.approx(oracle, abs=1e-9)
        assert abs(eb.residual[i]) < 1e-12
    # the published parameters give roughly 0.9 m per axis
    assert 0.85 < eb.bound[0] < 0.95


def test_error_bound_attitude_against_grid_oracle():
    eb = error_bound_solve(ATT)
    oracle = grid_scan_root(6e-2, 1.44, 1.44, 1.1)
    for i in range(3):
        assert eb.bound[i] == pytest.approx(oracle, abs=1e-9)
        assert abs(eb.residual[i]) < 1e-12


@settings(deadline=None, max_examples=50)
@given(st.floats(1e-3, 1.0), st.floats(1e-3, 2.0), st.floats(1e-3, 2.0),
       st.floats(1.01, 1.99))
def test_error_bound_residual_property(eps, alpha, beta, rho):
    x = solve_error_bound(eps, alpha, beta, rho)
    assert 0.0 < x <= eps / beta
    assert abs(eps - alpha * x**rho - beta * x) < 1e-9 * max(1.0, eps)


def test_feasibility_orbit_published_threshold():
    rep = param_feasibility(math.sqrt(3.0), ORB, 0.29)
    assert rep.alpha_over_eps[0] == pytest.approx(0.5833333, rel=1e-5)
    assert rep.pass_published
    # exact recomputed threshold: 1 / (sqrt(3)^1.9 + sqrt(3))
    exact = 1.0 / (math.sqrt(3.0)**1.9 + math.sqrt(3.0))
    assert rep.exact_threshold == pytest.approx(exact, rel=1e-12)
    assert rep.exact_threshold == pytest.approx(0.2187, abs=2e-4)
    assert rep.pass_exact
    assert rep.pass_bound


def test_feasibility_attitude_boundary():
    req = math.sin(math.radians(3.0 / (2.0 * math.sqrt(3.0))))
    rep = param_feasibility(req, ATT, 24.0)
    assert rep.alpha_over_eps[0] == pytest.approx(24.0, rel=1e-12)
    assert rep.pass_published            # 24.0 >= 24.0, boundary pass
    exact = 1.0 / (req**1.1 + req)
    assert rep.exact_threshold == pytest.approx(exact, rel=1e-12)
    assert rep.exact_threshold == pytest.approx(39.9, abs=0.1)
    assert not rep.pass_exact            # published ratio misses exact root
    assert not rep.pass_bound


def test_feasibility_rejects_bad_requirement():
    with pytest.raises(ValueError):
        param_feasibility(0.0, ORB, 0.29)


def test_pd_control_trivials():
    assert np.array_equal(pd_control(np.zeros(3), np.zeros(3), 1.0, 2.0),
                          np.zeros(3))
    e = np.array([1.0, -2.0, 0.5])
    assert np.allclose(pd_control(e, np.zeros(3), 0.3, 0.7), -0.3 * e)
    ed = np.array([0.1, 0.2, -0.3])
    u1 = pd_control(e, ed, 0.3, 0.7)
    u2 = pd_control(2 * e, 2 * ed, 0.3, 0.7)
    assert np.allclose(u2, 2 * u1, rtol=1e-15)


def test_lqr_scalar_closed_form():
    q, r = 4.0, 9.0
    K, P, res = lqr_gain(np.zeros((1, 1)), np.eye(1), np.array([[q]]),
                         np.array([[r]]))
    assert P[0, 0] == pytest.approx(math.sqrt(q * r), rel=1e-12)
    assert K[0, 0] == pytest.approx(math.sqrt(q / r), rel=1e-12)
    assert res < 1e-12


def test_lqr_double_integrator_stable():
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    B = np.array([[0.0], [1.0]])
    K, _, res = lqr_gain(A, B, np.eye(2), np.eye(1))
    eigs = np.linalg.eigvals(A - B @ K)
    assert np.all(eigs.real < 0)
    assert res < 1e-10


def test_lqr_orbital_and_attitude_plants():
    n = math.sqrt(3.986004418e14 / (6.928137e6**3))
    A, B = hcw_matrices(n, 2.4)
    Q = np.diag([6.39e-1, 3.83e-1, 5.27e-1, 1.25e-3, 1.25e-3, 1.25e-3])
    R = np.diag([3.47e5] * 3)
    K, P, res = lqr_gain(A, B, Q, R)
    assert res < 1e-8
    assert np.all(np.linalg.eigvals(A - B @ K).real < 0)

    A2, B2 = attitude_linear_matrices(np.diag([8.33e-3, 8.33e-3, 3.33e-3]))
    Q2 = np.diag([3e-7] * 3 + [3e-4] * 3)
    R2 = np.diag([1.16e4] * 3)
    K2, P2, res2 = lqr_gain(A2, B2, Q2, R2)
    assert res2 < 1e-8
    assert np.all(np.linalg.eigvals(A2 - B2 @ K2).real < 0)
    assert care_residual(A2, B2, Q2, R2, P2) < 1e-8


def test_lqr_rejects_nonstabilizable():
    A = np.diag([1.0, 2.0])
    B = np.array([[1.0], [0.0]])   # unstable mode 2.0 unreachable
    with pytest.raises(ValueError):
        lqr_gain(A, B, np.eye(2), np.eye(1))


def test_thrust_actuator_example():
    fired = thrust_actuator(np.array([0.5e-3, -0.004e-3, 0.2e-3]), SPEC)
    assert np.array_equal(fired, [0.5e-3, 0.0, 0.0])


def test_thrust_actuator_saturation():
    fired = thrust_actuator(np.array([2e-3, 0.0, 0.0]), SPEC)
    assert np.array_equal(fired, [1e-3, 0.0, 0.0])


def test_thrust_actuator_half_away_rounding():
    assert thrust_actuator_core(np.array([1.5e-5, 0, 0]), 1e-3, 1e-5)[0] \
        == pytest.approx(2e-5, rel=1e-12)
    assert thrust_actuator_core(np.array([-1.5e-5, 0, 0]), 1e-3, 1e-5)[0] \
        == pytest.approx(-2e-5, rel=1e-12)
    assert thrust_actuator_core(np.array([0.49e-5, 0, 0]), 1e-3, 1e-5)[0] \
        == 0.0


@settings(deadline=None)
@given(st.lists(st.floats(-5e-3, 5e-3), min_size=3, max_size=3).map(np.array))
def test_thrust_actuator_contract(u):
    fired = thrust_actuator(u, SPEC)
    assert fired[2] == 0.0
    assert np.all(np.abs(fired) <= SPEC.u_max * (1 + 1e-12))
    steps = fired / SPEC.u_resolution
    assert np.max(np.abs(steps - np.round(steps))) < 1e-9


def test_wheel_actuator_clamp():
    tau = wheel_actuator(np.array([1e-4, -5e-4, 2.3e-4]), SPEC)
    assert np.allclose(tau, [1e-4, -SPEC.tau_max, 2.3e-4])
    assert np.array_equal(
        wheel_actuator_core(np.array([1e-3, -1e-3, 0.0]), 0.23e-3),
        [0.23e-3, -0.23e-3, 0.0])


def test_on_manifold_lyapunov_rates():
    """Proposition-level check: on s = 0, V' <= -a_min ||e||_{p+1}^{p+1}
    - b_min ||e||_2^2 within 1e-12."""
    rng = np.random.default_rng(0)
    for params, scale in ((ORB, 5.0), (ATT, 0.5)):
        a_min = float(np.min(params.alpha))
        b_min = float(np.min(params.beta))
        for _ in range(50):
            e = rng.uniform(-scale, scale, size=3)
            e_dot = -(params.alpha * np.sign(e) * np.abs(e)**params.rho
                      + params.beta * e)
            v_dot = float(e @ e_dot)
            bound = (-a_min * np.sum(np.abs(e)**(params.rho + 1.0))
                     - b_min * float(e @ e))
            assert v_dot <= bound + 1e-12


def test_params_validation_messages():
    bad = NftsmParams(rho=2.5, alpha=-1.0, beta=7e-3, epsilon=0.0,
                      k_init=0.0, k0=1e-8, eta=-1.0)
    errors = bad.validate()
    assert any("rho" in e for e in errors)
    assert any("alpha" in e for e in errors)
    assert any("epsilon" in e for e in errors)
    assert any("eta" in e for e in errors)
    assert any("K(0)" in e for e in errors)
