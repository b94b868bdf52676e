"""Jitted inner loop of the closed-loop simulation.

One run is a fixed-cadence pipeline: every orbit-control sampling instant the
LVLH tracking errors produce a thrust command that is zero-order held,
rotated into body axes with the current attitude, pushed through the thruster
model (z masked, clamped, quantized) and kept constant in body axes for the
whole hold interval; the same instant refreshes the TRIAD reference attitude
(tilt branch chosen from the body-frame command).  The attitude loop runs
every integration step.  States integrate with fixed-step RK4; the attitude
quaternion is renormalized after every step.

The loop writes one wide float64 row per step into a preallocated matrix;
column offsets below are the single source of truth for the log layout.
"""

import numpy as np
from numba import njit
from typing import NamedTuple

from .attitude import attitude_rates, error_quaternion, quat_derivative
from .controllers import thrust_actuator_core, wheel_actuator_core
from .environment import (attitude_disturbance_torque, differential_accel,
                          sun_vector)
from .frames import eci_to_lvlh, quat_to_dcm, sig_pow
from .guidance import (demand_split, reference_attitude_core,
                       reference_trajectory_core, tilt_branch)
from .orbit import lvlh_relative_state, two_body_accel

KIND_NFTSM = 0
KIND_PD = 1
KIND_LQR = 2

COL_T = 0
COL_RE = 1       # 1:4   LVLH position error (m)
COL_VE = 4       # 4:7   LVLH velocity error (m/s)
COL_QE = 7       # 7:11  error quaternion
COL_WE = 11      # 11:14 angular velocity error (rad/s)
COL_SORB = 14    # 14:17 orbital sliding variable
COL_SATT = 17    # 17:20 attitude sliding variable
COL_KORB = 20
COL_KDORB = 21
COL_KATT = 22
COL_KDATT = 23
COL_UCMD = 24    # 24:27 commanded thrust, LVLH (N)
COL_UFB = 27     # 27:30 fired thrust, body (N)
COL_UFL = 30     # 30:33 fired thrust, LVLH (N)
COL_TAUC = 33    # 33:36 commanded wheel torque (N m)
COL_TAUA = 36    # 36:39 applied wheel torque (N m)
COL_DORB = 39    # 39:42 orbit disturbance force, LVLH (N)
COL_DATT = 42    # 42:45 attitude disturbance torque, body (N m)
COL_QR = 45      # 45:49 reference quaternion
COL_BRANCH = 49  # tilt branch sign
COL_RC = 50      # 50:53 chief position (m)
COL_VC = 53      # 53:56 chief velocity (m/s)
COL_RD = 56      # 56:59 deputy position (m)
COL_VD = 59      # 59:62 deputy velocity (m/s)
COL_Q = 62       # 62:66 attitude quaternion
COL_W = 66       # 66:69 body rate (rad/s)
COL_HW = 69      # 69:72 wheel momentum (N m s)
NCOL = 72


class CtrlParams(NamedTuple):
    """One control loop: selector plus every law's parameters."""

    kind: int
    rho: float
    alpha: np.ndarray
    beta: np.ndarray
    eps: float
    k0: float
    eta: float
    k_init: float
    pd_kp: float
    pd_kd: float
    lqr_kp: np.ndarray   # (3, 3) position block of the LQR gain
    lqr_kd: np.ndarray   # (3, 3) velocity block


@njit(cache=True)
def _state_derivative(t, y, u_fired_b, tau_b, m_true, J_true, J_inv, env):
    """Truth-model derivative of the full 22-state vector.

    Chief: two-body.  Deputy: two-body plus the differential perturbation
    plus the body-fixed fired thrust rotated with the instantaneous attitude
    (this is the orbit/attitude coupling).  Attitude: wheel-bearing Euler
    equations under the disturbance torques.
    """
    dy = np.empty(22)
    r_c = y[0:3]
    v_c = y[3:6]
    r_d = y[6:9]
    v_d = y[9:12]
    q = y[12:16]
    w = y[16:19]
    h_w = y[19:22]

    dy[0:3] = v_c
    dy[3:6] = two_body_accel(r_c, env.mu)
    dy[6:9] = v_d
    a_d = two_body_accel(r_d, env.mu)
    a_d = a_d + differential_accel(t, r_c, v_c, r_d, v_d, env)
    C_ib = quat_to_dcm(q)
    a_d = a_d + (C_ib.T @ u_fired_b) / m_true
    dy[9:12] = a_d

    d_att = attitude_disturbance_torque(t, q, r_d, v_d, env, J_true)
    w_dot, h_dot = attitude_rates(w, h_w, J_true, J_inv, tau_b, d_att)
    dy[12:16] = quat_derivative(q, w)
    dy[16:19] = w_dot
    dy[19:22] = h_dot
    return dy


@njit(cache=True)
def _rk4_step(t, y, dt, u_b, tau_b, m_true, J_true, J_inv, env):
    k1 = _state_derivative(t, y, u_b, tau_b, m_true, J_true, J_inv, env)
    k2 = _state_derivative(t + 0.5 * dt, y + 0.5 * dt * k1, u_b, tau_b,
                           m_true, J_true, J_inv, env)
    k3 = _state_derivative(t + 0.5 * dt, y + 0.5 * dt * k2, u_b, tau_b,
                           m_true, J_true, J_inv, env)
    k4 = _state_derivative(t + dt, y + dt * k3, u_b, tau_b, m_true, J_true,
                           J_inv, env)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@njit(cache=True)
def run_loop(n_steps, hold_steps, dt, y0, m_true, J_true, J_inv, orb, att,
             u_max, u_res, tau_max, ref_range, tilt_angle, env, out):
    """Run the closed loop for n_steps and fill `out` (n_steps + 1 rows).

    Row k holds the state at t_k together with the commands applied over
    [t_k, t_k + dt); the final row repeats the last applied commands and
    carries the terminal state diagnostics.  Returns the largest
    pre-renormalization quaternion norm deviation and the number of steps at
    which each disturbance channel sat at its configured cap.
    """
    y = y0.copy()
    k_orb = orb.k_init
    kdot_orb = 0.0
    k_orb_log = orb.k_init if orb.kind == KIND_NFTSM else 0.0
    k_att_log = att.k_init if att.kind == KIND_NFTSM else 0.0
    kdot_att = 0.0
    branch = 1
    # pre-switch reference: positive-branch attitude at t = 0 (matches the
    # initial-state construction)
    C_il0, _ = eci_to_lvlh(y[0:3], y[3:6])
    sun0 = sun_vector(0.0, env.sun_lambda0, env.obliquity, env.year_seconds)
    q_r = reference_attitude_core(sun0, C_il0.T, 1, tilt_angle)
    u_cmd_l = np.zeros(3)
    u_fired_b = np.zeros(3)
    tau_cmd = np.zeros(3)
    tau_app = np.zeros(3)
    k_att = att.k_init
    max_norm_drift = 0.0
    orb_cap_hits = 0
    att_cap_hits = 0

    for k in range(n_steps + 1):
        t = k * dt
        r_c = y[0:3].copy()
        v_c = y[3:6].copy()
        r_d = y[6:9].copy()
        v_d = y[9:12].copy()
        q = y[12:16].copy()
        w = y[16:19].copy()
        h_w = y[19:22].copy()

        # per-step geometry, reference and tracking errors
        C_il, theta_dot = eci_to_lvlh(r_c, v_c)
        r_r, v_r, a_r = reference_trajectory_core(
            t, r_c, v_c, dt, env.mu, ref_range, env.sun_lambda0,
            env.obliquity, env.year_seconds)
        r_l, v_l = lvlh_relative_state(r_c, v_c, r_d, v_d)
        r_e = r_l - r_r
        v_e = v_l - v_r
        s_orb = v_e + orb.alpha * sig_pow(r_e, orb.rho) + orb.beta * r_e

        if k % hold_steps == 0 and k < n_steps:
            # --- orbit control sampling instant ---
            if orb.kind == KIND_NFTSM:
                u_cmd_l = (-k_orb / orb.eps) * s_orb
                k_orb_log = k_orb
                kdot_orb = orb.eta * (np.linalg.norm(u_cmd_l) - k_orb
                                      + orb.k0)
                k_orb = k_orb + hold_steps * dt * kdot_orb
                if k_orb < orb.k0:
                    k_orb = orb.k0
            elif orb.kind == KIND_PD:
                u_cmd_l = -orb.pd_kp * r_e - orb.pd_kd * v_e
            else:
                u_cmd_l = -(orb.lqr_kp @ r_e + orb.lqr_kd @ v_e)
            # branch decision from the attitude-independent demand split
            sun_i = sun_vector(t, env.sun_lambda0, env.obliquity,
                               env.year_seconds)
            sun_l = C_il @ sun_i
            p_dem, c_dem = demand_split(u_cmd_l, sun_l)
            branch = tilt_branch(p_dem, c_dem, branch, u_res, tilt_angle)
            q_r = reference_attitude_core(sun_i, C_il.T, branch, tilt_angle)
            # the propulsion system is commanded in actual body axes
            C_ib = quat_to_dcm(q)
            u_cmd_b = C_ib @ (C_il.T @ u_cmd_l)
            u_fired_b = thrust_actuator_core(u_cmd_b, u_max, u_res)

        # --- attitude loop, every step ---
        q_e = error_quaternion(q, q_r)
        w_e = w.copy()   # piecewise-constant reference: w_r = 0 in holds
        s_att = (w_e + att.alpha * sig_pow(q_e[0:3], att.rho)
                 + att.beta * q_e[0:3])
        if k < n_steps:
            if att.kind == KIND_NFTSM:
                tau_cmd = (-k_att / att.eps) * s_att
                k_att_log = k_att
                kdot_att = att.eta * (np.linalg.norm(tau_cmd) - k_att
                                      + att.k0)
                k_att = k_att + dt * kdot_att
                if k_att < att.k0:
                    k_att = att.k0
            elif att.kind == KIND_PD:
                tau_cmd = -att.pd_kp * q_e[0:3] - att.pd_kd * w_e
            else:
                tau_cmd = -(att.lqr_kp @ q_e[0:3] + att.lqr_kd @ w_e)
            tau_app = wheel_actuator_core(tau_cmd, tau_max)

        # --- disturbances at the step start, for the record ---
        da = differential_accel(t, r_c, v_c, r_d, v_d, env)
        d_orb = env.m_deputy * (C_il @ da)
        if np.linalg.norm(d_orb) >= env.d_force_cap * (1.0 - 1e-12):
            orb_cap_hits += 1
        d_att = attitude_disturbance_torque(t, q, r_d, v_d, env, J_true)
        if np.linalg.norm(d_att) >= env.d_torque_cap * (1.0 - 1e-12):
            att_cap_hits += 1

        C_ib = quat_to_dcm(q)
        u_fired_l = C_il @ (C_ib.T @ u_fired_b)

        row = out[k]
        row[COL_T] = t
        row[COL_RE:COL_RE + 3] = r_e
        row[COL_VE:COL_VE + 3] = v_e
        row[COL_QE:COL_QE + 4] = q_e
        row[COL_WE:COL_WE + 3] = w_e
        row[COL_SORB:COL_SORB + 3] = s_orb
        row[COL_SATT:COL_SATT + 3] = s_att
        row[COL_KORB] = k_orb_log
        row[COL_KDORB] = kdot_orb
        row[COL_KATT] = k_att_log
        row[COL_KDATT] = kdot_att
        row[COL_UCMD:COL_UCMD + 3] = u_cmd_l
        row[COL_UFB:COL_UFB + 3] = u_fired_b
        row[COL_UFL:COL_UFL + 3] = u_fired_l
        row[COL_TAUC:COL_TAUC + 3] = tau_cmd
        row[COL_TAUA:COL_TAUA + 3] = tau_app
        row[COL_DORB:COL_DORB + 3] = d_orb
        row[COL_DATT:COL_DATT + 3] = d_att
        row[COL_QR:COL_QR + 4] = q_r
        row[COL_BRANCH] = branch
        row[COL_RC:COL_RC + 3] = r_c
        row[COL_VC:COL_VC + 3] = v_c
        row[COL_RD:COL_RD + 3] = r_d
        row[COL_VD:COL_VD + 3] = v_d
        row[COL_Q:COL_Q + 4] = q
        row[COL_W:COL_W + 3] = w
        row[COL_HW:COL_HW + 3] = h_w

        if k == n_steps:
            break

        y = _rk4_step(t, y, dt, u_fired_b, tau_app, m_true, J_true, J_inv,
                      env)
        nq = np.sqrt(y[12] ** 2 + y[13] ** 2 + y[14] ** 2 + y[15] ** 2)
        drift = abs(nq - 1.0)
        if drift > max_norm_drift:
            max_norm_drift = drift
        y[12:16] = y[12:16] / nq

    return max_norm_drift, orb_cap_hits, att_cap_hits
