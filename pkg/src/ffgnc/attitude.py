"""Rigid-body attitude kinematics and dynamics with reaction wheels.

The wheel cluster is tracked through its total angular momentum ``h_w`` in
body axes; every torque commanded to the wheels reacts on it, ``h_w' = -u``,
which closes the momentum bookkeeping of the gyroscopic coupling term.
"""

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .frames import quat_normalize, quat_to_dcm, skew


@njit(cache=True)
def quat_derivative(q, w):
    """Quaternion kinematics: qv' = (q4 I + skew(qv)) w / 2, q4' = -qv.w / 2."""
    qv = q[0:3]
    q4 = q[3]
    out = np.empty(4)
    out[0] = 0.5 * (q4 * w[0] - qv[2] * w[1] + qv[1] * w[2])
    out[1] = 0.5 * (qv[2] * w[0] + q4 * w[1] - qv[0] * w[2])
    out[2] = 0.5 * (-qv[1] * w[0] + qv[0] * w[1] + q4 * w[2])
    out[3] = -0.5 * (qv[0] * w[0] + qv[1] * w[1] + qv[2] * w[2])
    return out


@njit(cache=True)
def attitude_rates(w, h_w, J, J_inv, u, d):
    """Euler equations with wheel momentum: returns (w_dot, h_w_dot).

    J w' = -w x (J w + h_w) + u + d, and the wheels absorb the commanded
    torque, h_w' = -u.
    """
    mom = J @ w + h_w
    torque = -np.cross(w, mom) + u + d
    return J_inv @ torque, -u


@njit(cache=True)
def error_quaternion(q, q_r):
    """Tracking error quaternion with the unwinding rule q_e4 >= 0.

    q_ev = q_r4 qv - q4 q_rv - q_rv x qv,  q_e4 = q4 q_r4 + q_rv . qv,
    sign-flipped as a whole whenever the scalar part is negative.
    """
    qv = q[0:3]
    q4 = q[3]
    rv = q_r[0:3]
    r4 = q_r[3]
    out = np.empty(4)
    out[0:3] = r4 * qv - q4 * rv - np.cross(rv, qv)
    out[3] = q4 * r4 + rv[0] * qv[0] + rv[1] * qv[1] + rv[2] * qv[2]
    if out[3] < 0.0:
        out = -out
    return out


@njit(cache=True)
def error_rate(w, w_r, q_e):
    """Angular velocity error w_e = w - C_r^b w_r."""
    C = quat_to_dcm(q_e)
    return w - C @ w_r


@njit(cache=True)
def error_quat_derivative(q_e, w_e):
    """Error kinematics; same structural form as quat_derivative."""
    return quat_derivative(q_e, w_e)


@dataclass
class AttitudeState:
    """Attitude quaternion, body rate and wheel momentum."""

    q: np.ndarray
    w: np.ndarray
    h_w: np.ndarray

    def normalized(self) -> "AttitudeState":
        return AttitudeState(quat_normalize(self.q), self.w, self.h_w)


@dataclass
class InertiaModel:
    """Nominal inertia plus a bounded symmetric uncertain offset."""

    J0: np.ndarray = field(
        default_factory=lambda: np.diag([8.33e-3, 8.33e-3, 3.33e-3]))
    delta_frac: float = 0.10
    delta_J: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))

    @property
    def J(self) -> np.ndarray:
        return self.J0 + self.delta_J

    def sample(self, rng: np.random.Generator) -> "InertiaModel":
        draw = rng.uniform(-self.delta_frac, self.delta_frac, size=(3, 3))
        dJ = 0.5 * (draw + draw.T) * self.J0  # elementwise, symmetrized
        return InertiaModel(self.J0, self.delta_frac, dJ)


@dataclass
class WheelModel:
    """Reaction wheel cluster: inertia for bookkeeping, per-axis torque cap."""

    J_w: np.ndarray = field(default_factory=lambda: np.diag([1e-5] * 3))
    tau_max: float = 0.23e-3


def attitude_derivative(state: AttitudeState, inertia: InertiaModel,
                        wheels: WheelModel, u_att, d_att):
    """Full attitude state derivative: (q_dot, w_dot, h_w_dot)."""
    J = inertia.J
    w_dot, h_dot = attitude_rates(state.w, state.h_w, J, np.linalg.inv(J),
                                  np.asarray(u_att, dtype=float),
                                  np.asarray(d_att, dtype=float))
    return quat_derivative(state.q, state.w), w_dot, h_dot


def error_dynamics_derivative(q_e, w_e, w_r, w_r_dot, J, h_w, u, d):
    """Error kinematics/dynamics propagated directly in error coordinates.

    J w_e' = -(w_e + C w_r) x (J (w_e + C w_r) + h_w) + u + d
             + J (skew(w_e) C w_r - C w_r_dot),  C = C_r^b(q_e).
    """
    C = quat_to_dcm(q_e)
    w = w_e + C @ w_r
    rhs = (-np.cross(w, J @ w + h_w) + u + d
           + J @ (skew(w_e) @ (C @ w_r) - C @ w_r_dot))
    return error_quat_derivative(q_e, w_e), np.linalg.solve(J, rhs)


@njit(cache=True)
def integrate_attitude_free(q0, w0, h_w0, J, J_inv, u, d, dt, n_steps,
                            renormalize):
    """Fixed-step RK4 of the attitude subsystem under constant (u, d).

    Returns the state trajectory (including the initial row) and the largest
    pre-renormalization quaternion norm deviation observed.  Used by the
    conservation and norm-drift checks.
    """
    traj = np.empty((n_steps + 1, 10))
    q = q0.copy()
    w = w0.copy()
    h = h_w0.copy()
    traj[0, 0:4] = q
    traj[0, 4:7] = w
    traj[0, 7:10] = h
    max_drift = 0.0
    for k in range(n_steps):
        k1q = quat_derivative(q, w)
        k1w, k1h = attitude_rates(w, h, J, J_inv, u, d)

        q2 = q + 0.5 * dt * k1q
        w2 = w + 0.5 * dt * k1w
        h2 = h + 0.5 * dt * k1h
        k2q = quat_derivative(q2, w2)
        k2w, k2h = attitude_rates(w2, h2, J, J_inv, u, d)

        q3 = q + 0.5 * dt * k2q
        w3 = w + 0.5 * dt * k2w
        h3 = h + 0.5 * dt * k2h
        k3q = quat_derivative(q3, w3)
        k3w, k3h = attitude_rates(w3, h3, J, J_inv, u, d)

        q4_ = q + dt * k3q
        w4 = w + dt * k3w
        h4 = h + dt * k3h
        k4q = quat_derivative(q4_, w4)
        k4w, k4h = attitude_rates(w4, h4, J, J_inv, u, d)

        q = q + (dt / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
        w = w + (dt / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        h = h + (dt / 6.0) * (k1h + 2.0 * k2h + 2.0 * k3h + k4h)

        nq = np.sqrt(q[0] ** 2 + q[1] ** 2 + q[2] ** 2 + q[3] ** 2)
        drift = abs(nq - 1.0)
        if drift > max_drift:
            max_drift = drift
        if renormalize:
            q = q / nq

        traj[k + 1, 0:4] = q
        traj[k + 1, 4:7] = w
        traj[k + 1, 7:10] = h
    return traj, max_drift
