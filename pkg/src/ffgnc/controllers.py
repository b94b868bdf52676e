"""Control laws: adaptive smooth NFTSM, PD and LQR baselines, actuators.

The NFTSM loop has seven tunables per axis group: the sliding-surface
exponent rho in (1, 2), the fractional and linear surface gains alpha and
beta, the boundary-layer radius epsilon, and the gain-adaptation triple
(K(0), K0, eta).  The control is u = -(K / epsilon) s with no switching
term anywhere, so the command is smooth; robustness comes from the gain
adaptation K' = eta (||u|| - K + K0), which floors at K0 and stays finite.

The boundary layer fixes an analytic per-axis steady error bound: the unique
positive root of F(x) = epsilon - alpha x^rho - beta x, solved here by
bisection (F is strictly decreasing with F(0) > 0 > F(epsilon/beta)).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.linalg import solve_continuous_are, solve_sylvester

from .frames import sig_pow


@dataclass
class NftsmParams:
    """Sliding-surface and adaptation parameters for one control loop."""

    rho: float
    alpha: np.ndarray
    beta: np.ndarray
    epsilon: float
    k_init: float
    k0: float
    eta: float

    def __post_init__(self):
        self.alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        self.beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        if self.alpha.size == 1:
            self.alpha = np.full(3, float(self.alpha[0]))
        if self.beta.size == 1:
            self.beta = np.full(3, float(self.beta[0]))

    def validate(self) -> list:
        errors = []
        if not (1.0 < self.rho < 2.0):
            errors.append(f"rho out of (1,2): {self.rho}")
        if np.any(self.alpha <= 0.0):
            errors.append("alpha components must be positive")
        if np.any(self.beta <= 0.0):
            errors.append("beta components must be positive")
        if self.epsilon <= 0.0:
            errors.append("epsilon must be positive")
        if self.k0 <= 0.0:
            errors.append("K0 must be positive")
        if self.k_init < self.k0:
            errors.append("K(0) must satisfy K(0) >= K0")
        if self.eta <= 0.0:
            errors.append("eta must be positive")
        return errors


@dataclass
class AdaptiveGainState:
    """Evolving control gain with its floor and adaptation rate."""

    k: float
    k0: float
    eta: float


@dataclass
class ActuatorSpec:
    """Thruster and wheel limits (deputy hardware)."""

    u_max: float = 1.0e-3        # N per axis
    u_resolution: float = 1.0e-5  # N, 0.01 mN
    tau_max: float = 0.23e-3     # N m per wheel axis
    # the propulsion module has nozzles only along body x and y
    masked_axis: int = 2


@dataclass
class ErrorBound:
    """Per-axis steady error bound and the residual of F at the root."""

    bound: np.ndarray
    residual: np.ndarray


@njit(cache=True)
def sliding_variable(e, e_dot, alpha, beta, rho):
    """NFTSM sliding variable s = e' + alpha sig^rho(e) + beta e."""
    return e_dot + alpha * sig_pow(e, rho) + beta * e


def sliding_variable_orb(r_e, v_e, params: NftsmParams):
    """Orbit-loop sliding variable (position error in meters)."""
    return sliding_variable(np.asarray(r_e, dtype=float),
                            np.asarray(v_e, dtype=float),
                            params.alpha, params.beta, params.rho)


def sliding_variable_att(q_ev, w_e, params: NftsmParams):
    """Attitude-loop sliding variable (quaternion vector error)."""
    return sliding_variable(np.asarray(q_ev, dtype=float),
                            np.asarray(w_e, dtype=float),
                            params.alpha, params.beta, params.rho)


@njit(cache=True)
def adaptive_smooth_control(s, k, epsilon):
    """Smooth boundary-layer control u = -(K / epsilon) s."""
    return (-k / epsilon) * s


@njit(cache=True)
def adaptive_gain_euler(k, k0, eta, u_norm, dt):
    """One explicit Euler step of K' = eta (||u|| - K + K0), floored at K0."""
    k_dot = eta * (u_norm - k + k0)
    k_new = k + dt * k_dot
    if k_new < k0:
        k_new = k0
    return k_new, k_dot


def adaptive_gain_step(gain: AdaptiveGainState, u, dt_ctrl: float
                       ) -> AdaptiveGainState:
    """Advance the adaptive gain by one controller period."""
    if dt_ctrl <= 0.0:
        raise ValueError("controller period must be positive")
    u_norm = float(np.linalg.norm(np.asarray(u, dtype=float)))
    k_new, _ = adaptive_gain_euler(gain.k, gain.k0, gain.eta, u_norm, dt_ctrl)
    return AdaptiveGainState(k=k_new, k0=gain.k0, eta=gain.eta)


def solve_error_bound(epsilon: float, alpha: float, beta: float, rho: float,
                      max_iter: int = 200) -> float:
    """Unique positive root of F(x) = epsilon - alpha x^rho - beta x.

    F(0) = epsilon > 0 and F(epsilon/beta) = -alpha (epsilon/beta)^rho < 0
    bracket the root; strict monotonic decrease makes it unique.  Plain
    bisection run to bracket exhaustion.
    """
    if epsilon <= 0.0 or beta <= 0.0 or alpha < 0.0:
        raise ValueError("bound solve needs epsilon > 0, beta > 0, alpha >= 0")

    def f(x):
        return epsilon - alpha * x**rho - beta * x

    lo, hi = 0.0, epsilon / beta
    if alpha == 0.0:
        return hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def error_bound_solve(params: NftsmParams) -> ErrorBound:
    """Per-axis steady error bound for one NFTSM loop."""
    bounds = np.empty(3)
    residual = np.empty(3)
    for i in range(3):
        x = solve_error_bound(params.epsilon, float(params.alpha[i]),
                              float(params.beta[i]), params.rho)
        bounds[i] = x
        residual[i] = (params.epsilon - params.alpha[i] * x**params.rho
                       - params.beta[i] * x)
    return ErrorBound(bound=bounds, residual=residual)


@dataclass
class FeasibilityReport:
    """Parameter ratios versus the requirement-derived thresholds."""

    requirement: float           # per-axis error requirement
    alpha_over_eps: np.ndarray
    beta_over_eps: np.ndarray
    published_threshold: float   # ratio threshold as published
    exact_threshold: float       # ratio threshold from the exact root
    bound: np.ndarray            # solved per-axis error bound
    pass_published: bool
    pass_exact: bool
    pass_bound: bool


def param_feasibility(requirement: float, params: NftsmParams,
                      published_threshold: float) -> FeasibilityReport:
    """Check alpha/eps and beta/eps against the requirement-derived bounds.

    The exact threshold solves 1 - c (R^rho + R) = 0 at the per-axis
    requirement R under the equal-ratio assumption alpha = beta; the
    published threshold is reported alongside for comparison.  `pass_bound`
    is the direct criterion: the solved bound fits inside the requirement.
    """
    if requirement <= 0.0:
        raise ValueError("requirement must be positive")
    r = float(requirement)
    exact = 1.0 / (r**params.rho + r)
    a_ratio = params.alpha / params.epsilon
    b_ratio = params.beta / params.epsilon
    eb = error_bound_solve(params)
    min_ratio = min(float(np.min(a_ratio)), float(np.min(b_ratio)))
    return FeasibilityReport(
        requirement=r,
        alpha_over_eps=a_ratio,
        beta_over_eps=b_ratio,
        published_threshold=float(published_threshold),
        exact_threshold=exact,
        bound=eb.bound,
        pass_published=bool(min_ratio >= published_threshold - 1e-12),
        pass_exact=bool(min_ratio >= exact - 1e-12),
        pass_bound=bool(np.all(eb.bound <= r + 1e-12)),
    )


@njit(cache=True)
def pd_control(e, e_dot, kp, kd):
    """Proportional-derivative law u = -Kp e - Kd e'."""
    return -kp * e - kd * e_dot


def care_residual(A, B, Q, R, P) -> float:
    """Frobenius norm of the continuous algebraic Riccati residual."""
    return float(np.linalg.norm(
        A.T @ P + P @ A - P @ B @ np.linalg.solve(R, B.T @ P) + Q))


def _assert_stabilizable(A, B):
    """PBH test on every closed-right-half-plane eigenvalue of A."""
    n = A.shape[0]
    for lam in np.linalg.eigvals(A):
        if lam.real >= -1e-12:
            M = np.hstack([A - lam * np.eye(n), B])
            if np.linalg.matrix_rank(M, tol=1e-10) < n:
                raise ValueError(
                    "pair (A, B) is not stabilizable: PBH rank deficiency at "
                    f"eigenvalue {lam:.6g}")


def lqr_gain(A, B, Q, R):
    """LQR gain from the continuous algebraic Riccati equation.

    Solves the CARE by the Hamiltonian/Schur method and polishes the
    solution with Newton steps (each one a Sylvester solve) until the
    residual stops improving.  Returns (K, P, residual).
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    Q = np.asarray(Q, dtype=float)
    R = np.asarray(R, dtype=float)
    _assert_stabilizable(A, B)
    P = solve_continuous_are(A, B, Q, R)
    BRinvBT = B @ np.linalg.solve(R, B.T)
    res = care_residual(A, B, Q, R, P)
    for _ in range(5):
        # Newton step: solve (A - G P)^T dP + dP (A - G P) = -residual(P)
        Ac = A - BRinvBT @ P
        F = A.T @ P + P @ A - P @ BRinvBT @ P + Q
        dP = solve_sylvester(Ac.T, Ac, -F)
        P_new = P + dP
        res_new = care_residual(A, B, Q, R, P_new)
        if res_new >= res:
            break
        P, res = P_new, res_new
    K = np.linalg.solve(R, B.T @ P)
    return K, P, res


def hcw_matrices(n: float, mass: float):
    """Hill-Clohessy-Wiltshire linearization about the circular chief.

    State [r_e; r_e'], input force in LVLH axes (radial, along-track,
    cross-track), nominal mass in the input matrix.
    """
    A = np.zeros((6, 6))
    A[0:3, 3:6] = np.eye(3)
    A[3, 0] = 3.0 * n * n
    A[5, 2] = -n * n
    A[3, 4] = 2.0 * n
    A[4, 3] = -2.0 * n
    B = np.zeros((6, 3))
    B[3:6, :] = np.eye(3) / mass
    return A, B


def attitude_linear_matrices(J0):
    """Small-angle attitude linearization: q_ev' = w_e / 2, J0 w_e' = u."""
    A = np.zeros((6, 6))
    A[0:3, 3:6] = 0.5 * np.eye(3)
    B = np.zeros((6, 3))
    B[3:6, :] = np.linalg.inv(J0)
    return A, B


@njit(cache=True)
def thrust_actuator_core(u_body, u_max, u_resolution):
    """Mask body z, clamp per axis, quantize to the thrust resolution.

    Rounding is half away from zero, so commands below half a resolution
    step produce no firing at all.
    """
    out = np.zeros(3)
    for i in range(2):
        c = u_body[i]
        if c > u_max:
            c = u_max
        elif c < -u_max:
            c = -u_max
        steps = math.floor(abs(c) / u_resolution + 0.5)
        mag = steps * u_resolution
        out[i] = mag if c >= 0.0 else -mag
    return out


def thrust_actuator(u_cmd_body, spec: ActuatorSpec):
    """Fired thrust for a commanded body-frame force."""
    return thrust_actuator_core(np.asarray(u_cmd_body, dtype=float),
                                spec.u_max, spec.u_resolution)


@njit(cache=True)
def wheel_actuator_core(tau_cmd, tau_max):
    """Per-axis wheel torque clamp."""
    out = np.empty(3)
    for i in range(3):
        c = tau_cmd[i]
        if c > tau_max:
            c = tau_max
        elif c < -tau_max:
            c = -tau_max
        out[i] = c
    return out


def wheel_actuator(tau_cmd, spec: ActuatorSpec):
    """Applied wheel torque for a commanded torque."""
    return wheel_actuator_core(np.asarray(tau_cmd, dtype=float), spec.tau_max)
