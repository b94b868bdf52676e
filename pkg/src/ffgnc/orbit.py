"""Chief Keplerian propagation and nonlinear relative dynamics in LVLH.

The relative model is the exact nonlinear one: the deputy distance from the
Earth's center enters the diagonal terms, so the equations reproduce inertial
two-body differencing to integration accuracy (see the dual-propagation
tests).  State layout mirrors the LVLH convention of :mod:`ffgnc.frames`
(radial, along-track, cross-track).
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .constants import MU_EARTH
from .frames import eci_to_lvlh


@njit(cache=True)
def two_body_accel(r, mu):
    """Point-mass gravitational acceleration -mu r / |r|^3."""
    rn = np.linalg.norm(r)
    return -(mu / (rn * rn * rn)) * r


@njit(cache=True)
def kepler_rk4_step(r, v, h, mu):
    """One fixed RK4 step of the two-body problem (used for reference
    differencing and test oracles)."""
    k1v = two_body_accel(r, mu)
    r2 = r + 0.5 * h * v
    v2 = v + 0.5 * h * k1v
    k2v = two_body_accel(r2, mu)
    r3 = r + 0.5 * h * v2
    v3 = v + 0.5 * h * k2v
    k3v = two_body_accel(r3, mu)
    r4 = r + h * v3
    v4 = v + h * k3v
    k4v = two_body_accel(r4, mu)
    rn = r + (h / 6.0) * (v + 2.0 * v2 + 2.0 * v3 + v4)
    vn = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return rn, vn


@njit(cache=True)
def lvlh_relative_state(r_c, v_c, r_d, v_d):
    """Relative position/velocity of the deputy in the chief LVLH frame.

    The velocity is the LVLH-frame derivative, i.e. inertial differencing
    minus the frame rotation term.
    """
    C, theta_dot = eci_to_lvlh(r_c, v_c)
    r_l = C @ (r_d - r_c)
    v_l = C @ (v_d - v_c)
    # transport term: omega_lvlh = [0, 0, theta_dot]
    v_l[0] += theta_dot * r_l[1]
    v_l[1] -= theta_dot * r_l[0]
    return r_l, v_l


@njit(cache=True)
def inertial_from_lvlh(r_c, v_c, r_l, v_l):
    """Inverse of :func:`lvlh_relative_state`."""
    C, theta_dot = eci_to_lvlh(r_c, v_c)
    rel_i = C.T @ r_l
    v_rot = v_l.copy()
    v_rot[0] -= theta_dot * r_l[1]
    v_rot[1] += theta_dot * r_l[0]
    vel_i = C.T @ v_rot
    return r_c + rel_i, v_c + vel_i


@dataclass
class ChiefState:
    """Inertial chief orbit state with derived LVLH rate terms."""

    r_c: np.ndarray
    v_c: np.ndarray

    @property
    def radius(self) -> float:
        return float(np.linalg.norm(self.r_c))

    @property
    def theta_dot(self) -> float:
        h = np.cross(self.r_c, self.v_c)
        return float(np.linalg.norm(h) / self.radius**2)

    @property
    def theta_ddot(self) -> float:
        # d/dt (h / r^2) with h constant for two-body motion
        rdot = float(self.r_c @ self.v_c) / self.radius
        return -2.0 * self.theta_dot * rdot / self.radius


@dataclass
class RelativeState:
    """Deputy position/velocity relative to the chief, LVLH frame."""

    r: np.ndarray
    v: np.ndarray


@dataclass
class MassModel:
    """Deputy mass with a bounded uncertain offset."""

    m0: float = 2.4
    delta_frac: float = 0.10
    delta_m: float = 0.0

    @property
    def mass(self) -> float:
        return self.m0 + self.delta_m

    def sample(self, rng: np.random.Generator) -> "MassModel":
        dm = float(rng.uniform(-self.delta_frac, self.delta_frac)) * self.m0
        return MassModel(self.m0, self.delta_frac, dm)


def chief_derivative(chief: ChiefState, perturbation=None):
    """Two-body derivative of the chief state, optional extra acceleration."""
    a = two_body_accel(chief.r_c, MU_EARTH)
    if perturbation is not None:
        a = a + perturbation
    return chief.v_c.copy(), a


def relative_matrices(chief: ChiefState, r_d_mag: float):
    """System matrices A1, A2 and drift vector f of the LVLH model."""
    td = chief.theta_dot
    tdd = chief.theta_ddot
    mu_rd3 = MU_EARTH / r_d_mag**3
    A1 = np.array([
        [td * td - mu_rd3, tdd, 0.0],
        [-tdd, td * td - mu_rd3, 0.0],
        [0.0, 0.0, -mu_rd3],
    ])
    A2 = np.array([
        [0.0, 2.0 * td, 0.0],
        [-2.0 * td, 0.0, 0.0],
        [0.0, 0.0, 0.0],
    ])
    r_c = chief.radius
    f = np.array([MU_EARTH / r_c**2 - MU_EARTH * r_c / r_d_mag**3, 0.0, 0.0])
    return A1, A2, f


def deputy_radius(chief: ChiefState, rel: RelativeState) -> float:
    """Deputy distance from the Earth's center from chief geometry + LVLH r."""
    r_c = chief.radius
    x, y, z = rel.r
    return float(np.sqrt((r_c + x) ** 2 + y**2 + z**2))


def relative_accel(chief: ChiefState, rel: RelativeState, u, d, m: float):
    """LVLH relative acceleration r'' = A1 r + A2 r' + f + (u + d)/m."""
    if m <= 0.0:
        raise ValueError("deputy mass must be positive")
    r_d = deputy_radius(chief, rel)
    A1, A2, f = relative_matrices(chief, r_d)
    return A1 @ rel.r + A2 @ rel.v + f + (np.asarray(u) + np.asarray(d)) / m


def orbit_error_derivative(chief: ChiefState, rel_err: RelativeState,
                           reference, u, d, m: float):
    """Acceleration of the LVLH tracking error r_e = r - r_r.

    `reference` provides r_r, v_r (unused) and a_r; the composed state
    r = r_e + r_r feeds the full nonlinear model.
    """
    composed = RelativeState(rel_err.r + reference.r, rel_err.v + reference.v)
    return relative_accel(chief, composed, u, d, m) - reference.a
