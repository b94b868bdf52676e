"""Sun-pointing reference trajectory and TRIAD reference attitude.

The reference orbit point sits on the chief-to-Sun line at the telescope
focal distance; its derivatives come from central finite differences over
the integration step.  The reference attitude aligns the occulter axis with
the Sun via TRIAD, with a fixed tilt about the occulter boresight whose sign
gives the planar thruster pair authority along the otherwise unreachable
body-z direction.  The reference is piecewise constant between orbit-control
sampling instants, so the reference rates are zero inside hold intervals.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .frames import dcm_to_quat, eci_to_lvlh, triad
from .orbit import kepler_rk4_step

TILT_ANGLE = math.radians(10.0)
REF_RANGE = 40.0
POSITION_REQUIREMENT = 3.0       # m, alignment sphere radius
ATTITUDE_REQUIREMENT_DEG = 3.0   # deg, max pointing error


@dataclass
class ReferenceState:
    """Reference LVLH position, velocity and acceleration."""

    r: np.ndarray
    v: np.ndarray
    a: np.ndarray


@dataclass
class ReferenceAttitude:
    """Reference quaternion with zero rates inside hold intervals."""

    q: np.ndarray
    w: np.ndarray = field(default_factory=lambda: np.zeros(3))
    w_dot: np.ndarray = field(default_factory=lambda: np.zeros(3))
    tilt_sign: int = 1


@njit(cache=True)
def _sun_lvlh_point(t, r_c, v_c, ref_range, lambda0, obliquity,
                    year_seconds):
    """Reference point on the Sun line, LVLH components."""
    lam = lambda0 + 2.0 * np.pi * t / year_seconds
    ce = np.cos(obliquity)
    se = np.sin(obliquity)
    s_hat = np.array([np.cos(lam), np.sin(lam) * ce, np.sin(lam) * se])
    C, _ = eci_to_lvlh(r_c, v_c)
    return ref_range * (C @ s_hat)


@njit(cache=True)
def reference_trajectory_core(t, r_c, v_c, h, mu, ref_range, lambda0,
                              obliquity, year_seconds):
    """Reference position plus central-difference velocity/acceleration.

    Chief states at t +/- h come from single two-body RK4 micro-steps, which
    over-resolve the orbital motion by many orders at h = 0.01 s.
    """
    r0 = _sun_lvlh_point(t, r_c, v_c, ref_range, lambda0, obliquity,
                         year_seconds)
    rp_c, vp_c = kepler_rk4_step(r_c, v_c, h, mu)
    rm_c, vm_c = kepler_rk4_step(r_c, v_c, -h, mu)
    rp = _sun_lvlh_point(t + h, rp_c, vp_c, ref_range, lambda0, obliquity,
                         year_seconds)
    rm = _sun_lvlh_point(t - h, rm_c, vm_c, ref_range, lambda0, obliquity,
                         year_seconds)
    v = (rp - rm) / (2.0 * h)
    a = (rp - 2.0 * r0 + rm) / (h * h)
    return r0, v, a


@njit(cache=True)
def reference_attitude_core(sun_i, C_l_i, tilt_sign, tilt_angle):
    """TRIAD reference attitude quaternion (inertial to body).

    Primary pair: Sun direction versus the tilted occulter axis
    [0, +/-sin(tilt), -1 - cos(tilt)]; secondary pair: LVLH cross-track
    versus body x.
    """
    rp_i = sun_i / np.linalg.norm(sun_i)
    rs_i = C_l_i[:, 2].copy()     # LVLH z expressed in inertial axes
    rp_b = np.array([0.0, tilt_sign * np.sin(tilt_angle),
                     -1.0 - np.cos(tilt_angle)])
    rs_b = np.array([1.0, 0.0, 0.0])
    C_i_b = triad(rp_i, rs_i, rp_b, rs_b)
    return dcm_to_quat(C_i_b)


@njit(cache=True)
def demand_split(u_cmd_l, sun_l):
    """Split an LVLH thrust command into sun-line and transverse demands.

    Returns (p, c): p along the sun line (the occulter axis, reachable only
    through the tilt coupling) and c along e2 = s x x_geo, the in-plane
    direction the y nozzles cover, with x_geo the cross-track direction
    orthogonalized against the sun line (the body-x image).
    """
    p = u_cmd_l[0] * sun_l[0] + u_cmd_l[1] * sun_l[1] + u_cmd_l[2] * sun_l[2]
    x_geo = np.empty(3)
    x_geo[0] = -sun_l[0] * sun_l[2]
    x_geo[1] = -sun_l[1] * sun_l[2]
    x_geo[2] = 1.0 - sun_l[2] * sun_l[2]
    n = np.linalg.norm(x_geo)
    if n < 1e-12:
        return p, 0.0
    x_geo /= n
    e2 = np.cross(sun_l, x_geo)
    c = u_cmd_l[0] * e2[0] + u_cmd_l[1] * e2[1] + u_cmd_l[2] * e2[2]
    return p, c


@njit(cache=True)
def tilt_branch(p, c, prev_sign, resolution, tilt_angle):
    """Tilt-sign selection from the demand split, with hysteresis.

    With branch b the y nozzles realize a sun-line thrust component
    p*sin^2(tilt/2) - c*b*sin(tilt/2)*cos(tilt/2), so matching the demanded
    sign of p requires b = -sign(p*c) whenever the transverse demand c
    drives the nozzle.  The previous branch is retained while the sun-line
    demand is too small to fire a resolution step through the coupling, or
    while the transverse demand is below the firing threshold (then either
    branch realizes the correct sign), which prevents reference chatter.
    """
    coupling = np.sin(0.5 * tilt_angle)
    if abs(p) * coupling < 0.5 * resolution or abs(c) < 0.5 * resolution:
        return prev_sign
    if p * c < 0.0:
        return 1
    return -1


def reference_trajectory(chief, t, h, sun_lambda0=0.0,
                         ref_range=REF_RANGE) -> ReferenceState:
    """Reference state for a chief orbit state at time t (step h)."""
    from . import constants as cst
    r, v, a = reference_trajectory_core(
        t, np.asarray(chief.r_c, dtype=float),
        np.asarray(chief.v_c, dtype=float), h, cst.MU_EARTH, ref_range,
        sun_lambda0, cst.OBLIQUITY, cst.YEAR_SECONDS)
    return ReferenceState(r, v, a)


def reference_attitude(sun_inertial, C_l_i, tilt_sign,
                       tilt_angle=TILT_ANGLE) -> ReferenceAttitude:
    """Reference attitude for a given Sun direction and LVLH orientation."""
    q = reference_attitude_core(np.asarray(sun_inertial, dtype=float),
                                np.ascontiguousarray(C_l_i, dtype=float),
                                int(tilt_sign), float(tilt_angle))
    return ReferenceAttitude(q=q, tilt_sign=int(tilt_sign))


def requirement_check(r, r_r, q_e, pos_req=POSITION_REQUIREMENT,
                      ang_req_deg=ATTITUDE_REQUIREMENT_DEG):
    """Alignment flags: position inside the requirement sphere and pointing
    error angle within the requirement (both inclusive)."""
    orbit_ok = bool(np.linalg.norm(np.asarray(r) - np.asarray(r_r)) <= pos_req)
    q4 = min(max(float(q_e[3]), -1.0), 1.0)
    angle = 2.0 * math.acos(q4)
    att_ok = bool(angle <= math.radians(ang_req_deg))
    return orbit_ok, att_ok
