"""External disturbance forces and torques.

Desk-scale analytic stand-ins for the flight environment: J2-only
geopotential, exponential atmosphere with co-rotation, constant-flux solar
radiation pressure with a cylindrical shadow, point-mass Sun/Moon third-body
gravity on circular analytic tracks, gravity-gradient torque and a tilted
rotating dipole field for the residual-magnetism torque.  Everything is
deterministic given the configuration; the only sampled quantities are the
uncertainty draws handled by the simulation engine.

Orbit-level disturbances enter the relative dynamics differentially
(deputy minus chief), expressed as a force on the deputy; attitude
disturbances are torques in deputy body axes.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from numba import njit

from . import constants as cst
from .frames import quat_to_dcm


class EnvParams(NamedTuple):
    """Flattened environment parameters consumed by the jitted models."""

    en_j2: bool
    en_drag: bool
    en_srp: bool
    en_third_sun: bool
    en_third_moon: bool
    en_gravity_gradient: bool
    en_magnetic: bool
    mu: float
    r_earth: float
    j2: float
    omega_earth: float
    rho0: float
    h0: float
    h_scale: float
    cd_a_deputy: float
    cd_a_chief: float
    cr_a_deputy: float
    cr_a_chief: float
    p_srp: float
    au: float
    mu_sun: float
    sun_lambda0: float
    obliquity: float
    year_seconds: float
    mu_moon: float
    moon_dist: float
    moon_period: float
    moon_lambda0: float
    b0: float
    dipole_tilt: float
    gst0: float
    dipole_body: np.ndarray
    cp_offset: np.ndarray
    m_deputy: float
    m_chief: float
    d_force_cap: float
    d_torque_cap: float


@dataclass
class EnvironmentConfig:
    """Disturbance switches and model parameters (run configuration)."""

    enable_j2: bool = True
    enable_drag: bool = True
    enable_srp: bool = True
    enable_third_body_sun: bool = True
    enable_third_body_moon: bool = True
    enable_gravity_gradient: bool = True
    enable_magnetic: bool = True

    drag_coeff: float = 2.2
    drag_area_deputy: float = 0.02     # m^2, 2U broadside
    drag_area_chief: float = 0.01      # m^2, 1U
    srp_coeff: float = 1.5
    srp_area_deputy: float = 0.02
    srp_area_chief: float = 0.01
    chief_mass: float = 1.33           # kg, 1U

    rho0: float = 1.80e-13             # kg/m^3 at the reference altitude
    h0: float = 550.0e3                # m, reference altitude
    h_scale: float = 70.0e3            # m, exponential scale height

    dipole_magnitude: float = 1.0e-3   # A m^2, residual dipole
    cp_offset: list = field(default_factory=lambda: [0.02, 0.0, 0.0])

    sun_lambda0: float = 0.0           # rad, ecliptic longitude at epoch
    moon_lambda0: float = 0.0
    gst0: float = 0.0                  # rad, Greenwich angle at epoch

    d_force_cap: float = 1.0e-5        # N, assumed orbit disturbance bound
    d_torque_cap: float = 1.0e-6       # N m, assumed attitude torque bound


def build_env_params(config: EnvironmentConfig, m_deputy: float,
                     dipole_body: np.ndarray) -> EnvParams:
    """Flatten an EnvironmentConfig (plus sampled quantities) for the kernel."""
    return EnvParams(
        en_j2=bool(config.enable_j2),
        en_drag=bool(config.enable_drag),
        en_srp=bool(config.enable_srp),
        en_third_sun=bool(config.enable_third_body_sun),
        en_third_moon=bool(config.enable_third_body_moon),
        en_gravity_gradient=bool(config.enable_gravity_gradient),
        en_magnetic=bool(config.enable_magnetic),
        mu=cst.MU_EARTH,
        r_earth=cst.R_EARTH,
        j2=cst.J2_EARTH,
        omega_earth=cst.OMEGA_EARTH,
        rho0=float(config.rho0),
        h0=float(config.h0),
        h_scale=float(config.h_scale),
        cd_a_deputy=float(config.drag_coeff * config.drag_area_deputy),
        cd_a_chief=float(config.drag_coeff * config.drag_area_chief),
        cr_a_deputy=float(config.srp_coeff * config.srp_area_deputy),
        cr_a_chief=float(config.srp_coeff * config.srp_area_chief),
        p_srp=cst.P_SRP,
        au=cst.AU,
        mu_sun=cst.MU_SUN,
        sun_lambda0=float(config.sun_lambda0),
        obliquity=cst.OBLIQUITY,
        year_seconds=cst.YEAR_SECONDS,
        mu_moon=cst.MU_MOON,
        moon_dist=cst.MOON_DIST,
        moon_period=cst.MOON_PERIOD,
        moon_lambda0=float(config.moon_lambda0),
        b0=cst.B0_EQUATOR,
        dipole_tilt=cst.DIPOLE_TILT,
        gst0=float(config.gst0),
        dipole_body=np.ascontiguousarray(dipole_body, dtype=np.float64),
        cp_offset=np.ascontiguousarray(config.cp_offset, dtype=np.float64),
        m_deputy=float(m_deputy),
        m_chief=float(config.chief_mass),
        d_force_cap=float(config.d_force_cap),
        d_torque_cap=float(config.d_torque_cap),
    )


@njit(cache=True)
def sun_vector(t, lambda0, obliquity, year_seconds):
    """Unit Sun direction, inertial: circular ecliptic mean-longitude model.

    At the vernal-equinox epoch (lambda0 = 0, t = 0) the Sun lies along +x.
    """
    lam = lambda0 + 2.0 * np.pi * t / year_seconds
    ce = np.cos(obliquity)
    se = np.sin(obliquity)
    return np.array([np.cos(lam), np.sin(lam) * ce, np.sin(lam) * se])


@njit(cache=True)
def moon_position(t, lambda0, obliquity, dist, period):
    """Moon position on a circular ecliptic track, inertial frame (m)."""
    lam = lambda0 + 2.0 * np.pi * t / period
    ce = np.cos(obliquity)
    se = np.sin(obliquity)
    return dist * np.array([np.cos(lam), np.sin(lam) * ce, np.sin(lam) * se])


@njit(cache=True)
def j2_accel(r, mu, r_earth, j2):
    """J2 zonal-harmonic acceleration, inertial frame."""
    rn = np.linalg.norm(r)
    zr = r[2] / rn
    k = -1.5 * j2 * mu * r_earth * r_earth / rn**4
    out = np.empty(3)
    out[0] = k * (r[0] / rn) * (1.0 - 5.0 * zr * zr)
    out[1] = k * (r[1] / rn) * (1.0 - 5.0 * zr * zr)
    out[2] = k * (r[2] / rn) * (3.0 - 5.0 * zr * zr)
    return out


@njit(cache=True)
def third_body_accel(r, r_body, mu_body):
    """Differential point-mass attraction of a third body."""
    d = r_body - r
    dn = np.linalg.norm(d)
    bn = np.linalg.norm(r_body)
    return mu_body * (d / dn**3 - r_body / bn**3)


@njit(cache=True)
def atmosphere_density(h, rho0, h0, h_scale):
    """Exponential density profile rho0 * exp(-(h - h0) / H)."""
    return rho0 * np.exp(-(h - h0) / h_scale)


@njit(cache=True)
def drag_force(r, v, cd_a, rho0, h0, h_scale, r_earth, omega_earth):
    """Atmospheric drag force (N) with a co-rotating atmosphere."""
    rn = np.linalg.norm(r)
    rho = atmosphere_density(rn - r_earth, rho0, h0, h_scale)
    # v_rel = v - omega_earth x r, omega along +z
    v_rel = np.empty(3)
    v_rel[0] = v[0] + omega_earth * r[1]
    v_rel[1] = v[1] - omega_earth * r[0]
    v_rel[2] = v[2]
    return (-0.5 * rho * cd_a * np.linalg.norm(v_rel)) * v_rel


@njit(cache=True)
def in_cylindrical_shadow(r, sun_dir, r_earth):
    """True when r is inside the Earth's cylindrical shadow."""
    along = r[0] * sun_dir[0] + r[1] * sun_dir[1] + r[2] * sun_dir[2]
    if along >= 0.0:
        return False
    lateral2 = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]) - along * along
    return lateral2 < r_earth * r_earth


@njit(cache=True)
def srp_force(sun_dir, cr_a, p_srp, in_shadow):
    """Solar radiation pressure force (N), anti-sunward, zero in shadow."""
    if in_shadow:
        return np.zeros(3)
    return (-p_srp * cr_a) * sun_dir


@njit(cache=True)
def gravity_gradient_torque(q, r_inertial, J, mu):
    """Gravity-gradient torque 3 mu / r^3 * o x (J o), o = body nadir."""
    rn = np.linalg.norm(r_inertial)
    C = quat_to_dcm(q)
    o = -(C @ r_inertial) / rn
    return (3.0 * mu / rn**3) * np.cross(o, J @ o)


@njit(cache=True)
def dipole_field(r, t, b0, r_earth, tilt, gst0, omega_earth):
    """Tilted rotating dipole geomagnetic field, inertial frame (T)."""
    theta = gst0 + omega_earth * t
    m_hat = np.array([
        -np.sin(tilt) * np.cos(theta),
        -np.sin(tilt) * np.sin(theta),
        -np.cos(tilt),
    ])
    rn = np.linalg.norm(r)
    r_hat = r / rn
    k = b0 * (r_earth / rn) ** 3
    md = m_hat[0] * r_hat[0] + m_hat[1] * r_hat[1] + m_hat[2] * r_hat[2]
    return k * (3.0 * md * r_hat - m_hat)


@njit(cache=True)
def magnetic_torque(q, r_inertial, dipole_body, t, b0, r_earth, tilt, gst0,
                    omega_earth):
    """Residual-dipole torque m x B in body axes."""
    B_i = dipole_field(r_inertial, t, b0, r_earth, tilt, gst0, omega_earth)
    B_b = quat_to_dcm(q) @ B_i
    return np.cross(dipole_body, B_b)


@njit(cache=True)
def _perturb_accel_craft(t, r, v, cd_a, cr_a, mass, env):
    """Perturbing acceleration felt by one spacecraft, inertial frame."""
    a = np.zeros(3)
    if env.en_j2:
        a += j2_accel(r, env.mu, env.r_earth, env.j2)
    if env.en_third_sun:
        s_hat = sun_vector(t, env.sun_lambda0, env.obliquity,
                           env.year_seconds)
        a += third_body_accel(r, env.au * s_hat, env.mu_sun)
    if env.en_third_moon:
        r_m = moon_position(t, env.moon_lambda0, env.obliquity,
                            env.moon_dist, env.moon_period)
        a += third_body_accel(r, r_m, env.mu_moon)
    if env.en_drag:
        a += drag_force(r, v, cd_a, env.rho0, env.h0, env.h_scale,
                        env.r_earth, env.omega_earth) / mass
    if env.en_srp:
        s_hat = sun_vector(t, env.sun_lambda0, env.obliquity,
                           env.year_seconds)
        shadow = in_cylindrical_shadow(r, s_hat, env.r_earth)
        a += srp_force(s_hat, cr_a, env.p_srp, shadow) / mass
    return a


@njit(cache=True)
def differential_accel(t, r_c, v_c, r_d, v_d, env):
    """Deputy-minus-chief perturbing acceleration, inertial frame.

    This is the quantity that enters the relative dynamics: d_orb equals it
    times the deputy mass.  The magnitude is clipped at the configured force
    cap so the bounded-disturbance assumption holds by construction.
    """
    a = (_perturb_accel_craft(t, r_d, v_d, env.cd_a_deputy, env.cr_a_deputy,
                              env.m_deputy, env)
         - _perturb_accel_craft(t, r_c, v_c, env.cd_a_chief, env.cr_a_chief,
                                env.m_chief, env))
    f = env.m_deputy * np.linalg.norm(a)
    if f > env.d_force_cap:
        a = a * (env.d_force_cap / f)
    return a


@njit(cache=True)
def attitude_disturbance_torque(t, q, r_d, v_d, env, J):
    """Total disturbance torque on the deputy, body axes (N m).

    Gravity gradient, residual magnetic dipole, and drag/SRP forces applied
    at a fixed center-of-pressure offset.  Clipped at the torque cap.
    """
    tau = np.zeros(3)
    if env.en_gravity_gradient:
        tau += gravity_gradient_torque(q, r_d, J, env.mu)
    if env.en_magnetic:
        tau += magnetic_torque(q, r_d, env.dipole_body, t, env.b0,
                               env.r_earth, env.dipole_tilt, env.gst0,
                               env.omega_earth)
    if env.en_drag or env.en_srp:
        C = quat_to_dcm(q)
        f_i = np.zeros(3)
        if env.en_drag:
            f_i += drag_force(r_d, v_d, env.cd_a_deputy, env.rho0, env.h0,
                              env.h_scale, env.r_earth, env.omega_earth)
        if env.en_srp:
            s_hat = sun_vector(t, env.sun_lambda0, env.obliquity,
                               env.year_seconds)
            shadow = in_cylindrical_shadow(r_d, s_hat, env.r_earth)
            f_i += srp_force(s_hat, env.cr_a_deputy, env.p_srp, shadow)
        tau += np.cross(env.cp_offset, C @ f_i)
    n = np.linalg.norm(tau)
    if n > env.d_torque_cap:
        tau = tau * (env.d_torque_cap / n)
    return tau


@dataclass
class DisturbanceSample:
    """Disturbance force on the relative dynamics (LVLH, N) and torque
    (body, N m) at one instant."""

    d_orb: np.ndarray
    d_att: np.ndarray


def assemble_disturbances(t, r_c, v_c, r_d, v_d, q, J, env: EnvParams,
                          C_i_l=None) -> DisturbanceSample:
    """Evaluate the full disturbance sample at one state.

    `env` comes from :func:`build_env_params`; `C_i_l` may be supplied to
    avoid recomputing the LVLH triad.
    """
    if C_i_l is None:
        from .frames import eci_to_lvlh
        C_i_l, _ = eci_to_lvlh(r_c, v_c)
    da = differential_accel(t, r_c, v_c, r_d, v_d, env)
    d_orb = env.m_deputy * (C_i_l @ da)
    d_att = attitude_disturbance_torque(t, q, r_d, v_d, env, J)
    return DisturbanceSample(d_orb=d_orb, d_att=d_att)
