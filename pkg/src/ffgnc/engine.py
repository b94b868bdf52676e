"""Closed-loop execution: run assembly, fixed-step integration, metrics.

`run_closed_loop` is the single entry point for one simulation: it samples
the seeded uncertainty draws, assembles the initial state from the
configuration, precomputes baseline gains where needed, executes the jitted
inner loop and post-checks the adaptive-gain floor on the produced log.
Runs are deterministic: identical configuration and seed give bit-identical
logs.
"""

import copy
import math
from dataclasses import dataclass, field

import numpy as np

from . import _loop, constants as cst
from ._loop import CtrlParams
from .config import (LQR, NFTSM, PD, SimulationConfig, chief_initial_state,
                     nftsm_params, validate, ConfigError)
from .controllers import attitude_linear_matrices, hcw_matrices, lqr_gain
from .environment import build_env_params
from .frames import (axis_angle_quat, dcm_to_quat, eci_to_lvlh,
                     quat_to_dcm)
from .guidance import reference_attitude_core, reference_trajectory_core
from .orbit import inertial_from_lvlh

_KIND_CODE = {NFTSM: _loop.KIND_NFTSM, PD: _loop.KIND_PD,
              LQR: _loop.KIND_LQR}


def integrate_step(y, f, t, dt, quat_slice=None):
    """One classical fixed-step RK4 step of y' = f(t, y).

    If `quat_slice` is given, that block of the state is renormalized to
    unit length after the step.  dt = 0 returns the state unchanged.
    """
    if dt < 0.0:
        raise ValueError("dt must be nonnegative")
    y = np.asarray(y, dtype=float)
    k1 = np.asarray(f(t, y))
    k2 = np.asarray(f(t + 0.5 * dt, y + 0.5 * dt * k1))
    k3 = np.asarray(f(t + 0.5 * dt, y + 0.5 * dt * k2))
    k4 = np.asarray(f(t + dt, y + dt * k3))
    out = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if quat_slice is not None:
        out[quat_slice] = out[quat_slice] / np.linalg.norm(out[quat_slice])
    return out


@dataclass
class UncertaintyDraws:
    """Sampled run-to-run uncertainties (recorded for fairness checks)."""

    delta_m: float
    delta_J: np.ndarray
    dipole_body: np.ndarray

    def as_tuple(self):
        return (self.delta_m, *np.ravel(self.delta_J),
                *np.ravel(self.dipole_body))


def sample_uncertainties(cfg: SimulationConfig,
                         rng: np.random.Generator) -> UncertaintyDraws:
    """Draw the per-run uncertainty realizations.

    The draw order and count are fixed regardless of which effects are
    enabled, so different controller selections see identical streams.
    """
    m0 = cfg.mass.m0
    dm = float(rng.uniform(-cfg.mass.delta_frac, cfg.mass.delta_frac)) * m0
    J0 = np.diag(cfg.inertia.J0_diag)
    raw = rng.uniform(-cfg.inertia.delta_frac, cfg.inertia.delta_frac,
                      size=(3, 3))
    dJ = 0.5 * (raw + raw.T) * J0
    v = rng.normal(size=3)
    dipole = cfg.environment.dipole_magnitude * v / np.linalg.norm(v)
    return UncertaintyDraws(delta_m=dm, delta_J=dJ, dipole_body=dipole)


@dataclass
class SimulationLog:
    """Fixed-cadence wide log of one run (one row per integration step)."""

    data: np.ndarray
    dt: float
    ts_orb: float
    seed: int
    eps_orb: float
    eps_att: float
    k0_orb: float
    k0_att: float
    orbit_kind: str
    attitude_kind: str
    draws: UncertaintyDraws
    max_quat_drift: float
    orb_cap_hits: int
    att_cap_hits: int

    def col(self, start, width=3):
        return self.data[:, start:start + width]

    @property
    def t(self):
        return self.data[:, _loop.COL_T]

    @property
    def r_e(self):
        return self.col(_loop.COL_RE)

    @property
    def v_e(self):
        return self.col(_loop.COL_VE)

    @property
    def q_e(self):
        return self.col(_loop.COL_QE, 4)

    @property
    def w_e(self):
        return self.col(_loop.COL_WE)

    @property
    def s_orb(self):
        return self.col(_loop.COL_SORB)

    @property
    def s_att(self):
        return self.col(_loop.COL_SATT)

    @property
    def k_orb(self):
        return self.data[:, _loop.COL_KORB]

    @property
    def kdot_orb(self):
        return self.data[:, _loop.COL_KDORB]

    @property
    def k_att(self):
        return self.data[:, _loop.COL_KATT]

    @property
    def kdot_att(self):
        return self.data[:, _loop.COL_KDATT]

    @property
    def u_cmd_l(self):
        return self.col(_loop.COL_UCMD)

    @property
    def u_fired_b(self):
        return self.col(_loop.COL_UFB)

    @property
    def u_fired_l(self):
        return self.col(_loop.COL_UFL)

    @property
    def tau_cmd(self):
        return self.col(_loop.COL_TAUC)

    @property
    def tau_app(self):
        return self.col(_loop.COL_TAUA)

    @property
    def d_orb(self):
        return self.col(_loop.COL_DORB)

    @property
    def d_att(self):
        return self.col(_loop.COL_DATT)

    @property
    def q_r(self):
        return self.col(_loop.COL_QR, 4)

    @property
    def branch(self):
        return self.data[:, _loop.COL_BRANCH]

    @property
    def r_c(self):
        return self.col(_loop.COL_RC)

    @property
    def v_c(self):
        return self.col(_loop.COL_VC)

    @property
    def r_d(self):
        return self.col(_loop.COL_RD)

    @property
    def v_d(self):
        return self.col(_loop.COL_VD)

    @property
    def q(self):
        return self.col(_loop.COL_Q, 4)

    @property
    def w(self):
        return self.col(_loop.COL_W)

    @property
    def h_w(self):
        return self.col(_loop.COL_HW)


@dataclass
class Metrics:
    """Run-level performance indices."""

    aligned_time: float          # s inside the 3 m sphere
    fuel: float                  # N s, sum ||u_fired|| dt
    t_first_align: float         # s, first ||r_e|| <= 3 m (nan if never)
    t_first_s_orb: float         # s, first ||s_orb|| <= eps (nan if never)
    ref_switch_count: int
    duration: float


def compute_metrics(log: SimulationLog, pos_req: float = 3.0,
                    eps_orb: float = None) -> Metrics:
    """Aligned time, fuel and convergence markers from one log.

    The commands logged in row k are held over [t_k, t_k + dt); the terminal
    row contributes state only.
    """
    if log.data.shape[0] < 2:
        raise ValueError("log must contain at least one step")
    eps = log.eps_orb if eps_orb is None else eps_orb
    dt = log.dt
    re_norm = np.linalg.norm(log.r_e, axis=1)
    s_norm = np.linalg.norm(log.s_orb, axis=1)
    aligned = re_norm <= pos_req
    held = aligned[:-1]
    aligned_time = float(dt * np.count_nonzero(held))
    fuel = float(dt * np.sum(np.linalg.norm(log.u_fired_b[:-1], axis=1)))
    t_first_align = (float(log.t[np.argmax(aligned)])
                     if np.any(aligned) else math.nan)
    in_band = s_norm <= eps
    t_first_s = float(log.t[np.argmax(in_band)]) if np.any(in_band) else math.nan
    switches = int(np.count_nonzero(np.diff(log.branch) != 0))
    return Metrics(aligned_time=aligned_time, fuel=fuel,
                   t_first_align=t_first_align, t_first_s_orb=t_first_s,
                   ref_switch_count=switches,
                   duration=float(log.t[-1]))


def _ctrl_params(loop_cfg, kind_code, lqr_K):
    n = loop_cfg.nftsm
    p = nftsm_params(n)
    return CtrlParams(
        kind=kind_code,
        rho=float(n.rho),
        alpha=np.ascontiguousarray(p.alpha),
        beta=np.ascontiguousarray(p.beta),
        eps=float(n.epsilon),
        k0=float(n.k0),
        eta=float(n.eta),
        k_init=float(n.k_init),
        pd_kp=float(loop_cfg.pd.kp),
        pd_kd=float(loop_cfg.pd.kd),
        lqr_kp=np.ascontiguousarray(lqr_K[:, 0:3], dtype=np.float64),
        lqr_kd=np.ascontiguousarray(lqr_K[:, 3:6], dtype=np.float64),
    )


def build_initial_state(cfg: SimulationConfig):
    """Initial 22-state vector: chief, deputy (reference + offset), attitude
    (reference attitude at t=0, positive branch, rotated by the configured
    offset), wheels."""
    r_c0, v_c0 = chief_initial_state(cfg.chief)
    r_r, v_r, _ = reference_trajectory_core(
        0.0, r_c0, v_c0, cfg.dt, cst.MU_EARTH, cfg.ref_range,
        cfg.environment.sun_lambda0, cst.OBLIQUITY, cst.YEAR_SECONDS)
    r_l0 = r_r + np.asarray(cfg.initial.r_e0, dtype=float)
    v_l0 = v_r + np.asarray(cfg.initial.v_e0, dtype=float)
    r_d0, v_d0 = inertial_from_lvlh(r_c0, v_c0, r_l0, v_l0)

    C_il, _ = eci_to_lvlh(r_c0, v_c0)
    from .environment import sun_vector
    sun0 = sun_vector(0.0, cfg.environment.sun_lambda0, cst.OBLIQUITY,
                      cst.YEAR_SECONDS)
    q_r0 = reference_attitude_core(sun0, C_il.T, 1,
                                   math.radians(cfg.tilt_angle_deg))
    axis = np.asarray(cfg.initial.att_offset_axis, dtype=float)
    angle = math.radians(cfg.initial.att_offset_deg)
    if angle != 0.0:
        q_off = axis_angle_quat(axis, angle)
        q0 = dcm_to_quat(quat_to_dcm(q_off) @ quat_to_dcm(q_r0))
    else:
        q0 = q_r0
    y0 = np.concatenate([
        r_c0, v_c0, r_d0, v_d0, q0,
        np.asarray(cfg.initial.omega0, dtype=float),
        np.asarray(cfg.initial.h_w0, dtype=float),
    ])
    return y0


def _lqr_gain_or_zeros(cfg: SimulationConfig, loop: str):
    """Precompute the LQR feedback matrix when that baseline is selected."""
    if loop == "orbit":
        lc = cfg.orbit_controller
        if lc.kind != LQR:
            return np.zeros((3, 6))
        a = cst.R_EARTH + cfg.chief.altitude_m
        n = math.sqrt(cst.MU_EARTH / a**3)
        A, B = hcw_matrices(n, cfg.mass.m0)
    else:
        lc = cfg.attitude_controller
        if lc.kind != LQR:
            return np.zeros((3, 6))
        A, B = attitude_linear_matrices(np.diag(cfg.inertia.J0_diag))
    K, _, _ = lqr_gain(A, B, np.diag(lc.lqr.q_diag), np.diag(lc.lqr.r_diag))
    return K


def run_closed_loop(cfg: SimulationConfig):
    """Execute one closed-loop run; returns (SimulationLog, Metrics)."""
    errors = validate(cfg)
    if errors:
        raise ConfigError(errors)

    rng = np.random.default_rng(cfg.seed)
    draws = sample_uncertainties(cfg, rng)
    m_true = cfg.mass.m0 + draws.delta_m
    J_true = np.diag(cfg.inertia.J0_diag) + draws.delta_J
    J_inv = np.linalg.inv(J_true)

    env = build_env_params(cfg.environment, m_true, draws.dipole_body)
    orb = _ctrl_params(cfg.orbit_controller, _KIND_CODE[cfg.orbit_controller.kind],
                       _lqr_gain_or_zeros(cfg, "orbit"))
    att = _ctrl_params(cfg.attitude_controller,
                       _KIND_CODE[cfg.attitude_controller.kind],
                       _lqr_gain_or_zeros(cfg, "attitude"))

    n_steps = int(round(cfg.duration / cfg.dt))
    hold_steps = int(round(cfg.ts_orb / cfg.dt))
    y0 = build_initial_state(cfg)
    out = np.zeros((n_steps + 1, _loop.NCOL))
    drift, orb_hits, att_hits = _loop.run_loop(
        n_steps, hold_steps, cfg.dt, y0, m_true,
        np.ascontiguousarray(J_true), np.ascontiguousarray(J_inv), orb, att,
        cfg.thruster.u_max, cfg.thruster.u_resolution, cfg.wheels.tau_max,
        cfg.ref_range, math.radians(cfg.tilt_angle_deg), env, out)

    log = SimulationLog(
        data=out, dt=cfg.dt, ts_orb=cfg.ts_orb, seed=cfg.seed,
        eps_orb=cfg.orbit_controller.nftsm.epsilon,
        eps_att=cfg.attitude_controller.nftsm.epsilon,
        k0_orb=cfg.orbit_controller.nftsm.k0,
        k0_att=cfg.attitude_controller.nftsm.k0,
        orbit_kind=cfg.orbit_controller.kind,
        attitude_kind=cfg.attitude_controller.kind,
        draws=draws, max_quat_drift=float(drift),
        orb_cap_hits=int(orb_hits), att_cap_hits=int(att_hits))

    _post_check_gain_floor(log)
    return log, compute_metrics(log)


def _post_check_gain_floor(log: SimulationLog):
    """Adaptive gains never dip under their floors (checked on every run)."""
    if log.orbit_kind == NFTSM and np.min(log.k_orb) < log.k0_orb:
        raise RuntimeError("orbit adaptive gain violated its floor K0")
    if log.attitude_kind == NFTSM and np.min(log.k_att) < log.k0_att:
        raise RuntimeError("attitude adaptive gain violated its floor K0")


@dataclass
class BatchResult:
    """Seeded Monte-Carlo batch: per-run metrics plus aggregate statistics."""

    seeds: list
    runs: list
    stats: dict = field(default_factory=dict)


_BATCH_FIELDS = ("aligned_time", "fuel", "t_first_align", "t_first_s_orb",
                 "ref_switch_count")


def summarize_metrics(runs) -> dict:
    stats = {}
    for name in _BATCH_FIELDS:
        vals = np.array([getattr(m, name) for m in runs], dtype=float)
        finite = vals[np.isfinite(vals)]
        if finite.size == 0:
            finite = np.array([math.nan])
        stats[name] = {
            "mean": float(np.mean(finite)),
            "min": float(np.min(finite)),
            "max": float(np.max(finite)),
            "p50": float(np.percentile(finite, 50)),
            "p90": float(np.percentile(finite, 90)),
        }
    return stats


def monte_carlo_batch(cfg: SimulationConfig, n_runs: int,
                      seed: int = None) -> BatchResult:
    """Independent seeded runs over the uncertainty draws.

    Run i uses seed base + i; the statistics depend only on the set of
    seeds, not their order.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    base = cfg.seed if seed is None else int(seed)
    seeds = [base + i for i in range(n_runs)]
    runs = []
    for s in seeds:
        c = copy.deepcopy(cfg)
        c.seed = s
        _, metrics = run_closed_loop(c)
        runs.append(metrics)
    return BatchResult(seeds=seeds, runs=runs, stats=summarize_metrics(runs))
