"""Vector, matrix and quaternion primitives plus frame transformations.

Conventions used throughout the package:

* Quaternions are length-4 float arrays ``[q1, q2, q3, q4]`` with the vector
  part first and the scalar part last, unit norm.
* ``quat_to_dcm(q)`` maps components of the base frame into the rotated
  frame.  For a body attitude quaternion (body w.r.t. inertial) it returns
  ``C_i^b``; for an error quaternion (body w.r.t. reference) it returns
  ``C_r^b``.
* ``eci_to_lvlh`` builds the radial / along-track / cross-track triad of an
  orbit.  The rows of the returned matrix are the LVLH basis vectors, so the
  matrix maps inertial components into LVLH components.

All functions are pure and operate on plain ``numpy`` arrays; the hot ones
are jitted so the simulation loop can call them without Python overhead.
"""

import numpy as np
from numba import njit

ORTHONORMALITY_TOL = 1e-9
DEGENERACY_TOL = 1e-12


@njit(cache=True)
def skew(v):
    """Skew-symmetric matrix such that skew(v) @ w == cross(v, w)."""
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


@njit(cache=True)
def sig_pow(v, rho):
    """Componentwise |v_i|^rho * sgn(v_i) for rho in (1, 2).

    The restricted exponent range keeps the operator continuously
    differentiable at the origin, which is what removes the singular term
    from the terminal sliding dynamics.
    """
    if not (1.0 < rho < 2.0):
        raise ValueError("sig_pow exponent rho must lie in (1, 2)")
    out = np.empty(3)
    for i in range(3):
        a = abs(v[i])
        if v[i] > 0.0:
            out[i] = a ** rho
        elif v[i] < 0.0:
            out[i] = -(a ** rho)
        else:
            out[i] = 0.0
    return out


@njit(cache=True)
def quat_normalize(q):
    """Return q scaled to unit norm."""
    n = np.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    if n < 1e-12:
        raise ValueError("cannot normalize a near-zero quaternion")
    return q / n


@njit(cache=True)
def quat_to_dcm(q):
    """Rotation matrix C = (q4^2 - qv.qv) I + 2 qv qv^T - 2 q4 skew(qv)."""
    qv = q[0:3]
    q4 = q[3]
    s = q4 * q4 - (qv[0] * qv[0] + qv[1] * qv[1] + qv[2] * qv[2])
    C = 2.0 * np.outer(qv, qv)
    C[0, 0] += s
    C[1, 1] += s
    C[2, 2] += s
    C -= 2.0 * q4 * skew(qv)
    return C


@njit(cache=True)
def dcm_to_quat(C):
    """Quaternion from a rotation matrix, scalar part non-negative.

    Uses the q4 branch when 1 + trace is comfortably positive and falls
    back to the largest-diagonal-element extraction otherwise, so 180 deg
    rotations never divide by a vanishing q4.
    """
    tr = C[0, 0] + C[1, 1] + C[2, 2]
    q = np.empty(4)
    if 1.0 + tr > 1e-8:
        q4 = 0.5 * np.sqrt(1.0 + tr)
        f = 0.25 / q4
        q[0] = f * (C[1, 2] - C[2, 1])
        q[1] = f * (C[2, 0] - C[0, 2])
        q[2] = f * (C[0, 1] - C[1, 0])
        q[3] = q4
    else:
        # largest diagonal element selects the best-conditioned branch
        k = 0
        if C[1, 1] > C[0, 0]:
            k = 1
        if C[2, 2] > C[k, k]:
            k = 2
        i, j, l = k, (k + 1) % 3, (k + 2) % 3
        t = np.sqrt(max(1.0 + C[i, i] - C[j, j] - C[l, l], 0.0))
        qi = 0.5 * t
        f = 0.25 / qi
        q[i] = qi
        q[j] = f * (C[i, j] + C[j, i])
        q[l] = f * (C[i, l] + C[l, i])
        q[3] = f * (C[j, l] - C[l, j])
    if q[3] < 0.0:
        q = -q
    return quat_normalize(q)


@njit(cache=True)
def axis_angle_quat(axis, angle):
    """Unit quaternion for a rotation of `angle` about `axis`."""
    n = np.linalg.norm(axis)
    if n < DEGENERACY_TOL:
        raise ValueError("rotation axis must be nonzero")
    half = 0.5 * angle
    q = np.empty(4)
    s = np.sin(half) / n
    q[0] = axis[0] * s
    q[1] = axis[1] * s
    q[2] = axis[2] * s
    q[3] = np.cos(half)
    return q


@njit(cache=True)
def quat_multiply(q, p):
    """Hamilton product (vector-first convention): rotation p followed by q."""
    qv = q[0:3]
    pv = p[0:3]
    out = np.empty(4)
    out[0:3] = q[3] * pv + p[3] * qv + np.cross(qv, pv)
    out[3] = q[3] * p[3] - qv[0] * pv[0] - qv[1] * pv[1] - qv[2] * pv[2]
    return out


@njit(cache=True)
def triad_frame(rp, rs):
    """Orthonormal frame [r1 r2 r3] built from a primary/secondary pair."""
    np_ = np.linalg.norm(rp)
    c = np.cross(rp, rs)
    nc = np.linalg.norm(c)
    if np_ < DEGENERACY_TOL or nc < DEGENERACY_TOL:
        raise ValueError("TRIAD vectors are collinear or zero")
    r1 = rp / np_
    r2 = c / nc
    d = np.cross(rp, c)
    r3 = d / np.linalg.norm(d)
    C = np.empty((3, 3))
    C[:, 0] = r1
    C[:, 1] = r2
    C[:, 2] = r3
    return C


@njit(cache=True)
def triad(rp_ref, rs_ref, rp_body, rs_body):
    """Rotation from the reference frame to the body frame, C_ref^body.

    Built as C^b (C^i)^T from the two per-frame triads; the primary
    direction is mapped exactly, the secondary only up to the common plane.
    """
    Cb = triad_frame(rp_body, rs_body)
    Ci = triad_frame(rp_ref, rs_ref)
    return Cb @ Ci.T


@njit(cache=True)
def eci_to_lvlh(r, v):
    """LVLH triad of an orbit state: returns (C_i^l, theta_dot).

    Rows of C are radial, along-track and cross-track unit vectors;
    theta_dot = |r x v| / r^2 is the orbital angular rate of the frame.
    """
    rn = np.linalg.norm(r)
    h = np.cross(r, v)
    hn = np.linalg.norm(h)
    if rn < DEGENERACY_TOL or hn < DEGENERACY_TOL:
        raise ValueError("degenerate orbit state: r x v vanishes")
    xhat = r / rn
    zhat = h / hn
    yhat = np.cross(zhat, xhat)
    C = np.empty((3, 3))
    C[0, :] = xhat
    C[1, :] = yhat
    C[2, :] = zhat
    theta_dot = hn / (rn * rn)
    return C, theta_dot


def orthonormality_error(C):
    """Max-abs deviation of C^T C from identity."""
    return float(np.max(np.abs(C.T @ C - np.eye(3))))


def orthonormalize(C):
    """Gram-Schmidt re-orthonormalization, applied only when drift exceeds
    the package tolerance (long composition chains)."""
    if orthonormality_error(C) <= ORTHONORMALITY_TOL:
        return C
    a = C[:, 0] / np.linalg.norm(C[:, 0])
    b = C[:, 1] - (C[:, 1] @ a) * a
    b /= np.linalg.norm(b)
    c = np.cross(a, b)
    return np.column_stack((a, b, c))
