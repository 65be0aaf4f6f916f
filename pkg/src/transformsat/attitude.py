"""Euler-angle attitude kinematics for the 2-1-3 sequence.

The direction cosine matrix maps inertial components to body components,

    C(phi) = R3(phi3) @ R1(phi2) @ R2(phi1),

with frame-rotation elementary matrices. The sun is fixed along the inertial
+z axis, so its body-frame direction is the third column of C.
"""

from __future__ import annotations

import numpy as np

GIMBAL_LIMIT = np.deg2rad(89.0)
_COS_GIMBAL_LIMIT = np.cos(GIMBAL_LIMIT)


class GimbalLockError(ValueError):
    """Raised when the middle Euler angle is too close to +-90 deg."""


def skew(v) -> np.ndarray:
    """Cross-product matrix, ``skew(a) @ b == np.cross(a, b)``."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rot1(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]])


def rot2(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])


def rot3(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])


def _drot1(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[0.0, 0.0, 0.0], [0.0, -s, c], [0.0, -c, -s]])


def _drot2(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[-s, 0.0, -c], [0.0, 0.0, 0.0], [c, 0.0, -s]])


def _drot3(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[-s, c, 0.0], [-c, -s, 0.0], [0.0, 0.0, 0.0]])


def check_gimbal(phi) -> None:
    if abs(np.cos(phi[1])) <= _COS_GIMBAL_LIMIT:
        raise GimbalLockError(
            f"phi2 = {np.rad2deg(phi[1]):.3f} deg is within 1 deg of gimbal lock"
        )


def dcm_from_euler(phi) -> np.ndarray:
    """Body-from-inertial DCM for 2-1-3 Euler angles (rad)."""
    phi = np.asarray(phi, dtype=float)
    check_gimbal(phi)
    return rot3(phi[2]) @ rot1(phi[1]) @ rot2(phi[0])


def dcm_partials(phi) -> np.ndarray:
    """Stack of dC/dphi_j, shape (3, 3, 3) indexed [j]."""
    r1, r2, r3 = rot2(phi[0]), rot1(phi[1]), rot3(phi[2])
    return np.stack([
        r3 @ r2 @ _drot2(phi[0]),
        r3 @ _drot1(phi[1]) @ r1,
        _drot3(phi[2]) @ r2 @ r1,
    ])


def euler_rate_inverse(phi) -> np.ndarray:
    """W(phi) with omega = W @ phi_dot (omega in body frame)."""
    r3 = rot3(phi[2])
    return np.column_stack([r3 @ rot1(phi[1])[:, 1], r3[:, 0], [0.0, 0.0, 1.0]])


def euler_rate_matrix(phi) -> np.ndarray:
    """C_phi such that phi_dot = C_phi @ omega."""
    phi = np.asarray(phi, dtype=float)
    check_gimbal(phi)
    c2, s2 = np.cos(phi[1]), np.sin(phi[1])
    c3, s3 = np.cos(phi[2]), np.sin(phi[2])
    # closed-form inverse of euler_rate_inverse(phi)
    return np.array([
        [s3 / c2, c3 / c2, 0.0],
        [c3, -s3, 0.0],
        [s3 * s2 / c2, c3 * s2 / c2, 1.0],
    ])


def sun_vector_body(phi) -> np.ndarray:
    """Unit sun direction in the body frame (inertial sun along +z)."""
    c1, s1 = np.cos(phi[0]), np.sin(phi[0])
    c2, s2 = np.cos(phi[1]), np.sin(phi[1])
    c3, s3 = np.cos(phi[2]), np.sin(phi[2])
    return np.array([
        c1 * s2 * s3 - s1 * c3,
        c1 * s2 * c3 + s1 * s3,
        c1 * c2,
    ])


def sun_vector_partials(phi) -> np.ndarray:
    """Columns ds/dphi_1, ds/dphi_2, ds/dphi_3 of the body sun vector."""
    c1, s1 = np.cos(phi[0]), np.sin(phi[0])
    c2, s2 = np.cos(phi[1]), np.sin(phi[1])
    c3, s3 = np.cos(phi[2]), np.sin(phi[2])
    return np.column_stack([
        [-s1 * s2 * s3 - c1 * c3, -s1 * s2 * c3 + c1 * s3, -s1 * c2],
        [c1 * c2 * s3, c1 * c2 * c3, -c1 * s2],
        [c1 * s2 * c3 + s1 * s3, -c1 * s2 * s3 + s1 * c3, 0.0],
    ])


def align_body_axis(direction, roll: float = 0.0) -> np.ndarray:
    """Euler angles putting the body +z axis along an inertial ``direction``.

    The body z axis in inertial components is ``[cos p2 sin p1, -sin p2,
    cos p2 cos p1]``, independent of phi3, so ``roll`` is returned as phi3.
    """
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    phi2 = -np.arcsin(np.clip(d[1], -1.0, 1.0))
    phi1 = np.arctan2(d[0], d[2])
    return np.array([phi1, phi2, roll])
