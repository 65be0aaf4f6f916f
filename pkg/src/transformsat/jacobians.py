"""Analytic derivatives of the front-face SRP wrench.

The differentiable model keeps one front face per body and assumes it is
sunlit; its force uses the smooth expression without the ``n.s < 0``
cutoff. All blocks are in the body-0 frame.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .attitude import sun_vector_body, sun_vector_partials
from .model import KinematicState, SpacecraftModel, forward_kinematics
from .srp import face_forces, pressure, total_wrench


class FrontFaceWarning(UserWarning):
    """A front face is not sunlit, so the analytic Jacobian is model-inconsistent."""


@dataclass(frozen=True, eq=False)
class WrenchJacobian:
    dT_dphi: np.ndarray
    dT_dtheta: np.ndarray
    dF_dphi: np.ndarray
    dF_dtheta: np.ndarray

    def blocks(self) -> dict[str, np.ndarray]:
        return {"dT_dphi": self.dT_dphi, "dT_dtheta": self.dT_dtheta,
                "dF_dphi": self.dF_dphi, "dF_dtheta": self.dF_dtheta}


def _p(env) -> float:
    return float(env) if isinstance(env, (int, float)) else pressure(env)


class _FrontFaces:
    """Per-front-face intermediates shared by the Jacobian blocks."""

    def __init__(self, model: SpacecraftModel, kin: KinematicState, phi, env):
        idx = np.flatnonzero(model.surf_front)
        self.owner = model.surf_owner[idx]
        self.n = kin.surface_normal[idx]
        self.center = kin.surface_center[idx]
        self.area = model.surf_area[idx]
        c_spe, c_dif, c_abs = model.surf_optics[idx].T
        self.c_spe, self.c_dif, self.c_abs = c_spe, c_dif, c_abs
        self.p = _p(env)
        self.s = sun_vector_body(phi)
        self.cos = self.n @ self.s
        if np.any(self.cos <= 0):
            bad = self.owner[self.cos <= 0].tolist()
            warnings.warn(f"front faces of bodies {bad} are not sunlit", FrontFaceWarning, stacklevel=3)
        self.arm = self.center - kin.com_total
        self.force = face_forces(self.p, self.n, self.area, model.surf_optics[idx], self.s, cutoff=False)

    def dforce_dphi(self, phi) -> np.ndarray:
        """(faces, 3, 3): column j is dF_i/dphi_j."""
        ds = sun_vector_partials(phi)  # (3, 3) columns
        n, s, cos = self.n, self.s, self.cos
        n_ds = n @ ds  # (faces, 3): n.ds_j
        p_n1 = 2.0 * self.p * self.c_spe
        p_n2 = 2.0 / 3.0 * self.p * self.c_dif
        p_s = self.p * (self.c_abs + self.c_dif)
        dn1 = 2.0 * (cos * 1.0)[:, None, None] * n_ds[:, None, :] * n[:, :, None]
        dn2 = n_ds[:, None, :] * n[:, :, None]
        dsi = n_ds[:, None, :] * s[None, :, None] + cos[:, None, None] * ds[None, :, :]
        return -(p_n1[:, None, None] * dn1 + p_n2[:, None, None] * dn2
                 + p_s[:, None, None] * dsi) * self.area[:, None, None]

    def dforce_dnormal(self) -> np.ndarray:
        """(faces, 3, 3) derivative of each face force w.r.t. its normal."""
        n, s, cos = self.n, self.s, self.cos
        k = 2.0 / 3.0 * self.c_dif
        eye = np.eye(3)
        ss = np.outer(s, s)
        ns = n[:, :, None] * s[None, None, :]
        d = ((self.c_abs + self.c_dif)[:, None, None] * ss
             + (k + 4.0 * cos * self.c_spe)[:, None, None] * ns
             + (cos * (k + 2.0 * cos * self.c_spe))[:, None, None] * eye)
        return -(self.p * self.area)[:, None, None] * d


def _attitude_blocks(ff: _FrontFaces, phi):
    dfi = ff.dforce_dphi(phi)
    d_f = dfi.sum(axis=0)
    d_t = np.cross(ff.arm[:, :, None], dfi, axis=1).sum(axis=0)
    return d_t, d_f


def _joint_blocks(model: SpacecraftModel, kin: KinematicState, ff: _FrontFaces):
    m = model.n_joints
    d_t = np.zeros((3, m))
    d_f = np.zeros((3, m))
    if m == 0:
        return d_t, d_f
    dfdn = ff.dforce_dnormal()
    m_c = kin.total_mass
    for k in range(m):
        lam = kin.joint_axis[k]
        h = kin.hinge_point[k]
        d_rc = kin.group_mass[k] / m_c * np.cross(lam, kin.group_com[k] - h)
        inside = model.membership[k][ff.owner]
        d_center = np.where(inside[:, None], np.cross(lam, ff.center - h), 0.0)
        d_n = np.where(inside[:, None], np.cross(lam, ff.n), 0.0)
        d_fi = np.einsum("fij,fj->fi", dfdn, d_n)
        d_t[:, k] = (np.cross(d_center - d_rc, ff.force) + np.cross(ff.arm, d_fi)).sum(axis=0)
        d_f[:, k] = d_fi.sum(axis=0)
    return d_t, d_f


def torque_jacobian_attitude(model: SpacecraftModel, kin: KinematicState, phi, env) -> np.ndarray:
    return _attitude_blocks(_FrontFaces(model, kin, phi, env), phi)[0]


def torque_jacobian_joints(model: SpacecraftModel, kin: KinematicState, phi, env) -> np.ndarray:
    return _joint_blocks(model, kin, _FrontFaces(model, kin, phi, env))[0]


def force_jacobians(model: SpacecraftModel, kin: KinematicState, phi, env):
    """``(dF/dphi, dF/dtheta)`` of the front-face force, body frame."""
    ff = _FrontFaces(model, kin, phi, env)
    return _attitude_blocks(ff, phi)[1], _joint_blocks(model, kin, ff)[1]


def wrench_jacobian(model: SpacecraftModel, kin: KinematicState, phi, env) -> WrenchJacobian:
    """All four analytic blocks from one pass over the front faces."""
    ff = _FrontFaces(model, kin, phi, env)
    t_phi, f_phi = _attitude_blocks(ff, phi)
    t_th, f_th = _joint_blocks(model, kin, ff)
    return WrenchJacobian(t_phi, t_th, f_phi, f_th)


def finite_difference_wrench(model: SpacecraftModel, phi, theta, env, h: float = 1e-6,
                             front_only: bool = True, extended: bool = False) -> WrenchJacobian:
    """Central-difference Jacobian of the (front-face or full) body wrench.

    With ``extended=True`` the perturbed wrenches are evaluated in long
    double, which pushes the rounding floor well below the O(h^2)
    truncation error for h >= 1e-6.
    """
    if not 1e-9 <= h <= 1e-3:
        raise ValueError(f"step {h} outside [1e-9, 1e-3]")
    dtype = np.longdouble if extended else np.float64
    phi = np.asarray(phi, dtype=dtype)
    theta = np.asarray(theta, dtype=dtype)
    p = _p(env)

    def wrench(ph, th):
        w = total_wrench(model, forward_kinematics(model, th), ph, p, front_only=front_only)
        out = np.concatenate([w.torque, w.force])
        if not np.all(np.isfinite(out)):
            raise FloatingPointError("non-finite wrench at perturbed point")
        return out

    x = np.concatenate([phi, theta])
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        xp, xm = x + e, x - e
        cols.append((wrench(xp[:3], xp[3:]) - wrench(xm[:3], xm[3:])) / (2 * e[i]))
    jac = np.column_stack(cols).astype(np.float64) if cols else np.zeros((6, 0))
    return WrenchJacobian(jac[:3, :3], jac[:3, 3:], jac[3:, :3], jac[3:, 3:])


def relative_errors(analytic: WrenchJacobian, reference: WrenchJacobian) -> dict[str, float]:
    """Normwise relative error per block, ``max|A - R| / max|R|``."""
    out = {}
    for name, a in analytic.blocks().items():
        r = reference.blocks()[name]
        scale = np.max(np.abs(r)) if r.size else 0.0
        diff = np.max(np.abs(a - r)) if r.size else 0.0
        out[name] = float(diff / scale) if scale > 0 else float(diff)
    return out
