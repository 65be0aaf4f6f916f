"""Kane-form attitude/joint dynamics of the free-floating panel tree.

The generalized speeds are the body-0 angular velocity ``omega`` and the
joint rates ``theta_dot``; translation of the system CoM decouples and is
only provided for completeness. The rotational row reads

    M_ww @ omega_dot + M_wt @ theta_ddot + d_w = tau_w,

with ``h_c = M_ww @ omega + M_wt @ theta_dot`` the angular momentum about
the system CoM, in body-0 components.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attitude import dcm_from_euler, skew
from .model import KinematicState, SpacecraftModel, forward_kinematics

MASS_RATE_STEP = 1e-6


@dataclass(frozen=True, eq=False)
class GeneralizedBlocks:
    m_ww: np.ndarray
    m_wt: np.ndarray
    m_tw: np.ndarray
    m_tt: np.ndarray
    m_vv: np.ndarray
    d_w: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class AttitudeState:
    phi: np.ndarray
    omega: np.ndarray
    theta: np.ndarray
    theta_dot: np.ndarray

    @classmethod
    def from_vector(cls, y, m: int) -> "AttitudeState":
        y = np.asarray(y, dtype=float)
        return cls(y[:3], y[3:6], y[6:6 + m], y[6 + m:6 + 2 * m])

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.phi, self.omega, self.theta, self.theta_dot])


def assemble_mass_blocks(model: SpacecraftModel, kin: KinematicState) -> GeneralizedBlocks:
    """Generalized mass matrix blocks from outer-group aggregates.

    With ``a = r_jc`` (group CoM from system CoM) and ``b = r_jh`` (group CoM
    from hinge), column j of ``M_wt`` is ``(I_j - m_j a^x b^x) lambda_j``,
    which is the angular momentum about the system CoM produced by a unit
    rate of joint j.
    """
    m = model.n_joints
    i_c = kin.total_inertia
    m_c = kin.total_mass
    lam = kin.joint_axis
    g_m = kin.group_mass
    r_hat_c = kin.group_com - kin.com_total
    # r_hat_h[i, j]: CoM of group i relative to hinge j
    r_hat_h = kin.group_com[:, None, :] - kin.hinge_point[None, :, :]

    m_wt = np.empty((3, m))
    for j in range(m):
        a, b = skew(r_hat_c[j]), skew(r_hat_h[j, j])
        m_wt[:, j] = (kin.group_inertia[j] - g_m[j] * a @ b) @ lam[j]

    m_tt = np.zeros((m, m))
    member = model.membership
    for i in range(m):
        for j in range(i, m):
            ci, cj = model.joints[i].child_body, model.joints[j].child_body
            if member[i, cj]:  # j outboard of (or equal to) i
                inner = kin.group_inertia[j] - g_m[j] * skew(r_hat_h[j, i]) @ skew(r_hat_h[j, j])
                star = lam[i] @ inner @ lam[j]
            elif member[j, ci]:
                inner = kin.group_inertia[i] - g_m[i] * skew(r_hat_h[i, i]) @ skew(r_hat_h[i, j])
                star = lam[i] @ inner @ lam[j]
            else:
                star = 0.0
            coupling = g_m[i] * g_m[j] / m_c * (
                lam[i] @ skew(r_hat_h[i, i]) @ skew(r_hat_h[j, j]) @ lam[j])
            m_tt[i, j] = m_tt[j, i] = star + coupling

    return GeneralizedBlocks(
        m_ww=i_c,
        m_wt=m_wt,
        m_tw=m_wt.T.copy(),
        m_tt=m_tt,
        m_vv=m_c * np.eye(3),
    )


def mass_rate(model: SpacecraftModel, theta, theta_dot, h: float = MASS_RATE_STEP):
    """``(dM_ww/dtheta . theta_dot, dM_wt/dtheta . theta_dot)`` by central differences.

    Uses a single directional difference along ``theta_dot``.
    """
    theta = np.asarray(theta, dtype=float)
    rate = np.asarray(theta_dot, dtype=float)
    m = model.n_joints
    speed = np.linalg.norm(rate)
    if speed == 0.0:
        return np.zeros((3, 3)), np.zeros((3, m))
    u = rate / speed
    bp = assemble_mass_blocks(model, forward_kinematics(model, theta + h * u))
    bm = assemble_mass_blocks(model, forward_kinematics(model, theta - h * u))
    scale = speed / (2.0 * h)
    return (bp.m_ww - bm.m_ww) * scale, (bp.m_wt - bm.m_wt) * scale


def bias_torque(model: SpacecraftModel, state: AttitudeState,
                blocks: GeneralizedBlocks | None = None) -> np.ndarray:
    """Velocity-quadratic term ``d_w`` of the rotational row."""
    if blocks is None:
        blocks = assemble_mass_blocks(model, forward_kinematics(model, state.theta))
    w, td = np.asarray(state.omega, dtype=float), np.asarray(state.theta_dot, dtype=float)
    dm_ww, dm_wt = mass_rate(model, state.theta, td)
    return (np.cross(w, blocks.m_ww @ w) + dm_ww @ w
            + np.cross(w, blocks.m_wt @ td) + dm_wt @ td)


def forward_dynamics(model: SpacecraftModel, state: AttitudeState, theta_ddot, external_torque,
                     blocks: GeneralizedBlocks | None = None) -> np.ndarray:
    """Body angular acceleration for prescribed joint accelerations."""
    if blocks is None:
        blocks = assemble_mass_blocks(model, forward_kinematics(model, state.theta))
    d_w = bias_torque(model, state, blocks)
    rhs = np.asarray(external_torque, dtype=float) - blocks.m_wt @ np.asarray(theta_ddot, dtype=float) - d_w
    try:
        chol = np.linalg.cholesky(blocks.m_ww)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("M_ww is not positive definite") from exc
    return np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))


def angular_momentum(model: SpacecraftModel, state: AttitudeState,
                     blocks: GeneralizedBlocks | None = None):
    """``(h_body, h_inertial)`` about the system CoM."""
    if blocks is None:
        blocks = assemble_mass_blocks(model, forward_kinematics(model, state.theta))
    h = blocks.m_ww @ state.omega + blocks.m_wt @ state.theta_dot
    return h, dcm_from_euler(state.phi).T @ h


def translational_row(model: SpacecraftModel, kin: KinematicState, omega, v_c, force):
    """``(M_vv, d_v, tau_v)`` for the CoM translation (decoupled)."""
    m_c = kin.total_mass
    return m_c * np.eye(3), m_c * np.cross(omega, v_c), np.asarray(force, dtype=float)


def joint_torques(model: SpacecraftModel, state: AttitudeState, omega_dot, theta_ddot,
                  joint_forces=None, h: float = MASS_RATE_STEP) -> np.ndarray:
    """Actuator torques realising ``theta_ddot``; diagnostic only.

    Lagrange's equation for each joint coordinate gives
    ``M_tw w_dot + M_tt th_ddot + d_t = Q + n_theta`` with
    ``d_t = (dM/dt v)_theta - 1/2 v^T dM/dtheta_i v``; ``joint_forces`` is the
    generalized external force ``Q`` (zero when omitted).
    """
    theta = np.asarray(state.theta, dtype=float)
    m = model.n_joints
    v = np.concatenate([state.omega, state.theta_dot])
    b = assemble_mass_blocks(model, forward_kinematics(model, theta))

    def full(blocks):
        return np.block([[blocks.m_ww, blocks.m_wt], [blocks.m_tw, blocks.m_tt]])

    dm = []
    for i in range(m):
        e = np.zeros(m)
        e[i] = h
        dm.append((full(assemble_mass_blocks(model, forward_kinematics(model, theta + e)))
                   - full(assemble_mass_blocks(model, forward_kinematics(model, theta - e)))) / (2 * h))
    m_dot = sum(td * d for td, d in zip(state.theta_dot, dm)) if m else np.zeros((3, 3))
    d_t = (m_dot @ v)[3:] - 0.5 * np.array([v @ d @ v for d in dm])
    q = np.zeros(m) if joint_forces is None else np.asarray(joint_forces, dtype=float)
    return b.m_tw @ omega_dot + b.m_tt @ theta_ddot + d_t - q


def srp_joint_forces(model: SpacecraftModel, kin: KinematicState, face_forces: np.ndarray) -> np.ndarray:
    """Generalized joint forces of per-face SRP forces (virtual work at fixed CoM)."""
    m = model.n_joints
    q = np.zeros(m)
    for k in range(m):
        lam, hk = kin.joint_axis[k], kin.hinge_point[k]
        d_rc = kin.group_mass[k] / kin.total_mass * np.cross(lam, kin.group_com[k] - hk)
        inside = model.membership[k][model.surf_owner]
        d_center = np.where(inside[:, None], np.cross(lam, kin.surface_center - hk), 0.0) - d_rc
        q[k] = np.einsum("si,si->", d_center, face_forces)
    return q
