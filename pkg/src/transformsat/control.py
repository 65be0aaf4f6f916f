"""Linearisation about an SRP equilibrium and LQR momentum damping.

State ordering is ``x = [dphi; dtheta; dphi_dot; dtheta_dot]`` and the input
is the joint angular acceleration ``u = dtheta_ddot``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_continuous_are

from .attitude import euler_rate_matrix
from .dynamics import assemble_mass_blocks
from .jacobians import wrench_jacobian
from .model import SpacecraftModel, forward_kinematics
from .srp import total_wrench

ANGLE_SCALE = np.pi / 180.0


class StabilizabilityError(ValueError):
    """(A, B) has an uncontrollable mode in the closed right half plane."""


@dataclass(frozen=True, eq=False)
class LinearizedSystem:
    a: np.ndarray
    b: np.ndarray
    phi_eq: np.ndarray
    theta_eq: np.ndarray

    @property
    def n_joints(self) -> int:
        return self.b.shape[1]

    def slices(self):
        m = self.n_joints
        return slice(0, 3), slice(3, 3 + m), slice(3 + m, 6 + m), slice(6 + m, 6 + 2 * m)


@dataclass(frozen=True, eq=False)
class LqrWeights:
    q: np.ndarray
    r: np.ndarray
    omega_n: float

    def __post_init__(self):
        if np.any(np.diag(self.q) <= 0) or np.any(np.diag(self.r) <= 0):
            raise ValueError("weights must have positive diagonals")


@dataclass(frozen=True, eq=False)
class LqrGain:
    k: np.ndarray
    riccati_x: np.ndarray
    residual_norm: float
    closed_loop_eigenvalues: np.ndarray

    @property
    def spectral_abscissa(self) -> float:
        return float(np.max(self.closed_loop_eigenvalues.real))


def linearize(model: SpacecraftModel, env, phi_eq, theta_eq, torque_tol: float = 1e-8) -> LinearizedSystem:
    """A, B of the attitude-joint motion with mass blocks frozen at equilibrium."""
    phi_eq = np.asarray(phi_eq, dtype=float)
    theta_eq = np.asarray(theta_eq, dtype=float)
    m = model.n_joints
    kin = forward_kinematics(model, theta_eq)
    torque = total_wrench(model, kin, phi_eq, env, front_only=True).torque
    if np.linalg.norm(torque) > torque_tol:
        warnings.warn(f"linearising away from equilibrium, |T| = {np.linalg.norm(torque):.3e} N m",
                      RuntimeWarning, stacklevel=2)
    blocks = assemble_mass_blocks(model, kin)
    jac = wrench_jacobian(model, kin, phi_eq, env)
    c_phi = euler_rate_matrix(phi_eq)
    g = c_phi @ np.linalg.inv(blocks.m_ww)

    n = 6 + 2 * m
    a = np.zeros((n, n))
    b = np.zeros((n, m))
    a[0:3, 3 + m:6 + m] = np.eye(3)
    a[3:3 + m, 6 + m:] = np.eye(m)
    a[3 + m:6 + m, 0:3] = g @ jac.dT_dphi
    a[3 + m:6 + m, 3:3 + m] = g @ jac.dT_dtheta
    b[3 + m:6 + m] = -g @ blocks.m_wt
    b[6 + m:] = np.eye(m)
    return LinearizedSystem(a, b, phi_eq, theta_eq)


def default_weights(m: int, omega_n: float, angle_scale: float = ANGLE_SCALE) -> LqrWeights:
    """Inverse-square weights from the expected size of each state component."""
    if not omega_n > 0:
        raise ValueError(f"omega_n must be positive, got {omega_n}")
    angle = np.full(3 + m, angle_scale)
    rate = np.full(3 + m, omega_n * angle_scale)
    accel = np.full(m, omega_n**2 * angle_scale)
    return LqrWeights(np.diag(np.concatenate([angle, rate]) ** -2.0), np.diag(accel ** -2.0), omega_n)


def natural_frequency(spectrum) -> float:
    """``omega_n = max |Im sqrt(lambda)|`` of a stability spectrum."""
    omega_n = abs(spectrum.f_value)
    if not omega_n > 0:
        raise ValueError("no oscillatory attitude mode; damping design undefined")
    return omega_n


def _check_stabilizable(a, b, tol: float = 1e-9) -> None:
    n = a.shape[0]
    for lam in np.linalg.eigvals(a):
        if lam.real < -tol * max(1.0, abs(lam)):
            continue
        pencil = np.hstack([a - lam * np.eye(n), b])
        sv = np.linalg.svd(pencil, compute_uv=False)
        if sv[-1] <= tol * sv[0]:
            raise StabilizabilityError(f"mode at eigenvalue {lam:.3e} is not stabilizable")


def solve_lqr(sys: LinearizedSystem | tuple, w: LqrWeights) -> LqrGain:
    """Continuous-time LQR gain ``K = R^-1 B^T X``.

    The Riccati equation is solved in coordinates where both weights are
    identity, which keeps the Schur method well conditioned when the state
    scales span many decades.
    """
    a, b = (sys.a, sys.b) if isinstance(sys, LinearizedSystem) else sys
    a, b = np.atleast_2d(np.asarray(a, dtype=float)), np.asarray(b, dtype=float)
    b = b.reshape(a.shape[0], -1)
    q, r = np.atleast_2d(w.q), np.atleast_2d(w.r)
    d = 1.0 / np.sqrt(np.diag(q))
    e = 1.0 / np.sqrt(np.diag(r))
    a_s = a * (1.0 / d)[:, None] * d[None, :]
    b_s = b * (1.0 / d)[:, None] * e[None, :]
    _check_stabilizable(a_s, b_s)
    try:
        x_s = solve_continuous_are(a_s, b_s, np.eye(len(d)), np.eye(len(e)))
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise np.linalg.LinAlgError(f"Riccati solve failed: {exc}") from exc
    x_s = 0.5 * (x_s + x_s.T)
    x = x_s / d[:, None] / d[None, :]
    k = (b_s.T @ x_s) * e[:, None] / d[None, :]
    residual = x @ a + a.T @ x - x @ b @ np.linalg.solve(r, b.T @ x) + q
    eig = np.linalg.eigvals(a - b @ k)
    return LqrGain(k, x, float(np.linalg.norm(residual, 2)), eig)


def riccati_residual_bound(w: LqrWeights, rel: float = 1e-8) -> float:
    return rel * float(np.linalg.norm(w.q, 2))
