"""Solar radiation pressure on flat faces and the resulting wrench."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attitude import dcm_from_euler, sun_vector_body
from .model import KinematicState, SpacecraftModel

SOLAR_CONSTANT = 1366.0  # W/m^2
LIGHT_SPEED = 299792458.0  # m/s

BODY = "body"
INERTIAL = "inertial"


@dataclass(frozen=True)
class SrpEnvironment:
    solar_constant: float = SOLAR_CONSTANT
    light_speed: float = LIGHT_SPEED
    distance_au: float = 1.0

    @property
    def pressure(self) -> float:
        return pressure(self)


def pressure(env: SrpEnvironment) -> float:
    """Radiation pressure in Pa at ``env.distance_au``."""
    if not env.distance_au > 0:
        raise ValueError(f"distance must be positive, got {env.distance_au}")
    return env.solar_constant / env.light_speed / env.distance_au**2


@dataclass(frozen=True, eq=False)
class Wrench:
    force: np.ndarray
    torque: np.ndarray
    frame: str = BODY

    def __post_init__(self):
        if self.frame not in (BODY, INERTIAL):
            raise ValueError(f"unknown frame tag {self.frame!r}")


def surface_force(p: float, normal, area: float, optics, s) -> np.ndarray:
    """Force on one flat face; zero when the face looks away from the sun.

    ``optics`` is ``(c_spe, c_dif, c_abs)``.
    """
    n = np.asarray(normal, dtype=float)
    s = np.asarray(s, dtype=float)
    cos_a = n @ s
    if cos_a < 0:
        return np.zeros(3)
    c_spe, c_dif, c_abs = optics
    return -p * area * cos_a * ((c_abs + c_dif) * s + (2.0 / 3.0 * c_dif + 2.0 * cos_a * c_spe) * n)


def face_forces(p: float, normals: np.ndarray, areas, optics: np.ndarray, s,
                cutoff: bool = True) -> np.ndarray:
    """Vectorised ``surface_force`` over rows of ``normals``.

    With ``cutoff=False`` the smooth expression is used even for faces with
    ``n.s < 0``; this is the differentiable front-face model.
    """
    cos_a = normals @ s
    c_spe, c_dif, c_abs = optics[:, 0], optics[:, 1], optics[:, 2]
    coef_s = (c_abs + c_dif) * cos_a
    coef_n = (2.0 / 3.0 * c_dif + 2.0 * cos_a * c_spe) * cos_a
    f = -p * areas[:, None] * (coef_s[:, None] * s + coef_n[:, None] * normals)
    if cutoff:
        f[cos_a < 0] = 0.0
    return f


def select_faces(model: SpacecraftModel, front_only: bool) -> np.ndarray:
    if front_only:
        return np.flatnonzero(model.surf_front)
    return np.arange(len(model.surf_area))


def total_wrench(model: SpacecraftModel, kin: KinematicState, phi, env: SrpEnvironment | float,
                 front_only: bool = False) -> Wrench:
    """SRP force and torque about the system CoM, body frame.

    The full model sums every face with ``n.s >= 0``. ``front_only`` sums the
    front faces with the smooth (uncut) expression instead.
    """
    p = env if isinstance(env, (int, float)) else pressure(env)
    s = sun_vector_body(phi)
    idx = select_faces(model, front_only)
    f = face_forces(p, kin.surface_normal[idx], model.surf_area[idx], model.surf_optics[idx], s,
                    cutoff=not front_only)
    arms = kin.surface_center[idx] - kin.com_total
    return Wrench(f.sum(axis=0), np.cross(arms, f).sum(axis=0), BODY)


def wrench_to_inertial(w: Wrench, phi) -> Wrench:
    if w.frame != BODY:
        raise ValueError(f"expected a body-frame wrench, got {w.frame!r}")
    c = dcm_from_euler(phi)
    return Wrench(c.T @ w.force, c.T @ w.torque, INERTIAL)


def wrench_to_body(w: Wrench, phi) -> Wrench:
    if w.frame != INERTIAL:
        raise ValueError(f"expected an inertial-frame wrench, got {w.frame!r}")
    c = dcm_from_euler(phi)
    return Wrench(c @ w.force, c @ w.torque, BODY)
