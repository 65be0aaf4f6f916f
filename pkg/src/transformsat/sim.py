"""Nonlinear attitude-joint propagation under SRP, open or closed loop."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .attitude import dcm_from_euler, euler_rate_matrix, sun_vector_body
from .dynamics import AttitudeState, angular_momentum, assemble_mass_blocks, forward_dynamics
from .model import SpacecraftModel, forward_kinematics
from .srp import total_wrench

log = logging.getLogger(__name__)

OPEN_LOOP = "open_loop"
LQR = "lqr"
FULL_FACES = "full_faces"
FRONT_ONLY = "front_only"


@dataclass(frozen=True, eq=False)
class SimConfig:
    duration: float
    abs_tol: float = 1e-5
    rel_tol: float = 1e-6
    dphi0: np.ndarray = field(default_factory=lambda: np.zeros(3))
    omega0: np.ndarray = field(default_factory=lambda: np.zeros(3))
    dtheta0: np.ndarray | None = None
    dtheta_dot0: np.ndarray | None = None
    control: str = OPEN_LOOP
    wrench_model: str = FULL_FACES
    sample_interval: float = 100.0
    u_max: float = 1e-5  # rad/s^2
    hold_period: float | None = None  # discrete-hold experiments only

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.control not in (OPEN_LOOP, LQR):
            raise ValueError(f"unknown control mode {self.control!r}")
        if self.wrench_model not in (FULL_FACES, FRONT_ONLY):
            raise ValueError(f"unknown wrench model {self.wrench_model!r}")
        if not self.sample_interval > 0:
            raise ValueError("sample interval must be positive")


@dataclass(frozen=True, eq=False)
class Trajectory:
    t: np.ndarray
    phi: np.ndarray  # rad
    omega: np.ndarray  # rad/s, body
    theta: np.ndarray
    theta_dot: np.ndarray
    u: np.ndarray
    force_body: np.ndarray
    force_inertial: np.ndarray
    torque_body: np.ndarray
    h_inertial: np.ndarray
    phi_eq: np.ndarray
    theta_eq: np.ndarray
    n_rhs: int = 0
    saturated: int = 0
    clamped: int = 0

    @property
    def dphi(self) -> np.ndarray:
        return self.phi - self.phi_eq

    @property
    def dtheta(self) -> np.ndarray:
        return self.theta - self.theta_eq


class _Plant:
    """Right-hand side with logging counters for saturation and clamping."""

    def __init__(self, model, env, config: SimConfig, phi_eq, theta_eq, gain=None, joint_input=None):
        self.model, self.env, self.cfg = model, env, config
        self.phi_eq = np.asarray(phi_eq, dtype=float)
        self.theta_eq = np.asarray(theta_eq, dtype=float)
        self.k = None if gain is None else np.asarray(getattr(gain, "k", gain), dtype=float)
        if (config.control == LQR) != (self.k is not None):
            raise ValueError("a gain is required exactly when control mode is lqr")
        self.joint_input = joint_input
        self.lb, self.ub = model.theta_bounds
        self.m = model.n_joints
        self.p = env if isinstance(env, (int, float)) else None
        self.saturated = 0
        self.clamped = 0
        self.n_rhs = 0
        self._held = None

    def control(self, t, state: AttitudeState) -> np.ndarray:
        if self.joint_input is not None:
            return np.asarray(self.joint_input(t), dtype=float)
        if self.k is None:
            return np.zeros(self.m)
        if self.cfg.hold_period:
            slot = int(t // self.cfg.hold_period)
            if self._held is not None and self._held[0] == slot:
                return self._held[1]
        x = np.concatenate([state.phi - self.phi_eq, state.theta - self.theta_eq,
                            euler_rate_matrix(state.phi) @ state.omega, state.theta_dot])
        u = -self.k @ x
        if np.any(np.abs(u) > self.cfg.u_max):
            self.saturated += 1
            u = np.clip(u, -self.cfg.u_max, self.cfg.u_max)
        if self.cfg.hold_period:
            self._held = (int(t // self.cfg.hold_period), u)
        return u

    def kinematic_theta(self, theta):
        clipped = np.clip(theta, self.lb, self.ub)
        if np.any(clipped != theta):
            self.clamped += 1
        return clipped

    def wrench(self, kin, phi):
        return total_wrench(self.model, kin, phi, self.env, front_only=self.cfg.wrench_model == FRONT_ONLY)

    def __call__(self, t, y):
        self.n_rhs += 1
        if not np.all(np.isfinite(y)):
            raise FloatingPointError(f"non-finite state at t = {t}")
        state = AttitudeState.from_vector(y, self.m)
        u = self.control(t, state)
        return derivative(self.model, self.env, state, u, self)


def derivative(model: SpacecraftModel, env, state: AttitudeState, u, plant: _Plant | None = None,
               front_only: bool = False) -> np.ndarray:
    """``(phi_dot, omega_dot, theta_dot, theta_ddot)`` for joint acceleration ``u``."""
    theta = state.theta if plant is None else plant.kinematic_theta(state.theta)
    kin = forward_kinematics(model, theta)
    if plant is None:
        torque = total_wrench(model, kin, state.phi, env, front_only=front_only).torque
    else:
        torque = plant.wrench(kin, state.phi).torque
    blocks = assemble_mass_blocks(model, kin)
    eff = AttitudeState(state.phi, state.omega, theta, state.theta_dot)
    omega_dot = forward_dynamics(model, eff, u, torque, blocks)
    phi_dot = euler_rate_matrix(state.phi) @ state.omega
    return np.concatenate([phi_dot, omega_dot, state.theta_dot, u])


def _initial_state(model, config: SimConfig, phi_eq, theta_eq) -> np.ndarray:
    m = model.n_joints
    dth = np.zeros(m) if config.dtheta0 is None else np.asarray(config.dtheta0, dtype=float)
    dthd = np.zeros(m) if config.dtheta_dot0 is None else np.asarray(config.dtheta_dot0, dtype=float)
    return np.concatenate([np.asarray(phi_eq) + config.dphi0, config.omega0, np.asarray(theta_eq) + dth, dthd])


def integrate(model: SpacecraftModel, env, config: SimConfig, phi_eq, theta_eq, gain=None,
              joint_input=None, method: str = "RK45") -> Trajectory:
    """Adaptive Dormand-Prince propagation sampled every ``sample_interval``.

    ``joint_input(t)`` overrides the controller with prescribed joint
    accelerations.
    """
    plant = _Plant(model, env, config, phi_eq, theta_eq, gain, joint_input)
    y0 = _initial_state(model, config, phi_eq, theta_eq)
    t_eval = np.arange(0.0, config.duration, config.sample_interval)
    t_eval = np.append(t_eval, config.duration) if t_eval[-1] < config.duration else t_eval
    kwargs = {}
    if config.hold_period:
        kwargs["max_step"] = config.hold_period
    sol = solve_ivp(plant, (0.0, config.duration), y0, method=method, t_eval=t_eval,
                    rtol=config.rel_tol, atol=config.abs_tol, **kwargs)
    if sol.status != 0:
        raise RuntimeError(f"integration failed: {sol.message}")
    if plant.saturated:
        log.warning("control saturated in %d right-hand-side evaluations", plant.saturated)
    if plant.clamped:
        log.warning("joint bounds exceeded in %d right-hand-side evaluations", plant.clamped)
    return _record(model, env, plant, sol.t, sol.y.T)


def integrate_rk4(model: SpacecraftModel, env, config: SimConfig, phi_eq, theta_eq, gain=None,
                  joint_input=None, dt: float = 1.0) -> Trajectory:
    """Fixed-step classical RK4, a cross-check for the adaptive run."""
    plant = _Plant(model, env, config, phi_eq, theta_eq, gain, joint_input)
    y = _initial_state(model, config, phi_eq, theta_eq)
    n = int(round(config.duration / dt))
    every = max(1, int(round(config.sample_interval / dt)))
    ts, ys = [0.0], [y.copy()]
    for i in range(n):
        t = i * dt
        k1 = plant(t, y)
        k2 = plant(t + dt / 2, y + dt / 2 * k1)
        k3 = plant(t + dt / 2, y + dt / 2 * k2)
        k4 = plant(t + dt, y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if (i + 1) % every == 0 or i == n - 1:
            ts.append((i + 1) * dt)
            ys.append(y.copy())
    return _record(model, env, plant, np.array(ts), np.array(ys))


def _record(model, env, plant: _Plant, t, ys) -> Trajectory:
    m = model.n_joints
    cols = {k: [] for k in ("u", "fb", "fi", "tb", "h")}
    for ti, y in zip(t, ys):
        st = AttitudeState.from_vector(y, m)
        kin = forward_kinematics(model, np.clip(st.theta, plant.lb, plant.ub))
        w = plant.wrench(kin, st.phi)
        c = dcm_from_euler(st.phi)
        cols["u"].append(plant.control(ti, st))
        cols["fb"].append(w.force)
        cols["fi"].append(c.T @ w.force)
        cols["tb"].append(w.torque)
        cols["h"].append(angular_momentum(model, st, assemble_mass_blocks(model, kin))[1])
    arr = {k: np.array(v).reshape(len(t), -1) for k, v in cols.items()}
    return Trajectory(
        t=np.asarray(t), phi=ys[:, :3], omega=ys[:, 3:6], theta=ys[:, 6:6 + m], theta_dot=ys[:, 6 + m:],
        u=arr["u"], force_body=arr["fb"], force_inertial=arr["fi"], torque_body=arr["tb"],
        h_inertial=arr["h"], phi_eq=plant.phi_eq, theta_eq=plant.theta_eq,
        n_rhs=plant.n_rhs, saturated=plant.saturated, clamped=plant.clamped,
    )


def _quarter_peaks(t, v):
    edges = np.linspace(t[0], t[-1], 5)
    out = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (t >= lo) & (t <= hi)
        out.append(float(np.max(v[sel])) if np.any(sel) else 0.0)
    return out


def _envelope_peaks(t, v):
    """Local maxima of a sampled signal (interior points only)."""
    idx = np.flatnonzero((v[1:-1] > v[:-2]) & (v[1:-1] >= v[2:])) + 1
    return t[idx], v[idx]


def dominant_frequency(t, v, atol: float = 1e-12) -> float:
    """Angular frequency of the largest FFT bin of ``v`` (mean removed).

    Returns 0 for signals whose peak-to-peak variation is below ``atol``.
    """
    v = np.asarray(v, dtype=float) - np.mean(v)
    if len(v) < 4 or np.ptp(v) <= atol:
        return 0.0
    dt = np.median(np.diff(t))
    amp = np.abs(np.fft.rfft(v))
    freq = np.fft.rfftfreq(len(v), dt)
    k = int(np.argmax(amp[1:])) + 1
    return float(2 * np.pi * freq[k])


def metrics(traj: Trajectory, f_target_inertial=None, thresholds_deg=(0.5, 0.05)) -> dict:
    """Summary numbers for a run; angles in degrees."""
    if len(traj.t) == 0:
        raise ValueError("empty trajectory")
    t = traj.t
    dphi = np.rad2deg(np.linalg.norm(traj.dphi, axis=1))
    settle = {}
    for thr in thresholds_deg:
        above = np.flatnonzero(dphi >= thr)
        settle[f"{thr:g}"] = 0.0 if len(above) == 0 else (
            float(t[above[-1] + 1]) if above[-1] + 1 < len(t) else None)
    s_inertial = np.array([0.0, 0.0, 1.0])
    h_sun = traj.h_inertial @ s_inertial
    report = {
        "quarter_peak_dphi_deg": _quarter_peaks(t, dphi),
        "settling_time_s": settle,
        "dominant_frequency_radps": dominant_frequency(t, traj.dphi[:, 0]) if len(t) > 3 else 0.0,
        "h_sun_first_last": [float(h_sun[0]), float(h_sun[-1])],
        "max_abs_u_radps2": float(np.max(np.abs(traj.u))) if traj.u.size else 0.0,
        "final_dphi_deg": float(dphi[-1]),
        "final_omega_degps": float(np.rad2deg(np.linalg.norm(traj.omega[-1]))),
        "final_dtheta_deg": float(np.rad2deg(np.max(np.abs(traj.dtheta[-1])))) if traj.dtheta.size else 0.0,
        "saturated_evaluations": traj.saturated,
        "clamped_evaluations": traj.clamped,
    }
    if f_target_inertial is not None:
        f = np.asarray(f_target_inertial, dtype=float)
        report["final_force_error_rel"] = float(np.linalg.norm(traj.force_inertial[-1] - f) / np.linalg.norm(f))
    return report


def sun_axis_momentum(traj: Trajectory) -> np.ndarray:
    """Inertial angular momentum along the (inertial) sun direction."""
    return traj.h_inertial[:, 2]


def sun_vector_history(traj: Trajectory) -> np.ndarray:
    return np.array([sun_vector_body(p) for p in traj.phi])
