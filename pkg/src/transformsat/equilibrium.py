"""SRP equilibrium search: attitude and joint angles realising a target wrench.

The unknowns are ``x = (phi, theta)``. Equalities pin the front-face SRP
force (inertial frame) and torque (body frame) to their targets; the
linearised attitude motion ``d2(dphi)/dt2 = A_phi dphi`` must not diverge
(``c <= 0``) and its fastest oscillation is maximised (``f`` minimised).

``A_phi`` always has a zero eigenvalue (rotation about the sun line leaves
the body-frame torque unchanged), so its characteristic polynomial is
``lambda (lambda^2 - t lambda + p)``. Requiring real, non-positive roots of
the quadratic factor gives the smooth surrogate ``t <= 0, p >= 0,
t^2 - 4p >= 0`` for the non-smooth ``c <= 0``, which is what the NLP sees.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .attitude import (GIMBAL_LIMIT, align_body_axis, dcm_from_euler, dcm_partials,
                       euler_rate_matrix, sun_vector_body, sun_vector_partials)
from .jacobians import torque_jacobian_attitude, wrench_jacobian
from .model import SpacecraftModel, forward_kinematics
from .srp import Wrench, pressure, total_wrench

log = logging.getLogger(__name__)

CONVERGED = "converged"
INFEASIBLE = "infeasible"
MAX_ITER = "max_iter"

PHI2_LIMIT = np.deg2rad(80.0)
FD_STEP = 1e-7


class InfeasibleTargetError(ValueError):
    """Target force exceeds what SRP can deliver on this model."""


@dataclass(frozen=True)
class Tolerances:
    force: float = 1e-9  # N
    torque: float = 1e-10  # N m
    ineq: float = 1e-8  # 1/s


@dataclass(frozen=True, eq=False)
class EquilibriumProblem:
    f_target_inertial: np.ndarray
    t_target_body: np.ndarray = field(default_factory=lambda: np.zeros(3))
    theta_bounds: tuple[np.ndarray, np.ndarray] | None = None
    tol: Tolerances = Tolerances()
    roll_search_step: float = np.deg2rad(15.0)
    umbrella_angle: float = np.deg2rad(30.0)
    initial_roll: float = 0.0
    n_seeds: int | None = None  # default: full turn
    min_sun_cos: float = 0.1
    coalescence_margin: float = 1e-6
    max_iter: int = 300

    def seed_rolls(self) -> np.ndarray:
        n = self.n_seeds or int(math.ceil(2 * np.pi / self.roll_search_step - 1e-9))
        return self.initial_roll + self.roll_search_step * np.arange(n)


@dataclass(frozen=True, eq=False)
class StabilitySpectrum:
    lam: np.ndarray
    sqrt_lambda: np.ndarray
    f_value: float
    c_value: float


@dataclass(frozen=True, eq=False)
class EquilibriumSolution:
    phi_star: np.ndarray
    theta_star: np.ndarray
    wrench_body: Wrench
    wrench_inertial: Wrench
    spectrum: StabilitySpectrum
    status: str
    iterations: int
    residuals: dict
    seed_index: int = 0
    roll_seed: float = 0.0

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED


def stability_matrix(model: SpacecraftModel, phi, theta, env, kin=None) -> np.ndarray:
    """``A_phi = C_phi I_c^-1 dT/dphi`` of the front-face model."""
    kin = forward_kinematics(model, theta) if kin is None else kin
    d_t = torque_jacobian_attitude(model, kin, phi, env)
    return euler_rate_matrix(phi) @ np.linalg.solve(kin.total_inertia, d_t)


def spectrum(a_phi) -> StabilitySpectrum:
    a_phi = np.asarray(a_phi, dtype=float)
    if not np.all(np.isfinite(a_phi)):
        raise np.linalg.LinAlgError("non-finite stability matrix")
    lam = np.linalg.eigvals(a_phi).astype(complex)
    root = np.sqrt(lam)
    return StabilitySpectrum(lam, root, float(-np.max(np.abs(root.imag))), float(np.max(root.real)))


def max_force(model: SpacecraftModel, env) -> float:
    """Upper bound ``2 P sum(A_front)`` on the SRP force magnitude."""
    return 2.0 * _pressure(env) * model.front_area


def initial_guess(model: SpacecraftModel, env, f_target_inertial, umbrella_angle=np.deg2rad(30.0),
                  roll: float = 0.0):
    """Umbrella-shaped start with body-0 front normal along ``-f_target``.

    Each joint folds by ``umbrella_angle`` in the direction that moves its
    outer group's CoM away from the sun.
    """
    f = np.asarray(f_target_inertial, dtype=float)
    if not np.linalg.norm(f) > 0:
        raise ValueError("target force must be non-zero")
    phi0 = align_body_axis(-f, roll)
    kin = forward_kinematics(model, np.zeros(model.n_joints))
    s = sun_vector_body(phi0)
    theta0 = np.zeros(model.n_joints)
    for k in range(model.n_joints):
        lift = s @ np.cross(kin.joint_axis[k], kin.group_com[k] - kin.hinge_point[k])
        theta0[k] = -umbrella_angle if lift >= 0 else umbrella_angle
    lb, ub = model.theta_bounds
    return phi0, np.clip(theta0, lb, ub)


def _pressure(env) -> float:
    return float(env) if isinstance(env, (int, float)) else pressure(env)


class _Nlp:
    """Scaled objective/constraint callbacks over x = (phi, theta)."""

    def __init__(self, model: SpacecraftModel, env, problem: EquilibriumProblem):
        self.model, self.env, self.problem = model, env, problem
        self.m = model.n_joints
        p = _pressure(env)
        self.f_scale = p * model.front_area
        self.t_scale = self.f_scale * model.bounding_radius()
        inertia = forward_kinematics(model, np.zeros(self.m)).total_inertia
        self.a_scale = self.t_scale / (np.trace(inertia) / 3.0)
        self.f_targ = np.asarray(problem.f_target_inertial, dtype=float)
        self.t_targ = np.asarray(problem.t_target_body, dtype=float)
        lb, ub = problem.theta_bounds if problem.theta_bounds is not None else model.theta_bounds
        self.lb = np.concatenate([[-np.inf, -PHI2_LIMIT, -np.inf], lb])
        self.ub = np.concatenate([[np.inf, PHI2_LIMIT, np.inf], ub])
        self.front = np.flatnonzero(model.surf_front)
        self._cache: dict[bytes, object] = {}
        self.n_eval = 0

    def split(self, x):
        return x[:3], x[3:]

    def bounds(self):
        return [(None if np.isinf(l) else l, None if np.isinf(u) else u) for l, u in zip(self.lb, self.ub)]

    # equalities
    def residual(self, x) -> np.ndarray:
        phi, theta = self.split(x)
        kin = forward_kinematics(self.model, theta)
        w = total_wrench(self.model, kin, phi, self.env, front_only=True)
        f_in = dcm_from_euler(phi).T @ w.force
        return np.concatenate([(f_in - self.f_targ) / self.f_scale, (w.torque - self.t_targ) / self.t_scale])

    def residual_jac(self, x) -> np.ndarray:
        phi, theta = self.split(x)
        kin = forward_kinematics(self.model, theta)
        w = total_wrench(self.model, kin, phi, self.env, front_only=True)
        jac = _quiet_jacobian(self.model, kin, phi, self.env)
        c = dcm_from_euler(phi)
        dc = dcm_partials(phi)
        df_phi = np.column_stack([dc[j].T @ w.force for j in range(3)]) + c.T @ jac.dF_dphi
        top = np.hstack([df_phi, c.T @ jac.dF_dtheta]) / self.f_scale
        bottom = np.hstack([jac.dT_dphi, jac.dT_dtheta]) / self.t_scale
        return np.vstack([top, bottom])

    # stability
    def a_phi(self, x) -> np.ndarray:
        key = np.asarray(x, dtype=float).tobytes()
        hit = self._cache.get(key)
        if hit is None:
            phi, theta = self.split(x)
            kin = forward_kinematics(self.model, theta)
            jac = _quiet_jacobian(self.model, kin, phi, self.env)
            hit = euler_rate_matrix(phi) @ np.linalg.solve(kin.total_inertia, jac.dT_dphi) / self.a_scale
            if len(self._cache) > 256:
                self._cache.clear()
            self._cache[key] = hit
            self.n_eval += 1
        return hit

    def surrogate(self, x) -> np.ndarray:
        """Non-negative when the non-zero eigenvalues are real and <= 0."""
        a = self.a_phi(x)
        t = np.trace(a)
        p = 0.5 * (t * t - np.trace(a @ a))
        return np.array([-t, p, t * t - 4.0 * p - self.problem.coalescence_margin * t * t])

    def objective(self, x) -> float:
        return spectrum(self.a_phi(x)).f_value

    def _fd(self, fun, x):
        x = np.asarray(x, dtype=float)
        f0 = np.atleast_1d(fun(x))
        out = np.empty((f0.size, x.size))
        for i in range(x.size):
            e = np.zeros_like(x)
            e[i] = FD_STEP
            out[:, i] = (np.atleast_1d(fun(x + e)) - np.atleast_1d(fun(x - e))) / (2 * FD_STEP)
        return out

    def objective_grad(self, x):
        return self._fd(self.objective, x)[0]

    def surrogate_jac(self, x):
        return self._fd(self.surrogate, x)

    # sunlit front faces
    def sun_margin(self, x) -> np.ndarray:
        phi, theta = self.split(x)
        kin = forward_kinematics(self.model, theta)
        return kin.surface_normal[self.front] @ sun_vector_body(phi) - self.problem.min_sun_cos

    def sun_margin_jac(self, x) -> np.ndarray:
        phi, theta = self.split(x)
        kin = forward_kinematics(self.model, theta)
        s = sun_vector_body(phi)
        n = kin.surface_normal[self.front]
        owner = self.model.surf_owner[self.front]
        out = np.zeros((len(self.front), 3 + self.m))
        out[:, :3] = n @ sun_vector_partials(phi)
        for k in range(self.m):
            inside = self.model.membership[k][owner]
            out[inside, 3 + k] = np.cross(kin.joint_axis[k], n[inside]) @ s
        return out

    def inequality(self, x):
        return np.concatenate([self.surrogate(x), self.sun_margin(x)])

    def inequality_jac(self, x):
        return np.vstack([self.surrogate_jac(x), self.sun_margin_jac(x)])


def _quiet_jacobian(model, kin, phi, env):
    import warnings

    from .jacobians import FrontFaceWarning
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FrontFaceWarning)
        return wrench_jacobian(model, kin, phi, env)


def evaluate(model: SpacecraftModel, env, problem: EquilibriumProblem, phi, theta,
             status: str = CONVERGED, iterations: int = 0, seed_index: int = 0,
             roll_seed: float = 0.0) -> EquilibriumSolution:
    """Re-evaluate a candidate from scratch and grade it against the tolerances."""
    phi = np.asarray(phi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    kin = forward_kinematics(model, theta)
    full = total_wrench(model, kin, phi, env)
    front = total_wrench(model, kin, phi, env, front_only=True)
    c = dcm_from_euler(phi)
    inertial = Wrench(c.T @ front.force, c.T @ front.torque, "inertial")
    sp = spectrum(stability_matrix(model, phi, theta, env, kin))
    lb, ub = problem.theta_bounds if problem.theta_bounds is not None else model.theta_bounds
    sun_cos = kin.surface_normal[model.surf_front] @ sun_vector_body(phi)
    res = {
        "force_error_N": float(np.linalg.norm(inertial.force - problem.f_target_inertial)),
        "torque_error_Nm": float(np.linalg.norm(front.torque - problem.t_target_body)),
        "c_value": sp.c_value,
        "bound_violation_rad": float(max(0.0, np.max(lb - theta, initial=0.0), np.max(theta - ub, initial=0.0))),
        "min_front_sun_cos": float(np.min(sun_cos)),
        "full_minus_front_force_N": float(np.linalg.norm(full.force - front.force)),
    }
    ok = (res["force_error_N"] <= problem.tol.force and res["torque_error_Nm"] <= problem.tol.torque
          and res["c_value"] <= problem.tol.ineq and res["bound_violation_rad"] == 0.0
          and res["min_front_sun_cos"] > 0.0)
    if status == CONVERGED and not ok:
        status = MAX_ITER
    return EquilibriumSolution(phi, theta, front, inertial, sp, status, iterations, res,
                               seed_index, roll_seed)


def _polish(nlp: _Nlp, x, iters: int = 20):
    """Minimum-norm Newton steps on the equalities, respecting the box."""
    x = np.array(x, dtype=float)
    for _ in range(iters):
        r = nlp.residual(x)
        if np.linalg.norm(r) < 1e-13:
            break
        j = nlp.residual_jac(x)
        free = ~(((x <= nlp.lb + 1e-12)) | (x >= nlp.ub - 1e-12))
        step = np.zeros_like(x)
        step[free] = -np.linalg.lstsq(j[:, free], r, rcond=None)[0]
        x = np.clip(x + step, nlp.lb, nlp.ub)
    return x


def _slsqp(nlp: _Nlp, x0, max_iter: int):
    cons = [
        {"type": "eq", "fun": nlp.residual, "jac": nlp.residual_jac},
        {"type": "ineq", "fun": nlp.inequality, "jac": nlp.inequality_jac},
    ]
    res = minimize(nlp.objective, x0, jac=nlp.objective_grad,
                   method="SLSQP", bounds=nlp.bounds(), constraints=cons,
                   options={"maxiter": max_iter, "ftol": 1e-12})
    return res.x, int(res.nit)


def _penalty(nlp: _Nlp, x0, max_iter: int):
    x = np.array(x0, dtype=float)
    total = 0
    for mu in (1e2, 1e4, 1e6, 1e8):
        def fun(z, mu=mu):
            r = nlp.residual(z)
            g = np.minimum(nlp.inequality(z), 0.0)
            return nlp.objective(z) + mu * (r @ r + g @ g)
        res = minimize(fun, x, method="L-BFGS-B", bounds=nlp.bounds(),
                       options={"maxiter": max_iter})
        x = res.x
        total += int(res.nit)
    return x, total


def _feasible(nlp: _Nlp, model, env, problem, x) -> bool:
    sol = evaluate(model, env, problem, x[:3], x[3:])
    return sol.converged


def solve_seed(model: SpacecraftModel, env, problem: EquilibriumProblem, seed_index: int) -> EquilibriumSolution:
    """One NLP attempt from the umbrella guess at roll seed ``seed_index``."""
    roll = float(problem.seed_rolls()[seed_index])
    phi0, theta0 = initial_guess(model, env, problem.f_target_inertial, problem.umbrella_angle, roll)
    nlp = _Nlp(model, env, problem)
    x0 = np.concatenate([phi0, theta0])
    iters = 0
    best = None
    for stage in (_slsqp, _penalty):
        try:
            x, n = stage(nlp, x0 if best is None else best, problem.max_iter)
        except (np.linalg.LinAlgError, ValueError, FloatingPointError) as exc:
            log.debug("seed %d stage %s failed: %s", seed_index, stage.__name__, exc)
            continue
        iters += n
        try:
            x = _polish(nlp, x)
        except (np.linalg.LinAlgError, ValueError):
            pass
        best = x
        if abs(x[1]) < GIMBAL_LIMIT and _feasible(nlp, model, env, problem, x):
            return evaluate(model, env, problem, x[:3], x[3:], CONVERGED, iters, seed_index, roll)
    if best is None or abs(best[1]) >= GIMBAL_LIMIT:
        best = x0
    return evaluate(model, env, problem, best[:3], best[3:], MAX_ITER, iters, seed_index, roll)


def _solve_seed_args(args):
    return solve_seed(*args)


def solve(model: SpacecraftModel, env, problem: EquilibriumProblem, jobs: int = 1) -> EquilibriumSolution:
    """Roll-seed search; the lowest-index converged seed wins.

    With ``jobs > 1`` seeds are attempted in parallel batches, which does not
    change the result.
    """
    f_norm = np.linalg.norm(problem.f_target_inertial)
    if f_norm > max_force(model, env):
        raise InfeasibleTargetError(
            f"|F_target| = {f_norm:.6g} N exceeds the SRP bound {max_force(model, env):.6g} N")
    n = len(problem.seed_rolls())
    best: EquilibriumSolution | None = None

    def better(a, b):
        if b is None:
            return True
        return _score(a) < _score(b)

    if jobs <= 1:
        for k in range(n):
            sol = solve_seed(model, env, problem, k)
            log.info("seed %d roll %.1f deg: %s", k, np.rad2deg(sol.roll_seed), sol.status)
            if sol.converged:
                return sol
            if better(sol, best):
                best = sol
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for start in range(0, n, jobs):
                batch = list(pool.map(_solve_seed_args,
                                      [(model, env, problem, k) for k in range(start, min(n, start + jobs))]))
                for sol in batch:
                    if sol.converged:
                        return sol
                    if better(sol, best):
                        best = sol
    return replace(best, status=INFEASIBLE)


def _score(sol: EquilibriumSolution) -> float:
    r = sol.residuals
    return (r["force_error_N"] / 1e-9 + r["torque_error_Nm"] / 1e-10
            + max(r["c_value"], 0.0) / 1e-8 + r["bound_violation_rad"] * 1e6)
