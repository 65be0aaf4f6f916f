import numpy as np
import pytest
from scipy.linalg import expm

from conftest import F_TARGET, sunlit_state
from transformsat import sim
from transformsat.attitude import euler_rate_matrix
from transformsat.equilibrium import (CONVERGED, EquilibriumProblem, InfeasibleTargetError, _Nlp, evaluate,
                                      initial_guess, max_force, solve, solve_seed, spectrum,
                                      stability_matrix)
from transformsat.jacobians import finite_difference_wrench
from transformsat.model import forward_kinematics
from transformsat.srp import total_wrench

rng = np.random.default_rng(6)


def test_spectrum_examples():
    sp = spectrum(np.diag([-1e-7, -4e-8, 0.0]))
    assert np.allclose(np.sort(np.abs(sp.sqrt_lambda.imag)), [0, 2e-4, 3.16227766e-4], rtol=1e-8)
    assert sp.f_value == pytest.approx(-3.16227766e-4) and sp.c_value == 0.0
    assert spectrum(np.diag([1e-8, -1e-8, 0.0])).c_value == pytest.approx(1e-4)
    for _ in range(20):
        q = rng.normal(size=(3, 3))
        assert spectrum(-(q @ q.T) - 1e-3 * np.eye(3)).c_value <= 1e-12
    with pytest.raises(np.linalg.LinAlgError):
        spectrum(np.full((3, 3), np.nan))


def test_stability_matrix_zero_pressure_and_fd(model):
    phi, theta = sunlit_state(model, rng)
    assert not np.any(stability_matrix(model, phi, theta, 0.0))
    p = 4.5e-6
    fd = finite_difference_wrench(model, phi, theta, p).dT_dphi
    ref = euler_rate_matrix(phi) @ np.linalg.solve(forward_kinematics(model, theta).total_inertia, fd)
    a = stability_matrix(model, phi, theta, p)
    assert np.max(np.abs(a - ref)) < 1e-5 * np.max(np.abs(ref))


def test_sun_line_rotation_is_a_zero_mode(model):
    phi, theta = sunlit_state(model, rng)
    lam = np.linalg.eigvals(stability_matrix(model, phi, theta, 4.5e-6))
    assert np.min(np.abs(lam)) < 1e-12 * np.max(np.abs(lam))


def test_initial_guess(model, env):
    phi0, theta0 = initial_guess(model, env, [0, 0, -1e-5])
    assert np.allclose(phi0, 0) and np.allclose(theta0, -np.deg2rad(30))
    phi0, _ = initial_guess(model, env, F_TARGET)
    assert np.allclose(np.rad2deg(phi0), [11.31, -5.60, 0.0], atol=5e-3)
    with pytest.raises(ValueError):
        initial_guess(model, env, np.zeros(3))
    # every fold moves its group's CoM away from the sun
    phi0, theta0 = initial_guess(model, env, F_TARGET, roll=0.7)
    from transformsat.attitude import sun_vector_body
    s = sun_vector_body(phi0)
    for k in range(8):
        th = np.zeros(8)
        th[k] = theta0[k]
        kin, kin0 = forward_kinematics(model, th), forward_kinematics(model, np.zeros(8))
        assert s @ (kin.group_com[k] - kin0.group_com[k]) < 0


def test_reference_scenario_solution(model, env, problem, solution):
    assert solution.status == CONVERGED
    r = solution.residuals
    assert r["force_error_N"] <= 1e-9 and r["torque_error_Nm"] <= 1e-10 and r["c_value"] <= 1e-8
    lo, hi = model.theta_bounds
    assert np.all(solution.theta_star >= lo) and np.all(solution.theta_star <= hi)
    # certificate: fresh evaluation with the full-face plant model
    kin = forward_kinematics(model, solution.theta_star)
    w = total_wrench(model, kin, solution.phi_star, env)
    from transformsat.attitude import dcm_from_euler
    f_in = dcm_from_euler(solution.phi_star).T @ w.force
    assert np.linalg.norm(f_in - F_TARGET) <= 1e-8 and np.linalg.norm(w.torque) <= 1e-9
    assert 1e-4 <= abs(solution.spectrum.f_value) <= 2e-3


def test_linearised_attitude_motion_stays_bounded(model, env, solution, omega_n):
    a = stability_matrix(model, solution.phi_star, solution.theta_star, env)
    big = np.block([[np.zeros((3, 3)), np.eye(3)], [a, np.zeros((3, 3))]])
    # Euler-angle coordinates make A strongly non-normal, so growth is measured
    # in modal coordinates where each oscillator's amplitude is invariant
    lam, vec = np.linalg.eig(a)
    vinv = np.linalg.inv(vec)
    w = np.block([[vinv, np.zeros((3, 3))], [np.zeros((3, 3)), vinv / omega_n]])
    x0 = np.concatenate([np.deg2rad([0.819, 0.567, 0.088]), np.zeros(3)])
    period = 2 * np.pi / omega_n
    sizes = [np.linalg.norm(w @ expm(big * t) @ x0) for t in np.linspace(0, 10 * period, 400)]
    assert max(sizes) <= 1.5 * sizes[0]
    # the zero eigenvalue is rotation about the sun line, which drifts linearly
    # under any initial rate and is therefore started at rest above
    assert np.min(np.abs(lam)) < 1e-12 * np.max(np.abs(lam))


def test_objective_matches_simulated_frequency(model, env, solution, omega_n):
    a = stability_matrix(model, solution.phi_star, solution.theta_star, env)
    lam, vec = np.linalg.eig(a)
    fast = np.real(vec[:, np.argmin(lam.real)])
    dphi0 = np.deg2rad(0.05) * fast / np.linalg.norm(fast)
    cfg = sim.SimConfig(duration=20 * 2 * np.pi / omega_n, dphi0=dphi0, wrench_model=sim.FRONT_ONLY,
                        sample_interval=50.0, abs_tol=1e-9, rel_tol=1e-9)
    tr = sim.integrate(model, env, cfg, solution.phi_star, solution.theta_star)
    proj = tr.dphi @ (fast / np.linalg.norm(fast))
    assert sim.dominant_frequency(tr.t, proj) == pytest.approx(omega_n, rel=0.25)


def test_manufactured_target_is_recovered(model, env, solution):
    theta_bar = solution.theta_star + np.deg2rad([1, 1, -1, -1, 1, 1, -1, -1])
    phi_bar = solution.phi_star + np.deg2rad([0.0, 0.0, 10.0])
    kin = forward_kinematics(model, theta_bar)
    w = total_wrench(model, kin, phi_bar, env, front_only=True)
    from transformsat.attitude import dcm_from_euler
    assert spectrum(stability_matrix(model, phi_bar, theta_bar, env)).c_value <= 1e-8
    prob = EquilibriumProblem(f_target_inertial=dcm_from_euler(phi_bar).T @ w.force, t_target_body=w.torque,
                              n_seeds=6)
    sol = solve(model, env, prob)
    assert sol.converged
    assert sol.residuals["force_error_N"] <= 1e-9 and sol.residuals["torque_error_Nm"] <= 1e-10


def test_surrogate_implies_non_divergent_spectrum(model, env, problem):
    nlp = _Nlp(model, env, problem)
    hits = 0
    for _ in range(200):
        phi, theta = sunlit_state(model, rng, max_theta=1.0)
        x = np.concatenate([phi, theta])
        if np.all(nlp.surrogate(x) >= 0):
            hits += 1
            assert spectrum(nlp.a_phi(x)).c_value * np.sqrt(nlp.a_scale) <= 1e-8
    assert hits > 0


def test_determinism_and_parallel_agree(model, env, problem, solution):
    again = solve(model, env, problem)
    assert np.array_equal(again.phi_star, solution.phi_star)
    assert np.array_equal(again.theta_star, solution.theta_star)
    par = solve(model, env, EquilibriumProblem(f_target_inertial=F_TARGET, n_seeds=2), jobs=2)
    assert par.seed_index == solution.seed_index
    assert np.array_equal(par.theta_star, solution.theta_star)


def test_infeasible_target(model, env):
    big = np.array([0, 0, -1.01 * max_force(model, env)])
    with pytest.raises(InfeasibleTargetError):
        solve(model, env, EquilibriumProblem(f_target_inertial=big))


@pytest.mark.filterwarnings("ignore::transformsat.jacobians.FrontFaceWarning")
def test_failed_seed_reports_status(model, env):
    # reachable magnitude, but pointing sideways: no sunlit-front equilibrium exists
    prob = EquilibriumProblem(f_target_inertial=np.array([3e-5, 0, 0]), n_seeds=1, max_iter=20)
    sol = solve_seed(model, env, prob, 0)
    assert not sol.converged
    graded = evaluate(model, env, prob, sol.phi_star, sol.theta_star)
    assert graded.status != CONVERGED
