import numpy as np
import pytest

from conftest import F_TARGET, sunlit_state
from transformsat import sim
from transformsat.dynamics import AttitudeState, assemble_mass_blocks, bias_torque
from transformsat.equilibrium import stability_matrix
from transformsat.model import forward_kinematics
from transformsat.srp import total_wrench

rng = np.random.default_rng(8)
DPHI0 = np.deg2rad([0.819, 0.567, 0.088])
OMEGA0 = np.deg2rad([1e-3, 1e-3, 1e-3])


def _closed_loop(omega_n, **kw):
    args = dict(duration=20 * 2 * np.pi / omega_n, dphi0=DPHI0, omega0=OMEGA0, control=sim.LQR)
    args.update(kw)
    return sim.SimConfig(**args)


@pytest.fixture(scope="module")
def closed_run(model, env, solution, gain, omega_n):
    return sim.integrate(model, env, _closed_loop(omega_n), solution.phi_star, solution.theta_star, gain)


def test_derivative_vanishes_at_equilibrium(model, env, solution):
    st = AttitudeState(solution.phi_star, np.zeros(3), solution.theta_star, np.zeros(8))
    d = sim.derivative(model, env, st, np.zeros(8), front_only=True)
    assert np.linalg.norm(d[3:6]) <= 1e-12 and not np.any(d[:3]) and not np.any(d[6:])


def test_zero_pressure_zero_derivative(model):
    phi, theta = sunlit_state(model, rng)
    d = sim.derivative(model, 0.0, AttitudeState(phi, np.zeros(3), theta, np.zeros(8)), np.zeros(8))
    assert not np.any(d)


def test_rotational_row_residual(model, env):
    for _ in range(5):
        phi, theta = sunlit_state(model, rng)
        st = AttitudeState(phi, rng.normal(scale=1e-3, size=3), theta, rng.normal(scale=1e-3, size=8))
        u = rng.normal(scale=1e-5, size=8)
        d = sim.derivative(model, env, st, u)
        kin = forward_kinematics(model, theta)
        b = assemble_mass_blocks(model, kin)
        torque = total_wrench(model, kin, phi, env).torque
        res = b.m_ww @ d[3:6] + b.m_wt @ u + bias_torque(model, st, b) - torque
        scale = np.linalg.norm(b.m_ww) * np.linalg.norm(d[3:6]) + np.linalg.norm(b.m_wt @ u)
        assert np.linalg.norm(res) <= 1e-12 * scale


def test_equilibrium_is_a_fixed_point(model, env, solution, gain):
    cfg = sim.SimConfig(duration=1e4, control=sim.LQR)
    tr = sim.integrate(model, env, cfg, solution.phi_star, solution.theta_star, gain)
    assert np.max(np.abs(tr.dphi)) < 1e-8 and np.max(np.abs(tr.omega)) < 1e-10
    assert np.max(np.abs(tr.dtheta)) < 1e-8


@pytest.mark.slow
def test_rk45_matches_rk4(model, env, solution, gain, omega_n):
    cfg = _closed_loop(omega_n, duration=1e4)
    a = sim.integrate(model, env, cfg, solution.phi_star, solution.theta_star, gain)
    b = sim.integrate_rk4(model, env, cfg, solution.phi_star, solution.theta_star, gain, dt=1.0)
    assert np.allclose(a.t, b.t)
    for field in ("phi", "omega", "theta", "theta_dot"):
        assert np.max(np.abs(getattr(a, field) - getattr(b, field))) < 1e-4


def test_open_loop_front_only_is_neutral(model, env, solution, omega_n):
    cfg = sim.SimConfig(duration=10 * 2 * np.pi / omega_n, dphi0=DPHI0 / 10, wrench_model=sim.FRONT_ONLY,
                        abs_tol=1e-9, rel_tol=1e-9)
    tr = sim.integrate(model, env, cfg, solution.phi_star, solution.theta_star)
    # amplitude in modal coordinates of the attitude stiffness (Euler angles are non-normal)
    vinv = np.linalg.inv(np.linalg.eig(stability_matrix(model, solution.phi_star, solution.theta_star, env))[1])
    from transformsat.attitude import euler_rate_matrix
    rates = np.array([euler_rate_matrix(p) @ w for p, w in zip(tr.phi, tr.omega)])
    size = np.linalg.norm(np.hstack([tr.dphi @ vinv.T, rates @ vinv.T / omega_n]), axis=1)
    assert np.max(size) <= 2 * size[0]
    assert np.max(np.abs(tr.u)) == 0.0


def test_closed_loop_converges(closed_run, omega_n):
    rep = sim.metrics(closed_run, F_TARGET)
    assert rep["final_dphi_deg"] < 0.05 and rep["settling_time_s"]["0.05"] is not None
    assert rep["final_force_error_rel"] < 1e-3
    assert closed_run.saturated == 0 and closed_run.clamped == 0


def test_closed_loop_sun_momentum_envelope(model, env, solution, gain, omega_n):
    cfg = _closed_loop(omega_n, abs_tol=1e-9, rel_tol=1e-10)
    tr = sim.integrate(model, env, cfg, solution.phi_star, solution.theta_star, gain)
    h = np.abs(sim.sun_axis_momentum(tr))
    period = 2 * np.pi / omega_n
    peaks = np.array([h[(tr.t >= k * period) & (tr.t < (k + 1) * period)].max() for k in range(1, 20)])
    assert np.all(np.diff(peaks) <= 1e-6 * h.max())
    assert peaks[-1] < 1e-4 * peaks[0]


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="global RK45 error over 20 periods exceeds the local tolerance "
                                       "(about 2.3e-5 rad in joint angles against a 1e-5 bound)")
def test_halving_tolerances(model, env, solution, gain, omega_n, closed_run):
    cfg = _closed_loop(omega_n, abs_tol=5e-6, rel_tol=5e-7)
    fine = sim.integrate(model, env, cfg, solution.phi_star, solution.theta_star, gain)
    y1 = np.concatenate([closed_run.phi[-1], closed_run.omega[-1], closed_run.theta[-1], closed_run.theta_dot[-1]])
    y2 = np.concatenate([fine.phi[-1], fine.omega[-1], fine.theta[-1], fine.theta_dot[-1]])
    assert np.all(np.abs(y1 - y2) <= 1e-5 + 1e-6 * np.abs(y2))


@pytest.mark.slow
def test_tightening_tolerances_converges(model, env, solution, gain, omega_n, closed_run):
    runs = [sim.integrate(model, env, _closed_loop(omega_n, abs_tol=a, rel_tol=a / 10), solution.phi_star,
                          solution.theta_star, gain) for a in (1e-7, 1e-10)]
    state = lambda tr: np.concatenate([tr.phi[-1], tr.omega[-1], tr.theta[-1], tr.theta_dot[-1]])  # noqa: E731
    ref = state(runs[1])
    err_default = np.max(np.abs(state(closed_run) - ref))
    err_tight = np.max(np.abs(state(runs[0]) - ref))
    assert err_tight < 1e-6 and err_tight < 0.1 * err_default


def test_metrics_on_constant_trajectory(model, env, solution):
    tr = sim.integrate(model, env, sim.SimConfig(duration=1000.0, wrench_model=sim.FRONT_ONLY),
                       solution.phi_star, solution.theta_star)
    rep = sim.metrics(tr)
    assert rep["dominant_frequency_radps"] == 0.0
    assert rep["final_dphi_deg"] < 1e-9 and rep["settling_time_s"]["0.05"] == 0.0
    assert rep["h_sun_first_last"][0] == pytest.approx(rep["h_sun_first_last"][1], abs=1e-15)


def test_dominant_frequency_of_a_sinusoid():
    t = np.arange(0, 1000.0, 1.0)
    assert sim.dominant_frequency(t, np.sin(0.2 * np.pi * t)) == pytest.approx(0.2 * np.pi, rel=1e-2)


def test_config_validation(model, env, solution, gain):
    with pytest.raises(ValueError):
        sim.SimConfig(duration=0.0)
    with pytest.raises(ValueError):
        sim.SimConfig(duration=1.0, control="pid")
    with pytest.raises(ValueError):
        sim.SimConfig(duration=1.0, wrench_model="back")
    with pytest.raises(ValueError):
        sim.integrate(model, env, sim.SimConfig(duration=1.0, control=sim.LQR), solution.phi_star,
                      solution.theta_star)
    with pytest.raises(ValueError):
        sim.integrate(model, env, sim.SimConfig(duration=1.0), solution.phi_star, solution.theta_star, gain)


def test_joint_bound_is_clamped_not_fatal(model, env, solution):
    lo, hi = model.theta_bounds
    theta_eq = solution.theta_star.copy()
    cfg = sim.SimConfig(duration=200.0, dtheta0=np.where(np.arange(8) == 0, hi[0] + 0.01 - theta_eq[0], 0.0))
    tr = sim.integrate(model, env, cfg, solution.phi_star, theta_eq)
    assert tr.clamped > 0 and np.all(np.isfinite(tr.omega))


def test_discrete_hold_mode(model, env, solution, gain, omega_n):
    cfg = _closed_loop(omega_n, duration=2000.0, hold_period=10.0)
    tr = sim.integrate(model, env, cfg, solution.phi_star, solution.theta_star, gain)
    assert np.all(np.isfinite(tr.phi)) and np.max(np.abs(tr.u)) > 0
