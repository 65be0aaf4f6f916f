import numpy as np
import pytest

from transformsat.control import (LinearizedSystem, LqrWeights, StabilizabilityError, default_weights,
                                  linearize, natural_frequency, riccati_residual_bound, solve_lqr)
from transformsat.equilibrium import StabilitySpectrum


def test_block_structure(model, system):
    m = model.n_joints
    a, b = system.a, system.b
    assert a.shape == (6 + 2 * m, 6 + 2 * m) and b.shape == (6 + 2 * m, m)
    sa, st, sda, sdt = system.slices()
    assert np.array_equal(a[sa, sda], np.eye(3)) and np.array_equal(a[st, sdt], np.eye(m))
    for rows in (sa, st, sdt):
        assert not np.any(a[rows, sa]) and not np.any(a[rows, st])
    assert not np.any(a[sda, sda]) and not np.any(a[sda, sdt]) and not np.any(a[sdt, :])
    assert not np.any(b[:3 + m]) and np.array_equal(b[sdt], np.eye(m))
    assert np.any(b[sda])


def test_zero_pressure_is_integrator_chain(model, solution):
    sys0 = linearize(model, 0.0, solution.phi_star, solution.theta_star)
    m = model.n_joints
    assert not np.any(sys0.a[3 + m:6 + m, :3 + m])


def test_off_equilibrium_warns(model, env, solution):
    with pytest.warns(RuntimeWarning):
        linearize(model, env, solution.phi_star + 0.2, solution.theta_star)


def test_default_weights():
    w = default_weights(8, 6e-4)
    assert w.q.shape == (22, 22) and w.r.shape == (8, 8)
    assert w.r[0, 0] == pytest.approx((6e-4**2 * np.pi / 180) ** -2)
    assert w.q[0, 0] == pytest.approx((np.pi / 180) ** -2)
    assert w.q[-1, -1] == pytest.approx((6e-4 * np.pi / 180) ** -2)
    assert default_weights(8, 1.2e-3).r[0, 0] == pytest.approx(w.r[0, 0] / 16)
    with pytest.raises(ValueError):
        default_weights(8, 0.0)
    with pytest.raises(ValueError):
        LqrWeights(np.diag([1.0, 0.0]), np.eye(1), 1.0)


def test_natural_frequency():
    sp = StabilitySpectrum(np.zeros(3), np.array([0, 2e-4j, 3e-4j]), -3e-4, 0.0)
    assert natural_frequency(sp) == 3e-4
    with pytest.raises(ValueError):
        natural_frequency(StabilitySpectrum(np.zeros(3), np.zeros(3), 0.0, 0.0))


def test_scalar_and_double_integrator():
    g = solve_lqr((np.zeros((1, 1)), np.ones((1, 1))), LqrWeights(np.eye(1), np.eye(1), 1.0))
    assert g.k[0, 0] == pytest.approx(1.0, abs=1e-10)
    a = np.array([[0.0, 1.0], [0.0, 0.0]])
    b = np.array([[0.0], [1.0]])
    g = solve_lqr((a, b), LqrWeights(np.eye(2), np.eye(1), 1.0))
    assert np.allclose(g.k, [[1.0, np.sqrt(3)]], atol=1e-10)
    assert np.allclose(g.riccati_x, [[np.sqrt(3), 1.0], [1.0, np.sqrt(3)]], atol=1e-10)
    assert g.spectral_abscissa == pytest.approx(-np.sqrt(3) / 2)


def test_scaling_does_not_change_the_answer():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(4, 4))
    b = rng.normal(size=(4, 2))
    w1 = LqrWeights(np.diag([1.0, 2.0, 3.0, 4.0]), np.diag([1.0, 5.0]), 1.0)
    g = solve_lqr((a, b), w1)
    assert g.residual_norm < 1e-9 * np.linalg.norm(w1.q)
    assert np.allclose(g.k, np.linalg.solve(w1.r, b.T @ g.riccati_x), rtol=1e-9)


def test_canonical_gain(model, gain, omega_n):
    w = default_weights(model.n_joints, omega_n)
    assert gain.residual_norm <= riccati_residual_bound(w)
    assert gain.spectral_abscissa < -0.05 * omega_n
    assert np.allclose(gain.riccati_x, gain.riccati_x.T)
    assert np.all(np.linalg.eigvalsh(gain.riccati_x) > 0)


def test_sun_line_mode_is_moved_left(system, gain, omega_n):
    open_eig = np.linalg.eigvals(system.a)
    assert np.max(open_eig.real) > -1e-3 * omega_n
    closed = np.linalg.eigvals(system.a - system.b @ gain.k)
    assert np.max(closed.real) < -0.05 * omega_n


def test_closed_loop_keeps_kinematic_identities(system, gain):
    acl = system.a - system.b @ gain.k
    sa, st, sda, sdt = system.slices()
    assert np.array_equal(acl[sa], system.a[sa]) and np.array_equal(acl[st], system.a[st])


def test_not_stabilizable():
    a = np.diag([1.0, -1.0])
    b = np.array([[0.0], [1.0]])
    with pytest.raises(StabilizabilityError):
        solve_lqr((a, b), LqrWeights(np.eye(2), np.eye(1), 1.0))
    sys_ = LinearizedSystem(a, b, np.zeros(3), np.zeros(1))
    with pytest.raises(StabilizabilityError):
        solve_lqr(sys_, LqrWeights(np.eye(2), np.eye(1), 1.0))
