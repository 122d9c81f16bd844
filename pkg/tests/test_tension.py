import numpy as np
import pytest

from cdpr_shaping.errors import SingularWrenchMatrix
from cdpr_shaping.model import RobotModel, cable_geometry, wrench_matrix
from cdpr_shaping.tension import TensionLimits, feedforward_wrench, solve_tensions, static_tensions

from conftest import P1


def four_cable_model():
    b = np.array([[-2.0, -1.5, 3.0], [2.0, -1.5, 3.1], [2.2, 1.6, 2.9], [-1.8, 1.4, 3.0]])
    return RobotModel(b, None, 0.65, np.zeros((3, 3)), np.zeros(3), 70e9, 1e-6, 0.05, 0.003)


def test_static_hover_wrench(creator):
    w = feedforward_wrench(creator, np.zeros(3), np.zeros(3))
    assert np.allclose(w, [0, 0, -0.65 * 9.81])
    # cables must supply the opposite: W tau = -w_f = (0, 0, m g)
    tau = solve_tensions(creator, P1, w).tensions
    assert np.allclose(wrench_matrix(creator, P1) @ tau, [0, 0, 0.65 * 9.81])


def test_accelerating_wrench(creator):
    w = feedforward_wrench(creator, np.zeros(3), [0, 0, 0.4444])
    assert w[2] == pytest.approx(-0.65 * (0.4444 + 9.81))


def test_static_tensions_against_linear_solve(creator):
    sp = static_tensions(creator, P1)
    U = cable_geometry(creator, P1).units
    oracle = np.linalg.solve(U.T, [0, 0, 0.65 * 9.81])
    assert sp.feasible
    assert np.all(sp.tensions > 0)
    assert np.allclose(sp.tensions, oracle, rtol=1e-12)
    assert np.sum(sp.tensions * U[:, 2]) == pytest.approx(0.65 * 9.81)


def test_symmetric_two_cable_toy():
    # planar x/y world where gravity acts along -y and both cables pull up-and-out
    b2 = np.array([[-1.0, 1.0, 0.0], [1.0, 1.0, 0.0]])
    m = RobotModel(b2, None, 1.0, np.zeros((3, 3)), np.zeros(3), 1e9, 1e-6, 0.05, 0.003, dof=2,
                   gravity=(0.0, -9.81, 0.0))
    tau = solve_tensions(m, [0, 0, 0], feedforward_wrench(m, np.zeros(2), np.zeros(2))).tensions
    assert tau[0] == pytest.approx(tau[1], rel=1e-12)
    assert tau[0] == pytest.approx(9.81 / 2 * np.sqrt(2))


def test_pushing_is_infeasible(creator):
    # a large downward pull on the platform needs cables that push
    w_f = np.array([0.0, 0.0, 0.0]) + np.array([0, 0, 50.0])
    assert not solve_tensions(creator, P1, w_f).feasible


def test_singular_wrench_matrix():
    b = np.array([[0.0, 0, 1], [0.0, 0, 2], [0.0, 0, 3]])
    m = RobotModel(b, None, 1.0, np.zeros((3, 3)), np.zeros(3), 1e9, 1e-6, 0.05, 0.003)
    with pytest.raises(SingularWrenchMatrix):
        solve_tensions(m, [0, 0, 0], [0, 0, -9.81])


def test_redundant_min_norm_beats_random_samples():
    m = four_cable_model()
    rng = np.random.default_rng(7)
    limits = TensionLimits(1.0, 50.0)
    p = np.array([0.1, 0.2, 1.0])
    w_f = feedforward_wrench(m, np.zeros(3), [0.3, -0.2, 0.5])
    sp = solve_tensions(m, p, w_f, limits)
    assert sp.feasible
    W = wrench_matrix(m, p)
    null = np.linalg.svd(W)[2][-1]
    best = np.linalg.norm(sp.tensions)
    samples = sp.tensions[None, :] + rng.uniform(-20, 20, size=(10_000, 1)) * null[None, :]
    ok = np.all((samples >= limits.tau_min) & (samples <= limits.tau_max), axis=1)
    assert ok.any()
    assert np.linalg.norm(samples[ok], axis=1).min() >= best - 1e-6


def test_redundant_active_lower_bound():
    m = four_cable_model()
    p = np.array([1.5, -1.0, 1.0])
    w_f = feedforward_wrench(m, np.zeros(3), np.zeros(3))
    free = np.linalg.lstsq(wrench_matrix(m, p), -w_f, rcond=None)[0]
    limits = TensionLimits(float(free.min()) + 0.5, 500.0)
    sp = solve_tensions(m, p, w_f, limits)
    assert sp.feasible
    assert sp.tensions.min() == pytest.approx(limits.tau_min, abs=1e-9)
    assert np.max(np.abs(wrench_matrix(m, p) @ sp.tensions + w_f)) < 1e-9


def test_limits_validation():
    with pytest.raises(ValueError):
        TensionLimits(5.0, 1.0)
    with pytest.raises(ValueError):
        TensionLimits(-1.0, 1.0)


def test_two_vertical_cables_share_weight():
    # one translational dof ("up" is +x here), two parallel cables: redundant, min-norm splits evenly
    b = np.array([[2.0, -0.1, 0.0], [2.0, 0.1, 0.0]])
    m = RobotModel(b, None, 1.0, np.zeros((3, 3)), np.zeros(3), 1e9, 1e-6, 0.05, 0.003, dof=1,
                   gravity=(-9.81, 0.0, 0.0))
    w_f = feedforward_wrench(m, np.zeros(1), np.zeros(1))
    sp = solve_tensions(m, [0, 0, 0], w_f)
    cosine = 2.0 / np.hypot(2.0, 0.1)
    assert sp.feasible
    assert np.allclose(sp.tensions, 9.81 / 2 / cosine, rtol=1e-12)
