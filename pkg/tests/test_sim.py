import math

import numpy as np
import pytest

from sontagkit import SimConfig, SontagController, SystemModel, Termination, Weights, costs, simulate
from sontagkit.catalog import get_entry
from sontagkit.errors import SimulationError
from sontagkit.model import ClfCandidate
from sontagkit.sim import Trajectory, conservation_drift, dopri_step, rk4_step, value_consistency

from conftest import SQRT3


def _sontag(name, clf=None, weights=None):
    entry = get_entry(name)
    return SontagController(entry.system, entry.clf(clf), weights or entry.weights), entry


def _state_at(traj, t):
    i = int(np.argmin(np.abs(traj.times - t)))
    assert traj.times[i] == pytest.approx(t, abs=1e-12)
    return traj.states[i]


def test_closed_loop_exponential_decay():
    ctrl, entry = _sontag("integrator1d")
    traj = simulate(ctrl, entry.system, [1.0], SimConfig(t_max=1.0, stop_norm=0.0))
    assert traj.termination == Termination.T_MAX_REACHED
    assert abs(traj.states[-1, 0] - math.exp(-1.0)) < 1e-7


def test_origin_start_terminates_immediately():
    ctrl, entry = _sontag("double_integrator")
    traj = simulate(ctrl, entry.system, [0.0, 0.0])
    assert traj.converged
    assert len(traj) == 1
    assert costs(traj) == (0.0, 0.0)


def test_lqr_double_integrator_cost():
    entry = get_entry("double_integrator")
    K = entry.linear.B.T @ np.array([[SQRT3, 1.0], [1.0, SQRT3]])
    traj = simulate(lambda x: -K @ x, entry.system, [1.0, 0.0], clf=entry.clf("riccati"), weights=entry.weights)
    assert traj.converged
    assert np.linalg.norm(traj.states[-1]) < 1e-8
    _, j5 = costs(traj)
    assert abs(j5 - SQRT3 / 2) / (SQRT3 / 2) < 0.005
    assert np.all(traj.lambdas == 1.0)


def test_costs_integrator_q4():
    ctrl, entry = _sontag("integrator1d", weights=Weights([[4.0]], [[1.0]]))
    j4, j5 = costs(simulate(ctrl, entry.system, [1.0]), tail_corrected=True)
    assert j4 == pytest.approx(0.5, rel=0.005)
    assert j5 == pytest.approx(1.0, rel=0.005)


def test_costs_cubic():
    ctrl, entry = _sontag("cubic1d")
    j4, _ = costs(simulate(ctrl, entry.system, [1.0]), tail_corrected=True)
    assert j4 == pytest.approx(0.5, rel=0.005)


def test_costs_of_empty_trajectory():
    empty = np.zeros(0)
    traj = Trajectory(empty, np.zeros((0, 1)), np.zeros((0, 1)), empty, empty, empty, empty, empty, empty,
                      Termination.CONVERGED)
    assert costs(traj) == (0.0, 0.0)


@pytest.mark.parametrize(
    "name, clf, weights, x0",
    [
        ("integrator1d", "quadratic", Weights([[4.0]], [[1.0]]), [1.0]),
        ("cubic1d", "quadratic", None, [1.0]),
        ("double_integrator", "riccati", None, [1.0, 0.0]),
    ],
)
def test_value_consistency_examples(name, clf, weights, x0):
    ctrl, entry = _sontag(name, clf, weights)
    traj = simulate(ctrl, entry.system, x0)
    assert value_consistency(traj, ctrl.clf, x0) < 0.005


def test_value_consistency_needs_convergence():
    ctrl, entry = _sontag("cubic1d")
    traj = simulate(ctrl, entry.system, [1.0], SimConfig(t_max=0.1))
    with pytest.raises(ValueError):
        value_consistency(traj, ctrl.clf, [1.0])


CASES = [
    ("integrator1d", "quadratic", [1.5]),
    ("integrator1d", "steep", [-2.0]),
    ("integrator1d", "quartic", [0.7]),
    ("cubic1d", "quadratic", [1.0]),
    ("cubic1d", "quartic", [-1.2]),
    ("damped1d", "quadratic", [2.0]),
    ("damped1d", "steep", [-1.0]),
    ("double_integrator", "riccati", [1.0, 0.0]),
    ("double_integrator", "skewed", [-1.0, 2.0]),
]


@pytest.mark.parametrize("name, clf, x0", CASES)
def test_conservation_and_monotonicity(name, clf, x0):
    ctrl, entry = _sontag(name, clf)
    traj = simulate(ctrl, entry.system, x0)
    assert traj.converged
    assert conservation_drift(traj) < 1e-5
    assert np.all(np.diff(traj.v_values) <= 1e-7)
    assert np.all(np.diff(traj.times) > 0)
    for arr in (traj.states, traj.inputs, traj.v_values, traj.j4_running, traj.j5_running):
        assert np.all(np.isfinite(arr))
    assert np.all(np.isfinite(traj.lambdas[1:-1]))


def test_rk4_order():
    ctrl, entry = _sontag("integrator1d")

    def error(h):
        traj = simulate(ctrl, entry.system, [1.0], SimConfig(method="rk4_fixed", step=h, t_max=1.0, stop_norm=0.0))
        assert traj.times[-1] == pytest.approx(1.0, abs=1e-12)
        return abs(traj.states[-1, 0] - math.exp(-1.0))

    ratio = error(0.1) / error(0.05)
    assert 12.0 <= ratio <= 20.0


def test_j4_equals_j5_when_lambda_is_one():
    ctrl, entry = _sontag("double_integrator")
    traj = simulate(ctrl, entry.system, [1.0, 0.0])
    assert np.max(np.abs(traj.lambdas[np.isfinite(traj.lambdas)] - 1.0)) < 1e-8
    j4, j5 = costs(traj)
    assert j4 == pytest.approx(j5, rel=1e-8)
    np.testing.assert_allclose(traj.integrand_j4, traj.integrand_j5, rtol=1e-8)


def test_plain_callable_has_identical_costs():
    entry = get_entry("integrator1d")
    traj = simulate(lambda x: -x, entry.system, [1.0], weights=entry.weights)
    np.testing.assert_array_equal(traj.j4_running, traj.j5_running)


def test_controller_error_is_recorded():
    # b = x(1 - x) vanishes at x = 1 where a = x^2 > 0
    system = SystemModel.from_strings(["x1"], [["1 - x1"]])
    ctrl = SontagController(system, ClfCandidate.from_string("0.5*x1^2", 1), Weights([[1.0]], [[1.0]]),
                            unchecked=True)
    traj = simulate(ctrl, system, [1.0])
    assert traj.termination == Termination.CONTROLLER_ERROR
    assert "CLF" in traj.message or "violat" in traj.message


def test_blow_up_raises_with_partial_trajectory():
    system = SystemModel.from_strings(["x1^3"], [["1"]])
    with pytest.raises(SimulationError) as info:
        simulate(lambda x: np.zeros(1), system, [2.0], SimConfig(t_max=1.0), weights=Weights([[1.0]], [[1.0]]))
    partial = info.value.trajectory
    assert partial.termination == Termination.DIVERGED
    assert partial.states[-1, 0] > 2.0


def test_step_limit():
    ctrl, entry = _sontag("cubic1d")
    traj = simulate(ctrl, entry.system, [1.0], SimConfig(method="rk4_fixed", step=1e-3, max_steps=10))
    assert traj.termination == Termination.STEP_LIMIT
    assert len(traj) == 11


def test_sim_config_validation():
    with pytest.raises(ValueError):
        SimConfig(method="euler")
    with pytest.raises(ValueError):
        SimConfig(step=0.0)
    with pytest.raises(ValueError):
        SimConfig(stop_norm=-1.0)


def test_single_steps_on_linear_decay():
    rhs = lambda y: -y  # noqa: E731
    y = np.array([1.0])
    h = 0.1
    # on a linear ODE one RK4 step is the 4th-order Taylor polynomial of exp(-h)
    assert rk4_step(rhs, y, h)[0] == pytest.approx(1 - h + h**2 / 2 - h**3 / 6 + h**4 / 24, rel=1e-15)
    y5, err, _ = dopri_step(rhs, y, 0.1)
    assert y5[0] == pytest.approx(math.exp(-0.1), abs=1e-9)
    assert abs(err[0]) < 1e-7


def test_tail_estimates():
    ctrl, entry = _sontag("cubic1d")
    traj = simulate(ctrl, entry.system, [1.0])
    assert traj.j4_tail == pytest.approx(traj.v_values[-1])
    assert 0.0 <= traj.j5_tail_estimate <= traj.j5_tail_bound
