import math

import numpy as np
import pytest

from sontagkit import (
    SamplingConfig,
    SontagController,
    Weights,
    hjb_residual_classical,
    hjb_residual_distorted,
    optimal_feedback,
    parse,
    scalar_optimal_gradient,
    solve_care,
    verify_lambda_identity,
)
from sontagkit.catalog import get_entry, list_entries
from sontagkit.errors import ModelError
from sontagkit.model import ClfCandidate

from conftest import SQRT3

SQRT2 = math.sqrt(2.0)
ONE = Weights([[1.0]], [[1.0]])


def test_classical_residual_double_integrator(double_integrator):
    system, clf, weights = double_integrator
    assert abs(hjb_residual_classical(system, clf, weights, [1.0, 1.0])) < 1e-12


def test_classical_residual_integrator(integrator):
    system, clf, weights = integrator
    assert hjb_residual_classical(system, clf, weights, [2.0]) == 0.0
    steep = ClfCandidate.from_string("x1^2", 1)
    assert hjb_residual_classical(system, steep, weights, [1.0]) == pytest.approx(-1.5, rel=1e-15)


def test_distorted_residual_cubic_at_two(cubic):
    system, clf, weights = cubic
    ctrl = SontagController(system, clf, weights)
    assert ctrl.lambda_value([2.0]) == pytest.approx(4.0 + math.sqrt(17.0), rel=1e-15)
    assert abs(hjb_residual_distorted(ctrl, [2.0])) < 1e-9 * 4.0


def test_distorted_residual_undefined_at_origin(cubic):
    ctrl = SontagController(*cubic)
    with pytest.raises(ValueError):
        hjb_residual_distorted(ctrl, [0.0])


@pytest.mark.parametrize("name", list_entries())
def test_distorted_residual_catalog(name):
    entry = get_entry(name)
    for clf in entry.clfs.values():
        ctrl = SontagController(entry.system, clf, entry.weights)
        for x in SamplingConfig(n_samples=100, seed=8).states(entry.system.n):
            q = float(x @ entry.weights.Q @ x)
            assert abs(hjb_residual_distorted(ctrl, x)) < 1e-9 * max(1.0, q)


def test_distorted_residual_series_branch():
    entry = get_entry("double_integrator")
    ctrl = SontagController(entry.system, entry.clf("skewed"), entry.weights)
    x = np.array([1.5, -1.5 + 1e-9])
    assert ctrl.feedback(x).branch == "series"
    assert abs(hjb_residual_distorted(ctrl, x)) < 1e-8


def test_lambda_identity_double_integrator(double_integrator):
    report = verify_lambda_identity(*double_integrator)
    assert report.passed
    assert report.max_lambda_deviation < 1e-8
    assert report.lambda_failures == 0


def test_lambda_identity_fails_for_cubic(cubic):
    report = verify_lambda_identity(*cubic)
    assert not report.passed
    assert report.max_lambda_deviation > 1.0
    assert report.max_abs_residual > 1.0


def test_lambda_identity_integrator(integrator):
    report = verify_lambda_identity(*integrator)
    assert report.passed
    assert report.max_lambda_deviation < 1e-12
    assert report.to_dict()["samples"] == 1000


def test_lambda_identity_counts_near_zero_b():
    # b vanishes only on the line x2 = -x1, which random samples miss
    entry = get_entry("double_integrator")
    report = verify_lambda_identity(entry.system, entry.clf("skewed"), entry.weights)
    assert not report.passed
    assert report.excluded_near_zero_b == 0


@pytest.mark.parametrize("name", ["integrator1d", "double_integrator", "damped1d"])
def test_riccati_clf_collapses_lambda(name):
    entry = get_entry(name)
    assert verify_lambda_identity(entry.system, entry.clf("riccati"), entry.weights).max_lambda_deviation < 1e-8


X1, ONE_EXPR, ZERO = parse("x1", 1), parse("1", 1), parse("0", 1)
CUBE = parse("x1^3", 1)


def test_scalar_gradient_examples():
    assert scalar_optimal_gradient(ZERO, ONE_EXPR, 1.0, 1.0, 2.0) == 2.0
    assert scalar_optimal_gradient(CUBE, ONE_EXPR, 1.0, 1.0, 1.0) == pytest.approx(1.0 + SQRT2, rel=1e-15)
    assert scalar_optimal_gradient(CUBE, ONE_EXPR, 1.0, 1.0, 0.0) == 0.0


def test_scalar_gradient_rejects_bad_input():
    with pytest.raises(ModelError):
        scalar_optimal_gradient(ZERO, ONE_EXPR, 0.0, 1.0, 1.0)
    with pytest.raises(ModelError):
        scalar_optimal_gradient(X1, ZERO, 1.0, 1.0, 1.0)


@pytest.mark.parametrize("f_src", ["x1^3", "-x1", "0", "x1", "sin(x1)", "-x1^3 + 2*x1"])
@pytest.mark.parametrize("g_src", ["1", "2 + cos(x1)"])
@pytest.mark.parametrize("q, r", [(1.0, 1.0), (4.0, 0.5), (0.01, 3.0)])
def test_scalar_gradient_solves_hjb(f_src, g_src, q, r):
    f, g = parse(f_src, 1), parse(g_src, 1)
    for x in np.linspace(-3.0, 3.0, 61):
        p = scalar_optimal_gradient(f, g, q, r, x)
        fv, gv = f.evaluate([x]), g.evaluate([x])
        res = 0.5 * q * x * x - 0.5 * gv * gv * p * p / r + fv * p
        assert abs(res) < 1e-10 * max(1.0, q * x * x)
        if x != 0.0:
            assert p * x > 0.0


def test_optimal_feedback_examples(double_integrator, riccati_p):
    system, clf, weights = double_integrator
    u = optimal_feedback(system, lambda x: riccati_p @ x, weights, [1.0, 0.0])
    np.testing.assert_allclose(u, [-1.0], rtol=1e-15)
    assert optimal_feedback(system, clf, weights, [0.0, 0.0]).tolist() == [0.0]

    cubic = get_entry("cubic1d")
    grad = lambda x: [scalar_optimal_gradient(CUBE, ONE_EXPR, 1.0, 1.0, x[0])]  # noqa: E731
    u = optimal_feedback(cubic.system, grad, ONE, [1.0])
    assert u[0] == pytest.approx(-(1.0 + SQRT2), rel=1e-15)


@pytest.mark.parametrize("name", ["integrator1d", "cubic1d", "damped1d"])
def test_sontag_equals_optimal_in_one_dimension(name):
    entry = get_entry(name)
    ctrl = SontagController(entry.system, entry.clf("quadratic"), entry.weights)
    f, g = entry.system.f[0], entry.system.G[0][0]
    grad = lambda x: [scalar_optimal_gradient(f, g, 1.0, 1.0, x[0])]  # noqa: E731
    for x in np.linspace(-3.0, 3.0, 1001):
        if x == 0.0:
            continue
        u_opt = optimal_feedback(entry.system, grad, entry.weights, [x])[0]
        assert abs(ctrl([x])[0] - u_opt) <= 1e-9 * abs(u_opt)


@pytest.mark.parametrize("name", ["integrator1d", "double_integrator", "damped1d"])
def test_sontag_equals_lqr(name):
    entry = get_entry(name)
    ctrl = SontagController(entry.system, entry.clf("riccati"), entry.weights)
    rng = np.random.default_rng(12)
    K = solve_care(entry.linear, entry.weights).K
    for x in rng.uniform(-3.0, 3.0, (1000, entry.system.n)):
        assert np.linalg.norm(ctrl(x) + K @ x) < 1e-8 * max(1.0, np.linalg.norm(x))


def test_double_integrator_gain(riccati_p):
    entry = get_entry("double_integrator")
    np.testing.assert_allclose(solve_care(entry.linear, entry.weights).K, [[1.0, SQRT3]], rtol=1e-12)
