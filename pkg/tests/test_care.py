import math

import numpy as np
import pytest
from scipy.linalg import solve_continuous_are

from sontagkit import LinearSystem, Weights, closed_loop_eigen_check, riccati_clf, solve_care
from sontagkit.care import CareSolution, SolverOptions, care_residual, solve_lyapunov
from sontagkit.errors import CareError
from sontagkit.model import SymmetricFactor

from conftest import SQRT3

DOUBLE = LinearSystem([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]])
EYE2 = Weights(np.eye(2), [[1.0]])
ONE = Weights([[1.0]], [[1.0]])


def _residual_ok(sol, weights):
    return sol.residual_norm < 1e-10 * max(1.0, np.linalg.norm(weights.Q, "fro"))


def test_scalar_integrator():
    sol = solve_care(LinearSystem([[0.0]], [[1.0]]), ONE)
    assert sol.P[0, 0] == pytest.approx(1.0, abs=1e-12)
    assert sol.K[0, 0] == pytest.approx(1.0, abs=1e-12)
    assert _residual_ok(sol, ONE)


def test_double_integrator(riccati_p):
    sol = solve_care(DOUBLE, EYE2)
    assert np.max(np.abs(sol.P - riccati_p)) < 1e-10
    np.testing.assert_allclose(sol.K, [[1.0, SQRT3]], atol=1e-10)
    assert _residual_ok(sol, EYE2)


def test_hurwitz_with_zero_input():
    sol = solve_care(LinearSystem([[-1.0]], [[0.0]]), ONE)
    assert sol.P[0, 0] == pytest.approx(0.5, abs=1e-14)
    assert _residual_ok(sol, ONE)


def test_gain_is_r_inverse_bt_p():
    R = np.array([[2.0, 0.3], [0.3, 1.0]])
    sys = LinearSystem([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, -2.0, 0.5]], np.eye(3)[:, :2])
    w = Weights(np.diag([1.0, 2.0, 3.0]), R)
    sol = solve_care(sys, w)
    np.testing.assert_array_equal(sol.K, np.linalg.solve(R, sys.B.T) @ sol.P)


@pytest.mark.parametrize("seed", range(25))
def test_against_scipy(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 7))
    m = int(rng.integers(1, n + 1))
    A = rng.standard_normal((n, n))
    B = rng.standard_normal((n, m))
    L = rng.standard_normal((n, n))
    Q = L @ L.T + 0.1 * np.eye(n)
    M = rng.standard_normal((m, m))
    R = M @ M.T + 0.5 * np.eye(m)
    w = Weights(Q, R)
    sol = solve_care(LinearSystem(A, B), w)
    ref = solve_continuous_are(A, B, Q, R)
    np.testing.assert_allclose(sol.P, ref, rtol=1e-8, atol=1e-8)
    assert _residual_ok(sol, w)
    assert np.max(np.abs(sol.P - sol.P.T)) <= 1e-12
    assert SymmetricFactor(sol.P).positive_definite
    assert closed_loop_eigen_check(LinearSystem(A, B), sol.K)


def test_uncontrollable_unstable_mode_is_an_error():
    sys = LinearSystem([[1.0, 0.0], [0.0, -1.0]], [[0.0], [1.0]])
    with pytest.raises(CareError):
        solve_care(sys, EYE2)


def test_user_initial_gain_must_stabilize():
    with pytest.raises(CareError, match="not stabilizing"):
        solve_care(DOUBLE, EYE2, SolverOptions(K0=(0.0, 0.0)))
    sol = solve_care(DOUBLE, EYE2, SolverOptions(K0=(1.0, 1.0)))
    assert _residual_ok(sol, EYE2)


def test_lyapunov_solution():
    Ac = np.array([[-1.0, 2.0], [0.0, -3.0]])
    M = np.array([[2.0, 0.5], [0.5, 1.0]])
    P = solve_lyapunov(Ac, M)
    np.testing.assert_allclose(Ac.T @ P + P @ Ac + M, 0.0, atol=1e-14)


def _char_poly_roots_2x2(M):
    # s^2 - tr(M) s + det(M)
    tr, det = np.trace(M), np.linalg.det(M)
    disc = complex(tr * tr - 4.0 * det)
    return sorted([(tr + disc**0.5) / 2.0, (tr - disc**0.5) / 2.0], key=lambda z: z.imag)


def test_eigen_check_double_integrator_lqr():
    verdict = closed_loop_eigen_check(DOUBLE, [[1.0, SQRT3]])
    assert verdict.passed
    expected = _char_poly_roots_2x2(DOUBLE.A - DOUBLE.B @ np.array([[1.0, SQRT3]]))
    got = sorted(verdict.eigenvalues, key=lambda z: z.imag)
    np.testing.assert_allclose(got, expected, atol=1e-14)
    np.testing.assert_allclose(got, [-SQRT3 / 2 - 0.5j, -SQRT3 / 2 + 0.5j], atol=1e-14)


def test_eigen_check_failures_and_hurwitz():
    assert not closed_loop_eigen_check(DOUBLE, [[0.0, 0.0]])
    assert closed_loop_eigen_check(LinearSystem([[-1.0]], [[0.0]]), [[0.0]])


def _solution(P):
    P = np.atleast_2d(np.asarray(P, dtype=float))
    return CareSolution(P, np.zeros((1, P.shape[0])), 0.0, 0)


def test_riccati_clf_identity():
    assert str(riccati_clf(_solution([[1.0]])).V) == "0.5*x1^2"


def test_riccati_clf_double_integrator(riccati_p):
    clf = riccati_clf(_solution(riccati_p))
    assert clf.value([1.0, 1.0]) == pytest.approx(0.5 * (2.0 * SQRT3 + 2.0), rel=1e-15)
    assert clf.value([1.0, 1.0]) == pytest.approx(2.732050808, abs=1e-9)


def test_riccati_clf_scaled_identity():
    assert riccati_clf(_solution([[2.0]])).value([3.0]) == 9.0


def test_riccati_clf_matches_quadratic_form():
    rng = np.random.default_rng(0)
    L = rng.standard_normal((4, 4))
    P = L @ L.T
    clf = riccati_clf(_solution(P))
    for x in rng.standard_normal((50, 4)):
        assert clf.value(x) == pytest.approx(0.5 * x @ P @ x, rel=1e-12, abs=1e-12)
        np.testing.assert_allclose(clf.gradient(x), P @ x, rtol=1e-11, atol=1e-11)


def test_care_residual_vanishes_at_known_solution(riccati_p):
    assert np.max(np.abs(care_residual(DOUBLE, EYE2, riccati_p))) < 1e-14
    # A + A^T - e2 e2^T + I = ((1, 1), (1, 0))
    assert math.isclose(np.linalg.norm(care_residual(DOUBLE, EYE2, np.eye(2)), "fro"), SQRT3)
