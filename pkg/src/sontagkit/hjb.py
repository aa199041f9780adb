"""HJB residuals, the lambda == 1 identity, and optimal feedback.

The classical HJB equation for ``xdot = f + G u`` and running cost
``(x^T Q x + u^T R u)/2`` reads

    x^T Q x / 2 - J_x^T G R^-1 G^T J_x / 2 + J_x^T f = 0,

with optimal feedback ``u = -R^-1 G^T J_x``. When a CLF solves it, the
Sontag distortion factor is identically one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ModelError, NonFiniteError, SontagKitError
from .exprcore import Expression
from .model import ClfCandidate, SamplingConfig, SystemModel, Weights, check_weights, eval_ab
from .sontag import SontagController


def hjb_residual_classical(system: SystemModel, candidate: ClfCandidate, weights: Weights, x) -> float:
    x = np.asarray(x, dtype=float)
    r_factor = check_weights(weights, system.n, system.m)
    ab = eval_ab(system, candidate, x)
    beta = float(ab.b @ r_factor.solve(ab.b))
    q = float(x @ weights.Q @ x)
    res = 0.5 * q - 0.5 * beta + ab.a
    if not math.isfinite(res):
        raise NonFiniteError(f"non-finite HJB residual at {x.tolist()}")
    return res


def hjb_residual_distorted(ctrl: SontagController, x) -> float:
    """``q/2 - lambda^2 beta/2 + lambda a`` with lambda from the controller.

    Zero up to rounding by construction of lambda; used as a self-consistency
    probe of both lambda branches.
    """
    x = np.asarray(x, dtype=float)
    ev = ctrl.feedback(x)
    if ev.branch == "origin":
        raise ValueError("distorted HJB residual is undefined at the equilibrium")
    beta = float(ev.b @ ctrl.r_inv(ev.b))
    q = float(x @ ctrl.weights.Q @ x)
    return 0.5 * q - 0.5 * ev.lam**2 * beta + ev.lam * ev.a


@dataclass
class HjbReport:
    samples: int
    max_abs_residual: float
    max_lambda_deviation: float
    excluded_near_zero_b: int
    lambda_failures: int
    residual_tol: float
    lambda_tol: float

    @property
    def passed(self) -> bool:
        return (
            self.lambda_failures == 0
            and self.max_abs_residual < self.residual_tol
            and self.max_lambda_deviation < self.lambda_tol
        )

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "samples": self.samples,
            "max_abs_residual": self.max_abs_residual,
            "max_lambda_deviation": self.max_lambda_deviation,
            "excluded_near_zero_b": self.excluded_near_zero_b,
            "lambda_failures": self.lambda_failures,
            "residual_tol": self.residual_tol,
            "lambda_tol": self.lambda_tol,
        }


def verify_lambda_identity(
    system: SystemModel,
    clf: ClfCandidate,
    weights: Weights,
    sampling: SamplingConfig | None = None,
    residual_tol: float = 1e-8,
    lambda_tol: float = 1e-8,
) -> HjbReport:
    """Sample the classical HJB residual and ``|lambda - 1|``.

    States with ``|b| <= eps_b`` are left out of the lambda statistic (lambda
    carries a 1/beta there) and counted separately.
    """
    sampling = sampling or SamplingConfig()
    ctrl = SontagController(system, clf, weights, unchecked=True)
    max_res = 0.0
    max_dev = 0.0
    excluded = 0
    failures = 0
    for x in sampling.states(system.n):
        try:
            max_res = max(max_res, abs(hjb_residual_classical(system, clf, weights, x)))
            ev = ctrl.feedback(x)
        except SontagKitError:
            failures += 1
            continue
        if np.linalg.norm(ev.b) <= sampling.eps_b:
            excluded += 1
            continue
        max_dev = max(max_dev, abs(ev.lam - 1.0))
    return HjbReport(
        samples=sampling.n_samples,
        max_abs_residual=max_res,
        max_lambda_deviation=max_dev,
        excluded_near_zero_b=excluded,
        lambda_failures=failures,
        residual_tol=residual_tol,
        lambda_tol=lambda_tol,
    )


def scalar_optimal_gradient(f: Expression, g: Expression, q: float, r: float, x: float) -> float:
    """Derivative of the optimal value function of a scalar problem at ``x``.

    Solves ``q x^2/2 - g^2 p^2/(2r) + f p = 0`` for ``p = J*'(x)`` and keeps the
    root with ``p x > 0``.
    """
    if f.n != 1 or g.n != 1:
        raise ModelError("scalar_optimal_gradient needs n = 1 expressions")
    if q <= 0 or r <= 0:
        raise ModelError("q and r must be positive")
    x = float(x)
    if x == 0.0:
        return 0.0
    fv = f.evaluate([x])
    gv = g.evaluate([x])
    if gv == 0.0:
        raise ModelError(f"g({x}) = 0: optimal gradient undefined")
    c = gv * gv / r
    s = math.sqrt(fv * fv + c * q * x * x)
    sign = 1.0 if x > 0 else -1.0
    if sign * fv >= 0.0:
        return (fv + sign * s) / c
    # rationalized: f + sign*s = sign*c*q*x^2/(s + |f|)
    return sign * q * x * x / (s + abs(fv))


def optimal_feedback(system: SystemModel, value_gradient: Callable, weights: Weights, x) -> np.ndarray:
    """``u = -R^-1 G(x)^T grad J*(x)``.

    ``value_gradient`` is a callable returning the gradient, or any object with
    a ``gradient`` method (e.g. a :class:`ClfCandidate`).
    """
    x = np.asarray(x, dtype=float)
    grad_fn = getattr(value_gradient, "gradient", value_gradient)
    grad = np.asarray(grad_fn(x), dtype=float).reshape(system.n)
    r_factor = check_weights(weights, system.n, system.m)
    u = -r_factor.solve(system.input_matrix(x).T @ grad)
    if not np.all(np.isfinite(u)):
        raise NonFiniteError(f"non-finite optimal feedback at {x.tolist()}")
    return u
