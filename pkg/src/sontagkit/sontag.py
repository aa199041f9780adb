"""Sontag's universal formula in the Freeman-Primbs weighted form.

For a CLF ``V`` with ``a = grad V . f`` and ``b = G^T grad V``, and with
``beta = b^T R^-1 b`` and ``q = x^T Q x``, the feedback is

    u = -lambda(x) R^-1 b,   lambda = (a + sqrt(a^2 + q beta)) / beta,

where ``lambda`` is the positive root of ``q/2 - lambda^2 beta/2 + lambda a = 0``.
The controller minimizes the quadratic cost with running weight ``1/lambda``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ClfViolationError, ModelError
from .model import (
    AbPair,
    ClfCandidate,
    ClfReport,
    SamplingConfig,
    SystemModel,
    Weights,
    check_clf,
    check_weights,
    eval_ab,
)


class Branch(str, enum.Enum):
    REGULAR = "regular"
    SERIES = "series"
    ORIGIN = "origin"


@dataclass(frozen=True, eq=False)
class ControlEval:
    u: np.ndarray
    lam: float  # nan on the origin branch
    a: float
    b: np.ndarray
    branch: Branch


def lambda_root(a: float, beta: float, q: float, beta_tol: float = 1e-8):
    """Positive root of ``q/2 - lam^2 beta/2 + lam a = 0`` and the branch used.

    Returns ``(lam, branch)``, or ``None`` when no positive root exists
    (``a >= 0`` with ``beta`` numerically zero relative to ``a^2``).
    """
    if a == 0.0:
        if beta > 0.0:
            return math.sqrt(q / beta), Branch.REGULAR
        return None
    ratio = beta / (a * a)
    if ratio >= beta_tol:
        s = math.sqrt(a * a + q * beta)
        if a > 0.0:
            return (a + s) / beta, Branch.REGULAR
        # same root, rationalized to avoid cancellation in a + s
        return q / (s - a), Branch.REGULAR
    if a < 0.0:
        abs_a = -a
        return q / (2.0 * abs_a) - q * q * beta / (8.0 * abs_a**3), Branch.SERIES
    return None


class SontagController:
    """Bound (system, CLF, weights) producing u(x), lambda(x), a(x), b(x).

    Unless ``unchecked`` is set, the weights are validated and the CLF is
    sample-checked at construction; a failed check raises ``ModelError``.
    """

    def __init__(
        self,
        system: SystemModel,
        clf: ClfCandidate,
        weights: Weights,
        beta_tol: float = 1e-8,
        origin_tol: float = 1e-12,
        sampling: SamplingConfig | None = None,
        unchecked: bool = False,
    ):
        if clf.n != system.n:
            raise ModelError(f"CLF dimension {clf.n} != system dimension {system.n}")
        self.system = system
        self.clf = clf
        self.weights = weights
        self.beta_tol = beta_tol
        self.origin_tol = origin_tol
        self._r_factor = check_weights(weights, system.n, system.m)
        self.unchecked = unchecked
        self.clf_report: ClfReport | None = None
        if not unchecked:
            self.clf_report = check_clf(system, clf, sampling or SamplingConfig())
            if not self.clf_report.passed:
                first = self.clf_report.violations[0]
                raise ModelError(
                    f"{clf} failed the CLF check ({len(self.clf_report.violations)} violations, "
                    f"first: {first.kind} at {list(first.x)}: {first.detail})"
                )

    def r_inv(self, v) -> np.ndarray:
        return self._r_factor.solve(v)

    def _terms(self, x):
        ab = eval_ab(self.system, self.clf, x)
        r_inv_b = self.r_inv(ab.b)
        beta = float(ab.b @ r_inv_b)
        q = float(x @ self.weights.Q @ x)
        return ab, r_inv_b, beta, q

    def _lambda(self, x, ab: AbPair, beta: float, q: float):
        root = lambda_root(ab.a, beta, q, self.beta_tol)
        if root is None:
            raise ClfViolationError(x, ab.a, beta)
        return root

    def lambda_value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if np.linalg.norm(x) <= self.origin_tol:
            raise ValueError("lambda is undefined at the equilibrium")
        ab, _, beta, q = self._terms(x)
        return self._lambda(x, ab, beta, q)[0]

    def feedback(self, x) -> ControlEval:
        x = np.asarray(x, dtype=float)
        if np.linalg.norm(x) <= self.origin_tol:
            zero = np.zeros(self.system.m)
            return ControlEval(zero, math.nan, 0.0, zero.copy(), Branch.ORIGIN)
        ab, r_inv_b, beta, q = self._terms(x)
        lam, branch = self._lambda(x, ab, beta, q)
        return ControlEval(-lam * r_inv_b, lam, ab.a, ab.b, branch)

    def __call__(self, x) -> np.ndarray:
        return self.feedback(x).u

    def vdot(self, x) -> float:
        """``a + b^T u`` under the closed loop; equals ``-(q + u^T R u)/(2 lambda)``."""
        ev = self.feedback(x)
        return float(ev.a + ev.b @ ev.u)
