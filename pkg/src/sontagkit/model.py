"""Input-affine systems, CLF candidates, weights, and the a/b decomposition.

The time derivative of a candidate V along ``xdot = f(x) + G(x) u`` splits as

    Vdot = a(x) + b(x)^T u,   a = grad V . f,   b = G^T grad V.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ModelError, NonFiniteError, SontagKitError, WeightsError
from .exprcore import Expression, parse

ZERO_TOL = 1e-12
SYMMETRY_TOL = 1e-12


def _as_expression(item, n) -> Expression:
    if isinstance(item, Expression):
        if item.n != n:
            raise ModelError(f"expression {item} declared for n={item.n}, expected {n}")
        return item
    return parse(str(item), n)


@dataclass(frozen=True)
class SystemModel:
    """``xdot = f(x) + G(x) u`` with ``f(0) = 0``.

    ``f`` and ``G`` may be given as expression text; they are parsed against
    ``n`` state variables.
    """

    n: int
    m: int
    f: tuple
    G: tuple

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ModelError(f"dimensions must be positive, got n={self.n}, m={self.m}")
        if len(self.f) != self.n:
            raise ModelError(f"f has {len(self.f)} entries, expected n={self.n}")
        if len(self.G) != self.n or any(len(row) != self.m for row in self.G):
            raise ModelError(f"G must be {self.n}x{self.m}")
        f = tuple(_as_expression(e, self.n) for e in self.f)
        G = tuple(tuple(_as_expression(e, self.n) for e in row) for row in self.G)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "G", G)
        f0 = self.drift(np.zeros(self.n))
        if np.max(np.abs(f0)) > ZERO_TOL:
            raise ModelError(f"f(0) = {f0.tolist()} is not zero")

    @classmethod
    def from_strings(cls, f: Sequence[str], G: Sequence[Sequence[str]]) -> "SystemModel":
        n = len(f)
        m = len(G[0]) if G else 0
        return cls(n, m, tuple(f), tuple(tuple(row) for row in G))

    def drift(self, x) -> np.ndarray:
        return np.array([e.evaluate(x) for e in self.f])

    def input_matrix(self, x) -> np.ndarray:
        return np.array([[e.evaluate(x) for e in row] for row in self.G])

    def rhs(self, x, u) -> np.ndarray:
        return self.drift(x) + self.input_matrix(x) @ np.asarray(u, dtype=float)

    def to_dict(self) -> dict:
        return {
            "f": [str(e) for e in self.f],
            "G": [[str(e) for e in row] for row in self.G],
        }


@dataclass(frozen=True)
class ClfCandidate:
    """Candidate Control Lyapunov Function ``V(x)`` with ``V(0) = 0``."""

    V: Expression
    name: str = ""

    def __post_init__(self):
        v0 = self.V.evaluate(np.zeros(self.n))
        if abs(v0) > ZERO_TOL:
            raise ModelError(f"V(0) = {v0} is not zero")

    @classmethod
    def from_string(cls, source: str, n: int, name: str = "") -> "ClfCandidate":
        return cls(parse(source, n), name)

    @property
    def n(self) -> int:
        return self.V.n

    def value(self, x) -> float:
        return self.V.evaluate(x)

    def gradient(self, x) -> np.ndarray:
        return self.V.gradient(x)

    def __str__(self):
        return str(self.V)


class SymmetricFactor:
    """LDL^T factorization without pivoting of a symmetric matrix.

    Positive definiteness is decided by the sign of the pivots ``d``.
    """

    def __init__(self, M):
        M = np.array(M, dtype=float)
        k = M.shape[0]
        L = np.eye(k)
        d = np.zeros(k)
        for j in range(k):
            d[j] = M[j, j] - np.dot(L[j, :j] ** 2, d[:j])
            if d[j] == 0.0:
                # later columns undefined; leave them zero
                break
            for i in range(j + 1, k):
                L[i, j] = (M[i, j] - np.dot(L[i, :j] * L[j, :j], d[:j])) / d[j]
        self.L = L
        self.pivots = d

    @property
    def positive_definite(self) -> bool:
        return bool(np.all(self.pivots > 0.0))

    def solve(self, rhs) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        y = np.linalg.solve(self.L, rhs)
        y = y / (self.pivots if y.ndim == 1 else self.pivots[:, None])
        return np.linalg.solve(self.L.T, y)


def _check_spd(M, label):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise WeightsError(f"{label} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise WeightsError(f"{label} has non-finite entries")
    asym = np.max(np.abs(M - M.T)) if M.size else 0.0
    if asym > SYMMETRY_TOL:
        raise WeightsError(f"{label} is not symmetric (max |M - M^T| = {asym:.3g})")
    factor = SymmetricFactor(M)
    bad = np.flatnonzero(factor.pivots <= 0.0)
    if bad.size:
        j = int(bad[0])
        raise WeightsError(
            f"{label} is not positive definite (pivot {j + 1} = {factor.pivots[j]:.6g})"
        )
    return factor


@dataclass(frozen=True, eq=False)
class Weights:
    """Constant state and input weights ``Q`` (n x n) and ``R`` (m x m)."""

    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "Q", np.atleast_2d(np.array(self.Q, dtype=float)))
        object.__setattr__(self, "R", np.atleast_2d(np.array(self.R, dtype=float)))
        self.Q.setflags(write=False)
        self.R.setflags(write=False)

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @property
    def m(self) -> int:
        return self.R.shape[0]

    def to_dict(self) -> dict:
        return {"Q": self.Q.tolist(), "R": self.R.tolist()}


def check_weights(weights: Weights, n: int | None = None, m: int | None = None) -> SymmetricFactor:
    """Accept ``weights`` iff Q and R are symmetric positive definite.

    Returns the factorization of R (reused to apply R^-1). Raises
    :class:`WeightsError` naming the offending matrix otherwise.
    """
    _check_spd(weights.Q, "Q")
    factor_r = _check_spd(weights.R, "R")
    if n is not None and weights.n != n:
        raise WeightsError(f"Q is {weights.n}x{weights.n}, system has n={n}")
    if m is not None and weights.m != m:
        raise WeightsError(f"R is {weights.m}x{weights.m}, system has m={m}")
    return factor_r


@dataclass(frozen=True, eq=False)
class AbPair:
    a: float
    b: np.ndarray


def eval_ab(system: SystemModel, clf: ClfCandidate, x) -> AbPair:
    if clf.n != system.n or len(x) != system.n:
        raise ModelError(f"dimension mismatch: system n={system.n}, clf n={clf.n}, x has {len(x)}")
    grad = clf.gradient(x)
    a = float(grad @ system.drift(x))
    b = system.input_matrix(x).T @ grad
    if not (math.isfinite(a) and np.all(np.isfinite(b))):
        raise NonFiniteError(f"non-finite a/b at {list(x)}")
    return AbPair(a, b)


@dataclass(frozen=True)
class SamplingConfig:
    """Deterministic state sampling: radii uniform in ``[r_min, r_max]``,
    directions uniform on the unit sphere."""

    n_samples: int = 1000
    r_min: float = 1e-3
    r_max: float = 3.0
    eps_b: float = 1e-9
    seed: int = 42

    def __post_init__(self):
        if self.n_samples < 1 or not 0 < self.r_min <= self.r_max:
            raise ValueError(f"invalid sampling config {self}")

    def states(self, n: int) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        directions = rng.standard_normal((self.n_samples, n))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        radii = rng.uniform(self.r_min, self.r_max, self.n_samples)
        return directions * radii[:, None]


@dataclass(frozen=True)
class Violation:
    kind: str  # "positivity", "clf_condition", "radial", "evaluation"
    x: tuple
    detail: str

    def to_dict(self):
        return {"kind": self.kind, "x": list(self.x), "detail": self.detail}


@dataclass
class ClfReport:
    """Outcome of sampled CLF checking.

    A pass means no violation was found among the samples, not a proof. Radial
    unboundedness is probed only along the 2n coordinate half-axes.
    """

    samples: int
    seed: int
    positivity_violations: list = field(default_factory=list)
    clf_condition_violations: list = field(default_factory=list)
    radial_violations: list = field(default_factory=list)
    evaluation_violations: list = field(default_factory=list)
    near_zero_b: int = 0

    @property
    def violations(self) -> list:
        return (
            self.positivity_violations
            + self.clf_condition_violations
            + self.radial_violations
            + self.evaluation_violations
        )

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self, max_listed: int = 10) -> dict:
        return {
            "passed": self.passed,
            "samples": self.samples,
            "seed": self.seed,
            "near_zero_b_samples": self.near_zero_b,
            "counts": {
                "positivity": len(self.positivity_violations),
                "clf_condition": len(self.clf_condition_violations),
                "radial": len(self.radial_violations),
                "evaluation": len(self.evaluation_violations),
            },
            "violations": [v.to_dict() for v in self.violations[:max_listed]],
            "note": "sampled check: no violation found is not a proof; radial "
            "unboundedness probed along coordinate axes only",
        }


def _radial_rays(clf: ClfCandidate, sampling: SamplingConfig, report: ClfReport, points=24):
    radii = np.geomspace(sampling.r_min, sampling.r_max, points)
    for axis in range(clf.n):
        for sign in (1.0, -1.0):
            values = []
            for r in radii:
                x = np.zeros(clf.n)
                x[axis] = sign * r
                try:
                    values.append(clf.value(x))
                except NonFiniteError as exc:
                    report.evaluation_violations.append(Violation("evaluation", tuple(x), str(exc)))
                    break
            else:
                if np.any(np.diff(values) <= 0.0):
                    ray = f"{'+' if sign > 0 else '-'}x{axis + 1}"
                    x = np.zeros(clf.n)
                    x[axis] = sign * sampling.r_max
                    report.radial_violations.append(
                        Violation("radial", tuple(x), f"V not increasing along {ray} ray")
                    )


def check_clf(system: SystemModel, clf: ClfCandidate, sampling: SamplingConfig | None = None) -> ClfReport:
    sampling = sampling or SamplingConfig()
    if clf.n != system.n:
        raise ModelError(f"CLF declared for n={clf.n}, system has n={system.n}")
    report = ClfReport(samples=sampling.n_samples, seed=sampling.seed)
    for x in sampling.states(system.n):
        key = tuple(float(v) for v in x)
        try:
            v = clf.value(x)
            ab = eval_ab(system, clf, x)
        except SontagKitError as exc:
            report.evaluation_violations.append(Violation("evaluation", key, str(exc)))
            continue
        if v <= 0.0:
            report.positivity_violations.append(Violation("positivity", key, f"V = {v:.6g}"))
        if np.linalg.norm(ab.b) <= sampling.eps_b:
            report.near_zero_b += 1
            if ab.a >= 0.0:
                report.clf_condition_violations.append(
                    Violation("clf_condition", key, f"|b| <= {sampling.eps_b:g} and a = {ab.a:.6g}")
                )
    _radial_rays(clf, sampling, report)
    return report
