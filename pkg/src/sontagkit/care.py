"""Continuous-time algebraic Riccati equation for the LQR baseline.

Solves ``A^T P + P A - P B R^-1 B^T P + Q = 0`` by Newton-Kleinman iteration.
The quadratic ``V = x^T P x / 2`` solves the HJB equation of the linear problem,
so Sontag's formula built on it reproduces ``u = -R^-1 B^T P x``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CareError
from .exprcore import parse
from .model import ClfCandidate, SymmetricFactor, Weights, check_weights


@dataclass(frozen=True, eq=False)
class LinearSystem:
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.array(self.A, dtype=float))
        B = np.array(self.B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(A.shape[0], -1)
        if A.shape[0] != A.shape[1] or B.shape[0] != A.shape[0]:
            raise ValueError(f"incompatible shapes A{A.shape}, B{B.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True, eq=False)
class CareSolution:
    P: np.ndarray
    K: np.ndarray
    residual_norm: float
    iterations: int


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-12
    max_iter: int = 50
    K0: tuple | None = None


@dataclass(frozen=True)
class EigenVerdict:
    passed: bool
    eigenvalues: np.ndarray

    def __bool__(self):
        return self.passed


def solve_lyapunov(Ac, M) -> np.ndarray:
    """Symmetric ``P`` with ``Ac^T P + P Ac + M = 0``.

    Dense solve over the n(n+1)/2 upper-triangular unknowns.
    """
    Ac = np.asarray(Ac, dtype=float)
    M = np.asarray(M, dtype=float)
    n = Ac.shape[0]
    idx = [(i, j) for i in range(n) for j in range(i, n)]
    L = np.zeros((len(idx), len(idx)))
    for col, (i, j) in enumerate(idx):
        E = np.zeros((n, n))
        E[i, j] = E[j, i] = 1.0
        image = Ac.T @ E + E @ Ac
        L[:, col] = [image[r, c] for r, c in idx]
    rhs = -np.array([0.5 * (M[r, c] + M[c, r]) for r, c in idx])
    try:
        sol = np.linalg.solve(L, rhs)
    except np.linalg.LinAlgError as exc:
        raise CareError(f"singular Lyapunov system: {exc}") from exc
    P = np.zeros((n, n))
    for (i, j), v in zip(idx, sol):
        P[i, j] = P[j, i] = v
    return P


def care_residual(sys: LinearSystem, weights: Weights, P) -> np.ndarray:
    A, B = sys.A, sys.B
    R_inv_BT = np.linalg.solve(weights.R, B.T)
    return A.T @ P + P @ A - P @ B @ R_inv_BT @ P + weights.Q


def closed_loop_eigen_check(sys: LinearSystem, K) -> EigenVerdict:
    """Pass iff every eigenvalue of ``A - B K`` has negative real part."""
    K = np.atleast_2d(np.asarray(K, dtype=float)).reshape(sys.m, sys.n)
    eig = np.linalg.eigvals(sys.A - sys.B @ K)
    if not np.all(np.isfinite(eig)):
        raise CareError("eigenvalue computation failed")
    return EigenVerdict(bool(np.all(eig.real < 0.0)), eig)


def _initial_gain(sys: LinearSystem) -> np.ndarray:
    if closed_loop_eigen_check(sys, np.zeros((sys.m, sys.n))):
        return np.zeros((sys.m, sys.n))
    # shift past the spectrum: (A + sI) Z + Z (A + sI)^T = 2 B B^T, K0 = B^T Z^-1
    # gives (A - B K0) Z + Z (A - B K0)^T = -2 s Z
    shift = np.linalg.norm(sys.A, "fro") + 1.0
    As = sys.A + shift * np.eye(sys.n)
    Z = solve_lyapunov(As.T, -2.0 * sys.B @ sys.B.T)
    if not SymmetricFactor(Z).positive_definite:
        raise CareError("no stabilizing initial gain found (system not controllable?)")
    return sys.B.T @ np.linalg.inv(Z)


def solve_care(sys: LinearSystem, weights: Weights, opts: SolverOptions | None = None) -> CareSolution:
    opts = opts or SolverOptions()
    check_weights(weights, sys.n, sys.m)
    R_inv_BT = np.linalg.solve(weights.R, sys.B.T)
    K = np.asarray(opts.K0, dtype=float).reshape(sys.m, sys.n) if opts.K0 is not None else _initial_gain(sys)
    if not closed_loop_eigen_check(sys, K):
        raise CareError("initial gain is not stabilizing")

    P_prev = None
    for it in range(1, opts.max_iter + 1):
        Ac = sys.A - sys.B @ K
        P = solve_lyapunov(Ac, weights.Q + K.T @ weights.R @ K)
        P = 0.5 * (P + P.T)
        K = R_inv_BT @ P
        if P_prev is not None:
            step = np.linalg.norm(P - P_prev, "fro")
            if step < opts.tol * max(1.0, np.linalg.norm(P_prev, "fro")):
                break
        P_prev = P
    else:
        raise CareError(f"Newton-Kleinman did not converge in {opts.max_iter} iterations")

    residual = float(np.linalg.norm(care_residual(sys, weights, P), "fro"))
    return CareSolution(P=P, K=K, residual_norm=residual, iterations=it)


def riccati_clf(sol: CareSolution, name: str = "riccati") -> ClfCandidate:
    """``V = x^T P x / 2`` expanded into an expression over ``x1..xn``."""
    P = sol.P
    n = P.shape[0]
    terms = []
    for i in range(n):
        for j in range(i, n):
            coeff = 0.5 * P[i, i] if i == j else P[i, j]
            if coeff == 0.0:
                continue
            monomial = f"x{i + 1}^2" if i == j else f"x{i + 1}*x{j + 1}"
            terms.append((coeff, monomial))
    if not terms:
        return ClfCandidate(parse("0", n), name)
    text = ""
    for k, (coeff, monomial) in enumerate(terms):
        mag = repr(abs(float(coeff)))
        if k == 0:
            text = f"{'-' if coeff < 0 else ''}{mag}*{monomial}"
        else:
            text += f" {'-' if coeff < 0 else '+'} {mag}*{monomial}"
    return ClfCandidate(parse(text, n), name)
