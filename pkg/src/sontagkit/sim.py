"""Closed-loop simulation with running cost integrals.

The ODE state is augmented with the two running costs

    J4' = (x^T Q x + u^T R u) / (2 lambda),   J5' = (x^T Q x + u^T R u) / 2,

so the quadrature error follows the integrator tolerance.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ClfViolationError, NonFiniteError, SimulationError
from .model import ClfCandidate, SystemModel, Weights


class Termination(str, enum.Enum):
    CONVERGED = "converged"
    T_MAX_REACHED = "t_max_reached"
    STEP_LIMIT = "step_limit"
    CONTROLLER_ERROR = "controller_error"
    DIVERGED = "diverged"  # only on the partial trajectory attached to SimulationError


METHODS = ("rk4_fixed", "rk45_adaptive")


@dataclass(frozen=True)
class SimConfig:
    method: str = "rk45_adaptive"
    step: float = 1e-2  # fixed step, or initial step of the adaptive scheme
    rtol: float = 1e-8
    atol: float = 1e-10
    t_max: float = 100.0
    stop_norm: float = 1e-8
    max_steps: int = 200_000

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}, expected one of {METHODS}")
        if not (self.step > 0 and self.rtol > 0 and self.atol > 0 and self.t_max > 0):
            raise ValueError("step, rtol, atol and t_max must be positive")
        if self.stop_norm < 0 or self.max_steps < 1:
            raise ValueError("stop_norm must be >= 0 and max_steps >= 1")


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    lambdas: np.ndarray
    v_values: np.ndarray
    integrand_j4: np.ndarray
    integrand_j5: np.ndarray
    j4_running: np.ndarray
    j5_running: np.ndarray
    termination: Termination
    message: str = ""
    j4_tail: float = 0.0
    j5_tail_estimate: float = 0.0
    j5_tail_bound: float = 0.0
    n_rejected: int = field(default=0)

    @property
    def converged(self) -> bool:
        return self.termination == Termination.CONVERGED

    def __len__(self):
        return len(self.times)

    def lambda_stats(self) -> dict | None:
        lam = self.lambdas[np.isfinite(self.lambdas)]
        if lam.size == 0:
            return None
        return {"min": float(lam.min()), "max": float(lam.max()), "mean": float(lam.mean())}


# Dormand-Prince 5(4); the 5th-order solution is propagated
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_DP_E = _DP_B5 - _DP_B4


def rk4_step(rhs, y, h):
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * h * k1)
    k3 = rhs(y + 0.5 * h * k2)
    k4 = rhs(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def dopri_step(rhs, y, h, k1=None):
    """One Dormand-Prince step.

    Returns ``(y_new, err, k_last)``; ``k_last = rhs(y_new)`` can be passed as
    ``k1`` of the next step (first same as last).
    """
    k = np.empty((7, y.size))
    k[0] = rhs(y) if k1 is None else k1
    for i in range(1, 7):
        k[i] = rhs(y + h * (np.asarray(_DP_A[i]) @ k[:i]))
    y_new = y + h * (_DP_B5 @ k)
    err = h * (_DP_E @ k)
    return y_new, err, k[6]


class _Loop:
    """Controller and cost bookkeeping for one simulation."""

    def __init__(self, ctrl, system: SystemModel, weights: Weights, clf: ClfCandidate | None):
        self.ctrl = ctrl
        self.system = system
        self.Q = np.asarray(weights.Q)
        self.R = np.asarray(weights.R)
        self.clf = clf
        self.has_lambda = hasattr(ctrl, "feedback")

    def control(self, x):
        if self.has_lambda:
            ev = self.ctrl.feedback(x)
            return np.asarray(ev.u, dtype=float), ev.lam
        return np.asarray(self.ctrl(x), dtype=float).reshape(self.system.m), 1.0

    def integrands(self, x, u, lam):
        c = 0.5 * (float(x @ self.Q @ x) + float(u @ self.R @ u))
        if c == 0.0:
            return 0.0, 0.0
        return c / lam, c

    def rhs(self, z):
        n = self.system.n
        x = z[:n]
        u, lam = self.control(x)
        i4, i5 = self.integrands(x, u, lam)
        out = np.empty_like(z)
        out[:n] = self.system.rhs(x, u)
        out[n] = i4
        out[n + 1] = i5
        return out

    def record(self, x):
        u, lam = self.control(x)
        i4, i5 = self.integrands(x, u, lam)
        v = self.clf.value(x) if self.clf is not None else math.nan
        return u, lam, v, i4, i5


def simulate(
    ctrl,
    system: SystemModel,
    x0,
    cfg: SimConfig | None = None,
    clf: ClfCandidate | None = None,
    weights: Weights | None = None,
) -> Trajectory:
    """Integrate ``xdot = f(x) + G(x) u(x)`` from ``x0`` with cost accumulation.

    ``ctrl`` is either an object with ``feedback(x)`` returning a control
    evaluation with ``u`` and ``lam`` (e.g. :class:`SontagController`), or a
    plain callable ``u(x)``, for which lambda is taken as 1. ``clf`` and
    ``weights`` default to the controller's own.

    A CLF violation during integration ends the run with termination
    ``controller_error`` and the partial trajectory. A non-finite state raises
    :class:`SimulationError` carrying the partial trajectory.
    """
    cfg = cfg or SimConfig()
    clf = clf if clf is not None else getattr(ctrl, "clf", None)
    weights = weights if weights is not None else getattr(ctrl, "weights", None)
    if weights is None:
        raise ValueError("weights are required for a plain feedback function")
    x0 = np.asarray(x0, dtype=float).reshape(system.n)
    if not np.all(np.isfinite(x0)):
        raise ValueError(f"non-finite initial state {x0.tolist()}")

    loop = _Loop(ctrl, system, weights, clf)
    n = system.n
    rows = {k: [] for k in ("t", "x", "u", "lam", "v", "i4", "i5", "j4", "j5")}

    def push(t, z):
        u, lam, v, i4, i5 = loop.record(z[:n])
        rows["t"].append(t)
        rows["x"].append(z[:n].copy())
        rows["u"].append(u)
        rows["lam"].append(lam)
        rows["v"].append(v)
        rows["i4"].append(i4)
        rows["i5"].append(i5)
        rows["j4"].append(z[n])
        rows["j5"].append(z[n + 1])

    def build(termination, message="", rejected=0):
        lam = np.array(rows["lam"], dtype=float)
        traj = Trajectory(
            times=np.array(rows["t"]),
            states=np.array(rows["x"]).reshape(-1, n),
            inputs=np.array(rows["u"]).reshape(-1, system.m),
            lambdas=lam,
            v_values=np.array(rows["v"], dtype=float),
            integrand_j4=np.array(rows["i4"]),
            integrand_j5=np.array(rows["i5"]),
            j4_running=np.array(rows["j4"]),
            j5_running=np.array(rows["j5"]),
            termination=termination,
            message=message,
            n_rejected=rejected,
        )
        if len(traj) and clf is not None:
            v_end = float(traj.v_values[-1])
            finite = lam[np.isfinite(lam)]
            lam_end = lam[-1] if np.isfinite(lam[-1]) else (finite[-1] if finite.size else 1.0)
            traj.j4_tail = v_end
            traj.j5_tail_estimate = float(lam_end) * v_end
            traj.j5_tail_bound = float(finite.max() if finite.size else 1.0) * v_end
        return traj

    def diverged(message, rejected):
        exc = SimulationError(message)
        exc.trajectory = build(Termination.DIVERGED, message, rejected)
        return exc

    z = np.concatenate([x0, [0.0, 0.0]])
    t = 0.0
    try:
        push(t, z)
    except ClfViolationError as exc:
        return build(Termination.CONTROLLER_ERROR, str(exc))
    if np.linalg.norm(x0) <= cfg.stop_norm:
        return build(Termination.CONVERGED)

    h = min(cfg.step, cfg.t_max)
    k1 = None
    rejected = 0
    steps = 0
    while True:
        if steps >= cfg.max_steps:
            return build(Termination.STEP_LIMIT, rejected=rejected)
        h = min(h, cfg.t_max - t)
        try:
            if cfg.method == "rk4_fixed":
                z_new = rk4_step(loop.rhs, z, h)
                accept = True
            else:
                z_new, err, k_last = dopri_step(loop.rhs, z, h, k1)
                scale = cfg.atol + cfg.rtol * np.maximum(np.abs(z), np.abs(z_new))
                ratio = float(np.max(np.abs(err) / scale))
                accept = ratio <= 1.0
                if ratio == 0.0:
                    factor = 5.0
                else:
                    factor = min(5.0, max(0.2, 0.9 * ratio ** -0.2))
            if not np.all(np.isfinite(z_new)):
                raise NonFiniteError(f"state blew up near t={t}")
        except ClfViolationError as exc:
            return build(Termination.CONTROLLER_ERROR, str(exc), rejected)
        except NonFiniteError as exc:
            raise diverged(f"non-finite state: {exc}", rejected) from exc

        steps += 1
        if cfg.method == "rk45_adaptive" and not accept:
            rejected += 1
            h *= min(factor, 1.0)
            k1 = None
            if h < 1e-14 * max(1.0, t):
                raise diverged(f"step size underflow at t={t}", rejected)
            continue

        t_new = t + h
        if t_new <= t:
            raise diverged(f"time does not advance at t={t}", rejected)
        z, t = z_new, t_new
        try:
            push(t, z)
        except ClfViolationError as exc:
            return build(Termination.CONTROLLER_ERROR, str(exc), rejected)
        if cfg.method == "rk45_adaptive":
            k1 = k_last
            h *= factor
        if np.linalg.norm(z[:n]) <= cfg.stop_norm:
            return build(Termination.CONVERGED, rejected=rejected)
        if t >= cfg.t_max:
            return build(Termination.T_MAX_REACHED, rejected=rejected)


def costs(traj: Trajectory, tail_corrected: bool = False) -> tuple:
    """Accumulated ``(J4, J5)`` at termination, both including the factor 1/2.

    With ``tail_corrected`` the truncated tails are added: ``V(x_T)`` for J4
    (exact by value-function conservation) and ``lambda(x_T) V(x_T)`` for J5.
    """
    if len(traj) == 0:
        return 0.0, 0.0
    j4 = float(traj.j4_running[-1])
    j5 = float(traj.j5_running[-1])
    if tail_corrected:
        j4 += traj.j4_tail
        j5 += traj.j5_tail_estimate
    return j4, j5


def conservation_drift(traj: Trajectory) -> float:
    """Max relative deviation of ``V(x(t)) + J4(t)`` from its initial value."""
    total = traj.v_values + traj.j4_running
    ref = max(abs(total[0]), 1e-12)
    return float(np.max(np.abs(total - total[0])) / ref)


def value_consistency(traj: Trajectory, clf: ClfCandidate, x0, drift_tol: float = 1e-5) -> float:
    """Relative error ``|J4 - V(x0)| / V(x0)`` of a converged trajectory.

    Also checks that ``V(x(t)) + J4(t)`` stays constant within ``drift_tol``
    and raises :class:`SimulationError` otherwise.
    """
    if not traj.converged:
        raise ValueError(f"trajectory not converged ({traj.termination.value})")
    v0 = clf.value(np.asarray(x0, dtype=float))
    j4, _ = costs(traj, tail_corrected=True)
    drift = conservation_drift(traj)
    if drift > drift_tol:
        raise SimulationError(f"V + J4 drifted by {drift:.3g} (> {drift_tol:g})")
    return abs(j4 - v0) / max(v0, 1e-12)
