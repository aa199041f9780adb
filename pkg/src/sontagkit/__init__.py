"""Sontag-formula feedback synthesis and inverse-optimality verification.

Typical use::

    from sontagkit import catalog, SontagController, simulate

    entry = catalog.get_entry("cubic1d")
    ctrl = SontagController(entry.system, entry.clf("quadratic"), entry.weights)
    traj = simulate(ctrl, entry.system, [1.0])
"""

from .care import CareSolution, LinearSystem, closed_loop_eigen_check, riccati_clf, solve_care
from .exprcore import Dual, Expression, parse
from .hjb import (
    HjbReport,
    hjb_residual_classical,
    hjb_residual_distorted,
    optimal_feedback,
    scalar_optimal_gradient,
    verify_lambda_identity,
)
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
from .sim import SimConfig, Termination, Trajectory, costs, simulate, value_consistency
from .sontag import Branch, ControlEval, SontagController

__version__ = "0.1.0"

__all__ = [
    "AbPair",
    "Branch",
    "CareSolution",
    "ClfCandidate",
    "ClfReport",
    "ControlEval",
    "Dual",
    "Expression",
    "HjbReport",
    "LinearSystem",
    "SamplingConfig",
    "SimConfig",
    "SontagController",
    "SystemModel",
    "Termination",
    "Trajectory",
    "Weights",
    "check_clf",
    "check_weights",
    "closed_loop_eigen_check",
    "costs",
    "eval_ab",
    "hjb_residual_classical",
    "hjb_residual_distorted",
    "optimal_feedback",
    "parse",
    "riccati_clf",
    "scalar_optimal_gradient",
    "simulate",
    "solve_care",
    "value_consistency",
    "verify_lambda_identity",
]
