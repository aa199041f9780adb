"""Built-in benchmark problems with closed-form reference values."""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .care import LinearSystem, riccati_clf, solve_care
from .errors import CatalogError
from .model import ClfCandidate, SystemModel, Weights


class Provenance(str, enum.Enum):
    INSPECTION = "inspection"
    CLOSED_FORM = "closed_form"  # regenerated by the test oracles
    THEORY = "theory"  # consequence of the inverse-optimality theory


@dataclass(frozen=True)
class Reference:
    value: float
    provenance: Provenance
    note: str = ""


@dataclass(frozen=True, eq=False)
class CatalogEntry:
    name: str
    system: SystemModel
    clfs: dict
    weights: Weights
    references: dict = field(default_factory=dict)
    linear: LinearSystem | None = None
    default_clf: str = "quadratic"
    initial_states: tuple = ()
    description: str = ""

    def clf(self, name: str | None = None) -> ClfCandidate:
        key = name or self.default_clf
        try:
            return self.clfs[key]
        except KeyError:
            raise CatalogError(f"entry {self.name!r} has no CLF {key!r}; known: {sorted(self.clfs)}") from None


def _clfs(n, **sources):
    return {name: ClfCandidate.from_string(src, n, name) for name, src in sources.items()}


def _scalar_weights():
    return Weights([[1.0]], [[1.0]])


def _integrator1d():
    system = SystemModel.from_strings(["0"], [["1"]])
    weights = _scalar_weights()
    lin = LinearSystem([[0.0]], [[1.0]])
    clfs = _clfs(1, quadratic="0.5*x1^2", steep="x1^2", quartic="0.25*x1^4")
    clfs["riccati"] = riccati_clf(solve_care(lin, weights))
    refs = {
        "care_p": Reference(1.0, Provenance.CLOSED_FORM, "q - p^2/r = 0"),
        "lambda_q4": Reference(2.0, Provenance.CLOSED_FORM, "sqrt(q r) with q=4, r=1, V=x^2/2"),
        "j4_q4_x0_1": Reference(0.5, Provenance.CLOSED_FORM, "V(1) with q=4"),
        "j5_q4_x0_1": Reference(1.0, Provenance.CLOSED_FORM, "int 4 e^(-4t) dt / 2 * 2"),
        "x_at_1": Reference(math.exp(-1.0), Provenance.CLOSED_FORM, "closed loop xdot = -x"),
        "hjb_residual_steep_x1": Reference(-1.5, Provenance.CLOSED_FORM, "1/2 - 4/2 for V=x^2"),
    }
    return CatalogEntry(
        "integrator1d", system, clfs, weights, refs, lin,
        initial_states=((1.0,),),
        description="xdot = u",
    )


def _cubic1d():
    system = SystemModel.from_strings(["x1^3"], [["1"]])
    clfs = _clfs(1, quadratic="0.5*x1^2", quartic="0.25*x1^4")
    refs = {
        "lambda_x1": Reference(1.0 + math.sqrt(2.0), Provenance.CLOSED_FORM, "x^2 + sqrt(x^4+1) at x=1"),
        "u_x1": Reference(-(1.0 + math.sqrt(2.0)), Provenance.CLOSED_FORM, "-x(x^2 + sqrt(x^4+1))"),
        "vdot_x1": Reference(-math.sqrt(2.0), Provenance.CLOSED_FORM, "1 - (1 + sqrt 2)"),
        "lambda_x2": Reference(4.0 + math.sqrt(17.0), Provenance.CLOSED_FORM, "x^2 + sqrt(x^4+1) at x=2"),
        "j4_x0_1": Reference(0.5, Provenance.THEORY, "J4 = V(x0)"),
    }
    return CatalogEntry(
        "cubic1d", system, clfs, _scalar_weights(), refs,
        initial_states=((1.0,),),
        description="xdot = x^3 + u",
    )


def _double_integrator():
    system = SystemModel.from_strings(["x2", "0"], [["0"], ["1"]])
    weights = Weights(np.eye(2), [[1.0]])
    lin = LinearSystem([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]])
    clfs = _clfs(2, skewed="x1^2 + x1*x2 + 0.5*x2^2")
    clfs["riccati"] = riccati_clf(solve_care(lin, weights))
    r3 = math.sqrt(3.0)
    refs = {
        "care_p11": Reference(r3, Provenance.CLOSED_FORM, "P = ((sqrt3, 1), (1, sqrt3))"),
        "care_p12": Reference(1.0, Provenance.CLOSED_FORM, "P = ((sqrt3, 1), (1, sqrt3))"),
        "lqr_k2": Reference(r3, Provenance.CLOSED_FORM, "K = (1, sqrt3)"),
        "lambda": Reference(1.0, Provenance.THEORY, "Riccati CLF solves the HJB"),
        "u_x11": Reference(-(1.0 + r3), Provenance.CLOSED_FORM, "-K (1, 1)"),
        "v_x11": Reference(0.5 * (2.0 * r3 + 2.0), Provenance.CLOSED_FORM, "x^T P x / 2 at (1,1)"),
        "j4_x0_10": Reference(0.5 * r3, Provenance.CLOSED_FORM, "x0^T P x0 / 2 at (1,0)"),
    }
    return CatalogEntry(
        "double_integrator", system, clfs, weights, refs, lin,
        default_clf="riccati",
        initial_states=((1.0, 0.0),),
        description="x1' = x2, x2' = u",
    )


def _damped1d():
    system = SystemModel.from_strings(["-x1"], [["1"]])
    weights = _scalar_weights()
    lin = LinearSystem([[-1.0]], [[1.0]])
    clfs = _clfs(1, quadratic="0.5*x1^2", steep="x1^2")
    clfs["riccati"] = riccati_clf(solve_care(lin, weights))
    refs = {
        "care_p": Reference(math.sqrt(2.0) - 1.0, Provenance.CLOSED_FORM, "-2p - p^2 + 1 = 0"),
        "lambda_quadratic": Reference(
            math.sqrt(2.0) - 1.0, Provenance.CLOSED_FORM, "(-1 + sqrt 2) for V=x^2/2, any x"
        ),
    }
    return CatalogEntry(
        "damped1d", system, clfs, weights, refs, lin,
        initial_states=((1.0,),),
        description="xdot = -x + u",
    )


_BUILDERS = {
    "cubic1d": _cubic1d,
    "damped1d": _damped1d,
    "double_integrator": _double_integrator,
    "integrator1d": _integrator1d,
}


def list_entries() -> list:
    return sorted(_BUILDERS)


@functools.lru_cache(maxsize=None)
def get_entry(name: str) -> CatalogEntry:
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise CatalogError(f"unknown catalog entry {name!r}; known: {list_entries()}") from None
    return builder()


def export_config(name: str, clf: str | None = None) -> dict:
    """Entry as a self-contained experiment config (inline expressions)."""
    entry = get_entry(name)
    return {
        "system": entry.system.to_dict(),
        "clf": str(entry.clf(clf).V),
        "weights": entry.weights.to_dict(),
        "initial_states": [list(x0) for x0 in entry.initial_states],
        "checks": ["clf_check", "hjb_residuals", "value_consistency"],
    }
