"""Experiment configuration: JSON schema, validation and problem assembly."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .care import LinearSystem, riccati_clf, solve_care
from .catalog import get_entry
from .errors import CareError, CatalogError, ConfigError, SontagKitError
from .exprcore import parse
from .model import ClfCandidate, SamplingConfig, SystemModel, Weights, check_weights
from .sim import METHODS, SimConfig

CHECKS = ("clf_check", "lambda_identity", "hjb_residuals", "value_consistency")

_MATRIX = {
    "type": "array",
    "minItems": 1,
    "items": {"type": "array", "minItems": 1, "items": {"type": "number"}},
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "sontagkit experiment",
    "type": "object",
    "additionalProperties": False,
    "required": ["system", "clf", "initial_states"],
    "properties": {
        "system": {
            "oneOf": [
                {"type": "string", "description": "catalog entry name"},
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["f", "G"],
                    "properties": {
                        "f": {"type": "array", "minItems": 1, "items": {"type": "string"}},
                        "G": {
                            "type": "array",
                            "minItems": 1,
                            "items": {"type": "array", "minItems": 1, "items": {"type": "string"}},
                        },
                    },
                },
            ]
        },
        "clf": {
            "type": "string",
            "minLength": 1,
            "description": "expression, catalog CLF name, or 'riccati'",
        },
        "weights": {
            "type": "object",
            "additionalProperties": False,
            "required": ["Q", "R"],
            "properties": {"Q": _MATRIX, "R": _MATRIX},
        },
        "initial_states": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "array", "minItems": 1, "items": {"type": "number"}},
        },
        "simulation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "method": {"enum": list(METHODS)},
                "step": {"type": "number", "exclusiveMinimum": 0},
                "rtol": {"type": "number", "exclusiveMinimum": 0},
                "atol": {"type": "number", "exclusiveMinimum": 0},
                "t_max": {"type": "number", "exclusiveMinimum": 0},
                "stop_norm": {"type": "number", "minimum": 0},
                "max_steps": {"type": "integer", "minimum": 1},
            },
        },
        "sampling": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_samples": {"type": "integer", "minimum": 1},
                "r_min": {"type": "number", "exclusiveMinimum": 0},
                "r_max": {"type": "number", "exclusiveMinimum": 0},
                "eps_b": {"type": "number", "minimum": 0},
            },
        },
        "controller": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "beta_tol": {"type": "number", "exclusiveMinimum": 0},
                "origin_tol": {"type": "number", "minimum": 0},
            },
        },
        "checks": {"type": "array", "uniqueItems": True, "items": {"enum": list(CHECKS)}},
        "output_dir": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
    },
    # inline systems have no default weights
    "if": {"properties": {"system": {"type": "object"}}},
    "then": {"required": ["weights"]},
}


@dataclass(eq=False)
class Problem:
    system: SystemModel
    clf: ClfCandidate
    clf_source: str
    weights: Weights
    initial_states: list
    sim: SimConfig
    sampling: SamplingConfig
    checks: tuple
    beta_tol: float
    origin_tol: float
    seed: int
    output_dir: str | None
    care: object = None


def _json_path(error) -> str:
    parts = []
    for p in error.absolute_path:
        if isinstance(p, int):
            parts.append(f"[{p}]")
        else:
            parts.append(("." if parts else "") + str(p))
    return "".join(parts) or "<root>"


def validate_schema(data) -> None:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    error = jsonschema.exceptions.best_match(validator.iter_errors(data))
    if error is not None:
        raise ConfigError(error.message, _json_path(error))


def load_config(path) -> dict:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    validate_schema(data)
    return data


def _is_linear(system: SystemModel, rng) -> bool:
    """f affine and G constant, judged by second differences at random points."""
    n = system.n
    g0 = system.input_matrix(np.zeros(n))
    for _ in range(5):
        p, d1, d2 = rng.standard_normal((3, n))
        second = (
            system.drift(p + d1 + d2) - system.drift(p + d1) - system.drift(p + d2) + system.drift(p)
        )
        scale = 1.0 + np.max(np.abs(system.drift(p + d1 + d2)))
        if np.max(np.abs(second)) > 1e-9 * scale:
            return False
        if np.max(np.abs(system.input_matrix(p) - g0)) > 1e-12 * (1.0 + np.max(np.abs(g0))):
            return False
    return True


def linearize(system: SystemModel) -> LinearSystem:
    zero = np.zeros(system.n)
    A = np.array([e.gradient(zero) for e in system.f])
    return LinearSystem(A, system.input_matrix(zero))


def _matrix(value, path):
    rows = {len(r) for r in value}
    if len(rows) != 1:
        raise ConfigError("ragged matrix", path)
    return np.array(value, dtype=float)


def build_problem(data: dict, seed: int | None = None, output_dir: str | None = None) -> Problem:
    """Turn a schema-valid config into a :class:`Problem` (no simulation)."""
    validate_schema(data)
    seed = seed if seed is not None else data.get("seed", 42)
    entry = None
    if isinstance(data["system"], str):
        try:
            entry = get_entry(data["system"])
        except CatalogError as exc:
            raise ConfigError(str(exc), "system") from None
        system = entry.system
    else:
        f_src = data["system"]["f"]
        G_src = data["system"]["G"]
        n = len(f_src)
        if len(G_src) != n:
            raise ConfigError(f"G has {len(G_src)} rows, f has {n} entries", "system.G")
        if len({len(r) for r in G_src}) != 1:
            raise ConfigError("ragged G", "system.G")
        for i, src in enumerate(f_src):
            _parse_check(src, n, f"system.f[{i}]")
        for i, row in enumerate(G_src):
            for j, src in enumerate(row):
                _parse_check(src, n, f"system.G[{i}][{j}]")
        try:
            system = SystemModel.from_strings(f_src, G_src)
        except SontagKitError as exc:
            raise ConfigError(str(exc), "system") from None

    if "weights" in data:
        weights = Weights(_matrix(data["weights"]["Q"], "weights.Q"), _matrix(data["weights"]["R"], "weights.R"))
    else:
        weights = entry.weights
    Q, R = weights.Q, weights.R
    if Q.shape != (system.n, system.n):
        raise ConfigError(f"Q has shape {Q.shape}, expected ({system.n}, {system.n})", "weights.Q")
    if R.shape != (system.m, system.m):
        raise ConfigError(f"R has shape {R.shape}, expected ({system.m}, {system.m})", "weights.R")
    try:
        check_weights(weights, system.n, system.m)
    except SontagKitError as exc:
        label = "weights.R" if str(exc).startswith("R") else "weights.Q"
        raise ConfigError(str(exc), label) from None

    clf_src = data["clf"]
    care_sol = None
    if clf_src == "riccati":
        if not _is_linear(system, np.random.default_rng(seed)):
            raise ConfigError("'riccati' requires affine f and constant G", "clf")
        try:
            care_sol = solve_care(linearize(system), weights)
        except CareError as exc:
            raise ConfigError(f"Riccati solve failed: {exc}", "clf") from None
        clf = riccati_clf(care_sol)
    elif entry is not None and clf_src in entry.clfs:
        clf = entry.clfs[clf_src]
    else:
        _parse_check(clf_src, system.n, "clf")
        try:
            clf = ClfCandidate.from_string(clf_src, system.n)
        except SontagKitError as exc:
            raise ConfigError(str(exc), "clf") from None

    states = []
    for k, x0 in enumerate(data["initial_states"]):
        if len(x0) != system.n:
            raise ConfigError(f"has length {len(x0)}, expected {system.n}", f"initial_states[{k}]")
        states.append(np.array(x0, dtype=float))

    try:
        sim = SimConfig(**data.get("simulation", {}))
    except ValueError as exc:
        raise ConfigError(str(exc), "simulation") from None
    try:
        sampling = SamplingConfig(seed=seed, **data.get("sampling", {}))
    except ValueError as exc:
        raise ConfigError(str(exc), "sampling") from None

    ctrl_opts = data.get("controller", {})
    return Problem(
        system=system,
        clf=clf,
        clf_source=clf_src,
        weights=weights,
        initial_states=states,
        sim=sim,
        sampling=sampling,
        checks=tuple(data.get("checks", [])),
        beta_tol=ctrl_opts.get("beta_tol", 1e-8),
        origin_tol=ctrl_opts.get("origin_tol", 1e-12),
        seed=seed,
        output_dir=output_dir or data.get("output_dir"),
        care=care_sol,
    )


def _parse_check(src, n, path):
    try:
        parse(src, n)
    except SontagKitError as exc:
        raise ConfigError(str(exc), path) from None
