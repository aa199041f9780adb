"""Command-line experiment runner.

    sontagkit run CONFIG [--out DIR] [--seed N]
    sontagkit validate CONFIG
    sontagkit catalog list
    sontagkit catalog export NAME [--clf NAME]

Exit codes: 0 all requested checks pass and every trajectory converged,
2 a check failed or a trajectory did not converge, 1 config or runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import catalog
from .config import Problem, build_problem, load_config
from .errors import SimulationError, SontagKitError
from .hjb import hjb_residual_classical, hjb_residual_distorted, verify_lambda_identity
from .model import check_clf
from .sim import Trajectory, conservation_drift, costs, simulate
from .sontag import Branch, SontagController

log = logging.getLogger("sontagkit")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CHECK_FAILED = 2

VALUE_REL_TOL = 5e-3
DRIFT_TOL = 1e-5
RESIDUAL_TOL = 1e-9
SERIES_RESIDUAL_TOL = 1e-8


def _finite_or_none(obj):
    if isinstance(obj, dict):
        return {k: _finite_or_none(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_or_none(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_csv(path, traj: Trajectory) -> None:
    n = traj.states.shape[1]
    m = traj.inputs.shape[1]
    header = (
        ["t"]
        + [f"x{i + 1}" for i in range(n)]
        + [f"u{j + 1}" for j in range(m)]
        + ["V", "lambda", "integrand_j4", "integrand_j5", "j4_running", "j5_running"]
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(len(traj)):
            row = (
                [traj.times[k]]
                + list(traj.states[k])
                + list(traj.inputs[k])
                + [
                    traj.v_values[k],
                    traj.lambdas[k],
                    traj.integrand_j4[k],
                    traj.integrand_j5[k],
                    traj.j4_running[k],
                    traj.j5_running[k],
                ]
            )
            writer.writerow([f"{float(v):.17g}" for v in row])


def _hjb_residual_check(ctrl: SontagController, problem: Problem) -> dict:
    worst = 0.0
    worst_series = 0.0
    worst_vdot = 0.0
    worst_classical = 0.0
    series = 0
    failures = 0
    Q, R = problem.weights.Q, problem.weights.R
    for x in problem.sampling.states(problem.system.n):
        try:
            ev = ctrl.feedback(x)
            res = hjb_residual_distorted(ctrl, x)
            classical = hjb_residual_classical(problem.system, problem.clf, problem.weights, x)
        except SontagKitError:
            failures += 1
            continue
        q = float(x @ Q @ x)
        scaled = abs(res) / max(1.0, q)
        if ev.branch == Branch.SERIES:
            series += 1
            worst_series = max(worst_series, scaled)
        else:
            worst = max(worst, scaled)
        vdot = ev.a + ev.b @ ev.u
        identity = vdot + (q + ev.u @ R @ ev.u) / (2.0 * ev.lam)
        worst_vdot = max(worst_vdot, abs(identity) / max(1.0, q))
        worst_classical = max(worst_classical, abs(classical))
    passed = (
        failures == 0
        and worst < RESIDUAL_TOL
        and worst_series < SERIES_RESIDUAL_TOL
        and worst_vdot < RESIDUAL_TOL
    )
    return {
        "passed": passed,
        "samples": problem.sampling.n_samples,
        "max_scaled_distorted_residual": worst,
        "max_scaled_distorted_residual_series": worst_series,
        "series_branch_samples": series,
        "max_scaled_vdot_identity_error": worst_vdot,
        "max_abs_classical_residual": worst_classical,
        "failures": failures,
        "tolerances": {"regular": RESIDUAL_TOL, "series": SERIES_RESIDUAL_TOL},
    }


def _run_trajectory(ctrl, problem: Problem, k: int, x0, out_dir: Path) -> tuple:
    try:
        traj = simulate(ctrl, problem.system, x0, problem.sim)
    except SimulationError as exc:
        traj = exc.trajectory
    csv_name = f"traj_{k}.csv"
    write_csv(out_dir / csv_name, traj)
    j4, j5 = costs(traj)
    j4c, j5c = costs(traj, tail_corrected=True)
    v0 = problem.clf.value(x0)
    record = {
        "index": k,
        "x0": x0.tolist(),
        "csv": csv_name,
        "termination": traj.termination.value,
        "message": traj.message,
        "steps": max(len(traj) - 1, 0),
        # an error at x0 leaves no recorded samples
        "t_final": float(traj.times[-1]) if len(traj) else 0.0,
        "x_final_norm": float(np.linalg.norm(traj.states[-1] if len(traj) else x0)),
        "v_x0": v0,
        "j4": j4,
        "j5": j5,
        "j4_tail_corrected": j4c,
        "j5_tail_estimate": j5c,
        "j5_tail_bound": traj.j5_tail_bound,
        "lambda": traj.lambda_stats(),
    }
    ok = traj.converged
    if "value_consistency" in problem.checks:
        if traj.converged:
            rel = abs(j4c - v0) / max(v0, 1e-12)
            drift = conservation_drift(traj)
            vc_pass = rel < VALUE_REL_TOL and drift < DRIFT_TOL
            record["value_consistency"] = {
                "passed": vc_pass,
                "relative_error": rel,
                "conservation_drift": drift,
                "tolerances": {"relative_error": VALUE_REL_TOL, "conservation_drift": DRIFT_TOL},
            }
        else:
            vc_pass = False
            record["value_consistency"] = {"passed": False, "reason": "trajectory not converged"}
        ok = ok and vc_pass
    return record, ok


def run_problem(problem: Problem, out_dir) -> int:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ctrl = SontagController(
        problem.system,
        problem.clf,
        problem.weights,
        beta_tol=problem.beta_tol,
        origin_tol=problem.origin_tol,
        unchecked=True,
    )
    all_ok = True
    checks = {}
    if "clf_check" in problem.checks:
        report = check_clf(problem.system, problem.clf, problem.sampling)
        checks["clf_check"] = report.to_dict()
        all_ok &= report.passed
    if "lambda_identity" in problem.checks:
        report = verify_lambda_identity(problem.system, problem.clf, problem.weights, problem.sampling)
        checks["lambda_identity"] = report.to_dict()
        all_ok &= report.passed
    if "hjb_residuals" in problem.checks:
        checks["hjb_residuals"] = _hjb_residual_check(ctrl, problem)
        all_ok &= checks["hjb_residuals"]["passed"]

    trajectories = []
    for k, x0 in enumerate(problem.initial_states):
        record, ok = _run_trajectory(ctrl, problem, k, x0, out_dir)
        log.info("trajectory %d: %s, J4=%.10g", k, record["termination"], record["j4"])
        trajectories.append(record)
        all_ok &= ok

    summary = {
        "controller": {
            "system": problem.system.to_dict(),
            "n": problem.system.n,
            "m": problem.system.m,
            "clf": str(problem.clf.V),
            "clf_source": problem.clf_source,
            "weights": problem.weights.to_dict(),
            "beta_tol": problem.beta_tol,
            "origin_tol": problem.origin_tol,
        },
        "seed": problem.seed,
        "simulation": {
            "method": problem.sim.method,
            "step": problem.sim.step,
            "rtol": problem.sim.rtol,
            "atol": problem.sim.atol,
            "t_max": problem.sim.t_max,
            "stop_norm": problem.sim.stop_norm,
        },
        "checks": checks,
        "trajectories": trajectories,
        "passed": bool(all_ok),
    }
    if problem.care is not None:
        summary["controller"]["riccati"] = {
            "P": problem.care.P.tolist(),
            "K": problem.care.K.tolist(),
            "residual_norm": problem.care.residual_norm,
        }
    text = json.dumps(_finite_or_none(summary), indent=2, allow_nan=False)
    (out_dir / "summary.json").write_text(text + "\n")
    return EXIT_OK if all_ok else EXIT_CHECK_FAILED


def run_experiment(config_path, out=None, seed=None) -> int:
    try:
        data = load_config(config_path)
        problem = build_problem(data, seed=seed, output_dir=out)
        out_dir = problem.output_dir or Path(config_path).with_suffix("").name + "_out"
        return run_problem(problem, out_dir)
    except (SontagKitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def validate_config(config_path) -> int:
    try:
        build_problem(load_config(config_path))
    except SontagKitError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print("valid")
    return EXIT_OK


def _build_parser():
    parser = argparse.ArgumentParser(prog="sontagkit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config")
    run.add_argument("--out", help="output directory (overrides output_dir)")
    run.add_argument("--seed", type=int, help="sampling seed (overrides seed)")

    val = sub.add_parser("validate", help="validate a config without simulating")
    val.add_argument("config")

    cat = sub.add_parser("catalog", help="inspect built-in problems")
    cat_sub = cat.add_subparsers(dest="catalog_command", required=True)
    cat_sub.add_parser("list")
    export = cat_sub.add_parser("export")
    export.add_argument("name")
    export.add_argument("--clf", help="named CLF of the entry (default: entry default)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.command == "run":
        return run_experiment(args.config, out=args.out, seed=args.seed)
    if args.command == "validate":
        return validate_config(args.config)
    if args.catalog_command == "list":
        for name in catalog.list_entries():
            print(name)
        return EXIT_OK
    try:
        print(json.dumps(catalog.export_config(args.name, args.clf), indent=2))
    except SontagKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
