"""Benchmark command line: run scenarios against one or more resolvers and
emit trajectory CSVs plus a comparison summary, check discrete-time gain
bounds, and compute threshold lower bounds.

Resolver syntax on the command line is name:key=value,key=value, e.g.
  jparse-bench run --scenario 2r_reach_in --resolver jparse:gamma=0.1 \\
      --resolver dls:lambda=0.17 --out results/
Exit codes: 0 success, 1 stability/feasibility failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from .controller import ControllerGains, stability_report
from .kinematics import load_model
from .models import builtin_model, builtin_model_names
from .resolvers import (
    ADLS,
    DLS,
    EDLS,
    JParse,
    config_from_dict,
    config_label,
    gamma_lower_bound,
)
from .simulator import (
    Scenario,
    builtin_scenarios,
    load_scenario,
    log_to_csv,
    run_scenario,
    scenario_to_json,
    summarize,
)

VALID_RESOLVERS = ("pinv", "dls", "adls", "edls", "jparse")

# Benchmark sweep: every damped-least-squares parameterization from the
# comparison table plus the three threshold values for jparse.
TABLE1_RESOLVERS = (
    DLS(lam=0.22), DLS(lam=0.17), DLS(lam=0.10),
    ADLS(lambda0=0.17, w0=0.50), ADLS(lambda0=0.17, w0=0.25), ADLS(lambda0=0.17, w0=0.10),
    EDLS(sigma_minus=0.0, sigma_plus=0.3, beta=0.02),
    JParse(gamma=0.10), JParse(gamma=0.06), JParse(gamma=0.03),
)


class UsageError(Exception):
    pass


def parse_resolver_arg(text: str):
    """name:key=value,key=value -> ResolverConfig."""
    name, _, rest = text.partition(":")
    name = name.strip().lower()
    if name not in VALID_RESOLVERS:
        raise UsageError(
            f"unknown resolver {name!r}; valid names: {', '.join(VALID_RESOLVERS)}"
        )
    params = {}
    if rest.strip():
        for piece in rest.split(","):
            key, sep, value = piece.partition("=")
            if not sep:
                raise UsageError(f"malformed resolver parameter {piece!r} (want key=value)")
            try:
                params[key.strip()] = float(value)
            except ValueError:
                raise UsageError(f"non-numeric resolver parameter {piece!r}") from None
    try:
        return config_from_dict({"algorithm": name, "params": params})
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp_", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_scenario_arg(ref: str) -> Scenario:
    if ref in builtin_scenarios():
        return builtin_scenarios()[ref]
    if os.path.exists(ref):
        return load_scenario(ref)
    raise UsageError(
        f"unknown scenario {ref!r}: not a builtin "
        f"({', '.join(sorted(builtin_scenarios()))}) and not a file"
    )


def cmd_run(args) -> int:
    if args.scenario == "table1_sweep":
        scenario = _load_scenario_arg("2r_reach_in")
        resolvers = list(TABLE1_RESOLVERS)
    else:
        scenario = _load_scenario_arg(args.scenario)
        resolvers = [parse_resolver_arg(r) for r in args.resolver or []]
        if not resolvers:
            resolvers = [scenario.resolver]
    if args.seed is not None:
        scenario = Scenario(
            name=scenario.name, model_ref=scenario.model_ref,
            initial_q=scenario.initial_q, goal_schedule=scenario.goal_schedule,
            gains=scenario.gains, resolver=scenario.resolver,
            duration_s=scenario.duration_s, seed=args.seed,
            nullspace=scenario.nullspace,
        )

    os.makedirs(args.out, exist_ok=True)
    if args.dump_scenario:
        _atomic_write(os.path.join(args.out, f"{scenario.name}.scenario.json"),
                      scenario_to_json(scenario))

    comparison = []
    for cfg in resolvers:
        label = config_label(cfg)
        try:
            log = run_scenario(scenario.with_resolver(cfg))
        except Exception as exc:
            print(f"resolver {label} failed: {exc}", file=sys.stderr)
            return 1
        stats = summarize(log)
        entry = {"resolver": label, "config": cfg.algorithm,
                 "params": cfg.params(), "summary": stats.to_dict()}
        if args.format == "csv":
            path = os.path.join(args.out, f"{scenario.name}__{label}.csv")
            _atomic_write(path, log_to_csv(log))
            entry["log"] = path
        else:
            path = os.path.join(args.out, f"{scenario.name}__{label}.json")
            _atomic_write(path, json.dumps({
                "t": log.t.tolist(), "q": log.q.tolist(), "q_dot": log.q_dot.tolist(),
                "pos_err": log.pos_err.tolist(), "ori_err": log.ori_err.tolist(),
                "inv_cond": log.inv_cond.tolist(), "lyapunov": log.lyapunov.tolist(),
            }, indent=1))
            entry["log"] = path
        comparison.append(entry)
        print(f"{scenario.name} [{label}]: "
              f"steady pos err {stats.steady_state_pos_err:.4g}, "
              f"peak |qd| {stats.peak_joint_speed:.4g}, "
              f"min 1/cond {stats.min_inverse_condition_number:.4g}")

    _atomic_write(os.path.join(args.out, f"{scenario.name}.summary.json"),
                  json.dumps({"scenario": scenario.name, "runs": comparison}, indent=2))
    return 0


def cmd_check_stability(args) -> int:
    gains = ControllerGains.uniform(m=args.m, k_pos=args.k, dt=args.dt)
    rep = stability_report(gains, m=args.m)
    print(f"k*dt = {rep.k_dt:.6g}")
    print(f"simple bound        k*dt <= 2:        {'PASS' if rep.passes_simple else 'FAIL'}")
    print(f"conservative bound  k*dt <= {2.0 / (args.m * (args.m - 1) + 1):.6g} "
          f"(gain cap {rep.conservative_bound / args.dt:.4g} at dt={args.dt:g}): "
          f"{'PASS' if rep.passes_conservative else 'FAIL'}")
    return 0 if rep.passes_simple else 1


def cmd_gamma(args) -> int:
    floor = args.sigma_max_floor
    if args.model:
        model = (builtin_model(args.model) if args.model in builtin_model_names()
                 else load_model(args.model))
        if model.task_dim == 2 and all(j.kind == "revolute" for j in model.joints):
            # planar all-revolute: sigma_max can never drop below the length
            # of the last link
            floor = float(np.linalg.norm(model.end_effector_offset.translation))
            print(f"model {model.name}: planar revolute, sigma_max floor = "
                  f"last link length = {floor:.6g}")
        else:
            # spatial serial arm: actuating the last joint alone scales the
            # twist by at least 1
            floor = 1.0
            print(f"model {model.name}: spatial arm, sigma_max floor = 1")
    try:
        bound = gamma_lower_bound(args.v_max, args.qdot_max, floor)
    except ValueError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 1
    print(f"gamma >= {bound:.6g}  (v_max={args.v_max:g}, qdot_max={args.qdot_max:g}, "
          f"sigma_max floor={floor:g})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jparse-bench",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a scenario under one or more resolvers")
    run.add_argument("--scenario", required=True,
                     help="builtin scenario name, scenario JSON file, or 'table1_sweep'")
    run.add_argument("--resolver", action="append",
                     help="resolver spec name:key=value,... (repeatable); "
                          "defaults to the scenario's own resolver")
    run.add_argument("--out", default="bench_out", help="output directory")
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--dump-scenario", action="store_true",
                     help="also write the resolved scenario JSON for replay")
    run.add_argument("--seed", type=int, default=None)
    run.set_defaults(func=cmd_run)

    chk = sub.add_parser("check-stability", help="evaluate discrete-time gain bounds")
    chk.add_argument("--k", type=float, required=True, help="max proportional gain (1/s)")
    chk.add_argument("--dt", type=float, required=True, help="controller step (s)")
    chk.add_argument("--m", type=int, required=True, help="task dimension")
    chk.set_defaults(func=cmd_check_stability)

    gam = sub.add_parser("gamma", help="lower bound on the singularity threshold")
    gam.add_argument("--v-max", type=float, required=True,
                     help="largest twist norm that will be commanded")
    gam.add_argument("--qdot-max", type=float, required=True,
                     help="largest acceptable joint speed norm (rad/s)")
    gam.add_argument("--model", default=None,
                     help="builtin model name or JSON file (derives the sigma_max floor)")
    gam.add_argument("--sigma-max-floor", type=float, default=1.0,
                     help="override for the sigma_max lower bound")
    gam.set_defaults(func=cmd_gamma)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses code 2 for usage errors already
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
