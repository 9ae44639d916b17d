"""Command-line front end: simulate | calibrate | optimize | compare.

Exit codes: 0 success, 2 configuration error, 3 runtime/simulation failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__, builtin_config_path
from .calibrate import DTDTTargets, calibrate_network
from .engine import run_population
from .model import (
    Allocation,
    ConfigError,
    NO_DIVERSION,
    StudyConfig,
    check_allocation,
    load_study,
    validate_study,
)
from .optimize import SimEvaluator, compare_policies, solve
from .population import build_population
from . import report as rep


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ednetsim",
        description="ED-network simulation and staffing optimization under ambulance diversion",
    )
    p.add_argument("--version", action="version", version=f"ednetsim {__version__}")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp):
        sp.add_argument("--config", required=True,
                        help="config JSON path, or a built-in name such as 'case-study'")
        sp.add_argument("--seed", type=int, default=None, help="override design.base_seed")
        sp.add_argument("--reps", type=int, default=None, help="override design.replications")
        sp.add_argument("--out", default="results", help="output directory")

    sp = sub.add_parser("simulate", help="run the design for one allocation and policy")
    common(sp)
    sp.add_argument("--policy", default=None, help="policy id from the config (default: diversion off)")
    sp.add_argument("--alloc", default="as-is",
                    help="'as-is' or comma-separated staffing values in (ed, slot) order")
    sp.add_argument("--trace", action="store_true",
                    help="also dump the replication-0 event trace (reference engine)")

    sp = sub.add_parser("calibrate", help="fit per-slot staffing to DTDT targets")
    common(sp)
    sp.add_argument("--targets", required=True, help="CSV with ed,slot,tag,mean_dtdt_minutes")
    sp.add_argument("--ed", default=None,
                    help="comma-separated ED ids to calibrate (default: all in targets)")

    sp = sub.add_parser("optimize", help="Pareto search for one policy")
    common(sp)
    sp.add_argument("--policy", required=True)
    sp.add_argument("--budget", type=int, default=None, help="override solver.budget")

    sp = sub.add_parser("compare", help="Pareto fronts for several policies, merged report")
    common(sp)
    sp.add_argument("--policies", required=True, help="comma-separated policy ids")
    sp.add_argument("--budget", type=int, default=None)
    return p


def _load(args) -> tuple[StudyConfig, Path]:
    path = builtin_config_path(args.config) or Path(args.config)
    study = load_study(path)
    problems = validate_study(study)
    if problems:
        for v in problems:
            print(f"config error [{v.code}] at {v.where}: {v.message}", file=sys.stderr)
        raise ConfigError(f"{len(problems)} configuration violation(s)")
    if args.seed is not None:
        study.design = study.design.replace(base_seed=args.seed)
    if args.reps is not None:
        study.design = study.design.replace(replications=args.reps)
    return study, path


def _policy(study: StudyConfig, pid: str | None):
    if pid is None:
        return "off", NO_DIVERSION
    if pid not in study.policies:
        raise ConfigError(f"policy {pid!r} not defined in config")
    return pid, study.policies[pid]


def _alloc(study: StudyConfig, text: str) -> Allocation:
    net = study.network
    if text == "as-is":
        return net.as_is_allocation()
    try:
        alloc = Allocation(tuple(int(v) for v in text.split(",")))
    except ValueError as exc:
        raise ConfigError(f"bad --alloc value {text!r}: {exc}") from exc
    bad = [v for v in check_allocation(alloc, net)
           if v.code in ("alloc.bad_length", "alloc.zero_servers")]
    if bad:
        raise ConfigError("; ".join(f"[{v.code}] {v.where}: {v.message}" for v in bad))
    return alloc


def cmd_simulate(args) -> int:
    study, cfg_path = _load(args)
    pid, policy = _policy(study, args.policy)
    alloc = _alloc(study, args.alloc)
    out = Path(args.out)
    pop = build_population(study.network, study.design)
    stats = run_population(pop, alloc, policy, study.design)
    evaluator = SimEvaluator(study.network, policy, study.design, population=pop)
    evaluation = evaluator.evaluation_from_stats(alloc, stats)
    doc = rep.simulate_report(study.network, pid, alloc, study.design, stats, evaluation)
    artifacts = ["report.json"]
    rep.write_json(out / "report.json", doc)
    if args.trace:
        from .engine import run_replication

        trace = []
        run_replication(study.network, alloc, policy, study.design, 0, trace=trace)
        rep.write_trace_csv(out / "trace.csv", study.network, trace)
        artifacts.append("trace.csv")
    man = rep.build_manifest(
        "simulate", cfg_path, artifacts, policies=[pid],
        seed=study.design.base_seed, replications=study.design.replications,
    )
    rep.write_json(out / "manifest.json", man)
    print(f"simulate: f1={doc['f1_minutes']} f2={doc['f2_minutes']} "
          f"feasible={doc['feasible']} -> {out}")
    return 0


def cmd_calibrate(args) -> int:
    study, cfg_path = _load(args)
    targets = DTDTTargets.from_csv(args.targets)
    ed_ids = None if args.ed is None else [int(v) for v in args.ed.split(",")]
    out = Path(args.out)
    results = calibrate_network(study.network, targets, study.design, ed_ids=ed_ids)
    doc = {
        "as_is": {str(ed): list(r.staffing) for ed, r in sorted(results.items())},
        "objective": {str(ed): r.objective for ed, r in sorted(results.items())},
        "passes": {str(ed): r.passes for ed, r in sorted(results.items())},
        "seed": study.design.base_seed,
        "replications": study.design.replications,
    }
    rep.write_json(out / "calibration.json", doc)
    man = rep.build_manifest(
        "calibrate", cfg_path, ["calibration.json"],
        seed=study.design.base_seed, replications=study.design.replications,
    )
    rep.write_json(out / "manifest.json", man)
    for ed, r in sorted(results.items()):
        print(f"calibrate ed={ed}: staffing={list(r.staffing)} gap={r.objective:.2f}")
    return 0


def cmd_optimize(args) -> int:
    study, cfg_path = _load(args)
    pid, policy = _policy(study, args.policy)
    budget = study.solver.budget if args.budget is None else args.budget
    out = Path(args.out)
    result = solve(
        study.network, policy, study.design,
        budget=budget, step_init=study.solver.step_init,
        max_evals=study.solver.max_evaluations,
    )
    front = result.front()
    rep.write_front_csv(out / "front.csv", study.network, front)
    rep.render_fronts_png(out / "front.png", {pid: front})
    man = rep.build_manifest(
        "optimize", cfg_path, ["front.csv", "front.png"], policies=[pid],
        seed=study.design.base_seed, replications=study.design.replications, budget=budget,
    )
    rep.write_json(out / "manifest.json", man)
    feas = sum(1 for e in front if e.feasible)
    print(f"optimize[{pid}]: {len(front)} archive points ({feas} feasible), "
          f"{result.n_evaluations} evaluations -> {out}")
    return 0


def cmd_compare(args) -> int:
    study, cfg_path = _load(args)
    pids = [s.strip() for s in args.policies.split(",")]
    if len(pids) != len(set(pids)):
        raise ConfigError(f"duplicate policy ids in --policies: {args.policies}")
    if len(pids) < 2:
        raise ConfigError("compare needs at least 2 policies")
    chosen = {}
    for pid in pids:
        key, pol = _policy(study, pid)
        chosen[key] = pol
    budget = study.solver.budget if args.budget is None else args.budget
    out = Path(args.out)
    result = compare_policies(
        study.network, study.design, chosen,
        budget=budget, step_init=study.solver.step_init,
        max_evals=study.solver.max_evaluations,
    )
    artifacts = ["compare.json", "fronts.png"]
    series = {}
    for pid, res in result.fronts.items():
        front = res.front()
        series[pid] = front
        rep.write_front_csv(out / f"front_{pid}.csv", study.network, front)
        rep.write_series_csv(out / f"series_{pid}.csv", front)
        artifacts += [f"front_{pid}.csv", f"series_{pid}.csv"]
    rep.write_json(out / "compare.json", rep.compare_report(result))
    rep.render_fronts_png(out / "fronts.png", series)
    man = rep.build_manifest(
        "compare", cfg_path, artifacts, policies=pids,
        seed=study.design.base_seed, replications=study.design.replications, budget=budget,
    )
    rep.write_json(out / "manifest.json", man)
    print(f"compare: {len(pids)} policies, dominance intervals: {len(result.dominance)} -> {out}")
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handlers = {
        "simulate": cmd_simulate,
        "calibrate": cmd_calibrate,
        "optimize": cmd_optimize,
        "compare": cmd_compare,
    }
    try:
        return handlers[args.cmd](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError, KeyError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
