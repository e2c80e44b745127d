"""Command-line front end.

Subcommands::

    simulate            run a scenario, write trace + metrics files
    check-feasibility   is a priority graph feasible on a scenario's paths?
    margin              feasibility plus the signed safety margin
    oracle-optimality   brute-force dominance check of the speed law
    oracle-feasibility  brute-force staircase search vs the analytic verdict
    replay-verify       run a scenario twice, compare trace digests

Exit codes, uniformly: 0 on success/pass, 1 when a checked property fails
(collision, priority violation, oracle counterexample, verdict mismatch,
digest mismatch, infeasible graph), 2 on usage or configuration errors.
All numbers print with ``.`` as the decimal separator regardless of
locale.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import List, Optional

from .errors import RightOfWayError, SimulationBreach
from .oracles import (OracleBoundError, check_optimality, grid_feasibility,
                      optimality_batch, random_instance)
from .priority import PriorityGraph, feasibility_and_margin, parse_graph
from .sim import Scenario, load_scenario, run, scenario_sections

PASS, FAIL, USAGE = 0, 1, 2


def _print_kv(pairs):
    for key in sorted(pairs):
        print("%s = %s" % (key, pairs[key]))


def _load(path: str) -> Scenario:
    return load_scenario(path)


def _load_graph(path: str) -> PriorityGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_graph(fh.read())


def _graph_on_scenario(args) -> tuple:
    """(graph, sections) for the scenario's paths; validates vertex ids."""
    scenario = _load(args.scenario)
    graph = _load_graph(args.graph)
    path_ids = {sp.geometry.id for sp in scenario.paths}
    missing = sorted(graph.vertices - path_ids)
    if missing:
        raise RightOfWayError(
            "graph names robots %s but the scenario defines no such paths"
            % (missing,))
    return graph, scenario_sections(scenario)


# ---------------------------------------------------------------------------
# subcommand bodies
# ---------------------------------------------------------------------------


def _cmd_simulate(args) -> int:
    scenario = _load(args.scenario)
    os.makedirs(args.out, exist_ok=True)
    trace_path = os.path.join(args.out, "trace.csv")
    metrics_path = os.path.join(args.out, "metrics.csv")
    try:
        metrics = run(scenario, seed=args.seed, slots=args.slots,
                      rate=args.rate, policy=args.policy,
                      trace_path=trace_path)
    except SimulationBreach as exc:
        print("SAFETY BREACH: %s" % exc, file=sys.stderr)
        if exc.metrics is not None:
            exc.metrics.save(metrics_path)
            _print_kv(exc.metrics.summary())
        return FAIL
    metrics.save(metrics_path)
    _print_kv(metrics.summary())
    print("wrote %s and %s" % (trace_path, metrics_path))
    bad = (metrics.collisions + metrics.priority_violations
           + metrics.box_violations + metrics.box_region_entries
           + metrics.truth_outside_box)
    return PASS if bad == 0 else FAIL


def _cmd_check_feasibility(args) -> int:
    graph, sections = _graph_on_scenario(args)
    report = feasibility_and_margin(graph, sections)
    print("feasible = %s" % report.feasible)
    if report.witness is not None:
        print("witness cycle = %s" % " -> ".join(
            str(v) for v in report.witness + report.witness[:1]))
    return PASS if report.feasible else FAIL


def _cmd_margin(args) -> int:
    graph, sections = _graph_on_scenario(args)
    report = feasibility_and_margin(graph, sections,
                                    r_max=args.r_max,
                                    resolution=args.resolution)
    _print_kv({
        "feasible": report.feasible,
        "margin": "%.6f" % report.margin,
        "witness": ("-" if report.witness is None else
                    " -> ".join(str(v) for v in
                                report.witness + report.witness[:1])),
        "r_max": "%.6f" % report.r_max,
        "resolution": "%.6g" % report.resolution,
    })
    return PASS if report.feasible else FAIL


def _cmd_oracle_optimality(args) -> int:
    if args.robots is None:
        report = optimality_batch(horizon=args.horizon, seed=args.seed)
    else:
        sizes = {n: (args.count if args.robots == n else 0) for n in (1, 2, 3)}
        report = optimality_batch(one=sizes[1], two=sizes[2], three=sizes[3],
                                  horizon=args.horizon, seed=args.seed)
    if report.passed:
        print("optimality: PASS (%d instances, horizon %d)"
              % (report.instances, args.horizon))
        return PASS
    print("optimality: FAIL -- %s" % report.reason)
    if report.counterexample is not None:
        print("counterexample step counts per slot:")
        for k, m in enumerate(report.counterexample):
            print("  slot %2d: %s" % (k, list(m)))
    if report.law_counts is not None:
        print("law step counts per slot:")
        for k, m in enumerate(report.law_counts):
            print("  slot %2d: %s" % (k, list(m)))
    return FAIL


def _cmd_oracle_feasibility(args) -> int:
    graph, sections = _graph_on_scenario(args)
    report = grid_feasibility(graph, sections, cells=args.grid)
    _print_kv({
        "grid_feasible": report.grid_feasible,
        "analytic_feasible": report.analytic.feasible,
        "analytic_margin": "%.6f" % report.analytic.margin,
        "grid_cells": report.cells,
        "lattice_points_visited": report.visited,
    })
    if report.agree:
        print("verdicts agree")
        return PASS
    print("VERDICTS DISAGREE", file=sys.stderr)
    return FAIL


def _cmd_replay_verify(args) -> int:
    scenario = _load(args.scenario)
    digests = []
    for _ in range(2):
        metrics = run(scenario, seed=args.seed, slots=args.slots,
                      rate=args.rate, policy=args.policy)
        digests.append(metrics.digest)
    print("digest run 1 = %s" % digests[0])
    print("digest run 2 = %s" % digests[1])
    if digests[0] == digests[1]:
        print("replay verified")
        return PASS
    print("DIGEST MISMATCH", file=sys.stderr)
    return FAIL


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------


def _add_scenario_arg(p, required=True):
    p.add_argument("--scenario", required=required, metavar="PATH",
                   help="scenario file (INI format, see bundled scenarios/)")


def _add_run_overrides(p):
    p.add_argument("--seed", type=int, default=None,
                   help="override the scenario's RNG seed")
    p.add_argument("--slots", type=int, default=None,
                   help="override the scenario's slot count")
    p.add_argument("--rate", type=float, default=None,
                   help="override every path's arrival probability")
    p.add_argument("--policy", choices=("exact", "heuristic"), default=None,
                   help="override the admission policy")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="rightofway",
        description="Priority-based intersection coordination: simulator, "
                    "feasibility/margin checks, and brute-force oracles.")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("simulate", help="run a scenario, write trace+metrics")
    _add_scenario_arg(p)
    _add_run_overrides(p)
    p.add_argument("--out", default=".", metavar="DIR",
                   help="output directory for trace.csv and metrics.csv")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("check-feasibility",
                       help="is the priority graph feasible on the "
                            "scenario's paths?")
    _add_scenario_arg(p)
    p.add_argument("--graph", required=True, metavar="PATH",
                   help="priority graph file ('edge I J' / 'vertex I' lines)")
    p.set_defaults(func=_cmd_check_feasibility)

    p = sub.add_parser("margin",
                       help="feasibility plus signed safety margin")
    _add_scenario_arg(p)
    p.add_argument("--graph", required=True, metavar="PATH")
    p.add_argument("--r-max", type=float, default=None,
                   help="margin search ceiling (default 10x section size)")
    p.add_argument("--resolution", type=float, default=None,
                   help="bisection resolution (default 1e-3x section size)")
    p.set_defaults(func=_cmd_margin)

    p = sub.add_parser("oracle-optimality",
                       help="enumerate admissible controls, check the speed "
                            "law dominates all of them")
    p.add_argument("--robots", type=int, choices=(1, 2, 3), default=None,
                   help="instance size (default: batch of 20x2 + 10x3)")
    p.add_argument("--count", type=int, default=10,
                   help="instances to run when --robots is given")
    p.add_argument("--horizon", type=int, default=12,
                   help="slots per instance (at most 12)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_oracle_optimality)

    p = sub.add_parser("oracle-feasibility",
                       help="brute-force staircase search vs the analytic "
                            "feasibility verdict")
    _add_scenario_arg(p)
    p.add_argument("--graph", required=True, metavar="PATH")
    p.add_argument("--grid", type=int, default=32,
                   help="lattice cells per robot axis")
    p.set_defaults(func=_cmd_oracle_feasibility)

    p = sub.add_parser("replay-verify",
                       help="run twice with one seed, compare trace digests")
    _add_scenario_arg(p)
    _add_run_overrides(p)
    p.set_defaults(func=_cmd_replay_verify)

    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OracleBoundError as exc:
        print("refusing: %s" % exc, file=sys.stderr)
        return USAGE
    except SimulationBreach as exc:
        print("SAFETY BREACH: %s" % exc, file=sys.stderr)
        return FAIL
    except (RightOfWayError, OSError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
