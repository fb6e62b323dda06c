"""Command-line entry point.

Exit codes: 0 success, 2 usage error (argparse), 3 missing input,
4 validation failure, 1 unexpected runtime error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .dataset import DEFAULT_QUERY
from .grounding import validate_alias_table
from .sim import ScenarioError, load_scenario_dir
from .vlm import ErrorRates
from . import pipeline

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_MISSING_INPUT = 3
EXIT_VALIDATION = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trafficmon",
        description="traffic monitoring pipeline: simulate, export, evaluate, serve",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="render scenario frames to disk")
    sim.add_argument("--config", required=True)
    sim.add_argument("--scenario", action="append", default=None,
                     help="scenario id; repeatable (default: all)")
    sim.add_argument("--out", required=True, help="output directory for frame trees")
    sim.add_argument("--overlay", action="store_true",
                     help="write highlighted frames instead of raw renders")
    sim.add_argument("--seed", type=int, default=None,
                     help="override the scenario seed")

    exp = sub.add_parser("export-dataset", help="build the instruction corpus")
    exp.add_argument("--config", required=True)
    exp.add_argument("--out", required=True)
    exp.add_argument("--all", action="store_true",
                     help="build from the full shipped scenario set (default)")
    exp.add_argument("--query", default=DEFAULT_QUERY)

    ev = sub.add_parser("evaluate", help="score a responder over the corpus")
    ev.add_argument("--config", required=True)
    ev.add_argument("--responder", choices=["oracle", "remote"], default="oracle")
    ev.add_argument("--scenario", action="append", default=None)
    ev.add_argument("--p-loc", type=float, default=0.0)
    ev.add_argument("--p-dir", type=float, default=0.0)
    ev.add_argument("--p-col", type=float, default=0.0)
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--out", default=None, help="write the full EvalReport JSON here")

    val = sub.add_parser("validate", help="check scenario files and alias tables")
    val.add_argument("--config", required=True)

    srv = sub.add_parser("serve", help="run the HTTP service")
    srv.add_argument("--config", required=True)
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)

    return parser


def _load(args):
    try:
        return load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_MISSING_INPUT)


def _select_scenarios(cfg, ids):
    try:
        if ids:
            return [pipeline.find_scenario(cfg, sid) for sid in ids]
        return load_scenario_dir(cfg.scenario_dir)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_MISSING_INPUT)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def cmd_simulate(args) -> int:
    cfg = _load(args)
    scenarios = _select_scenarios(cfg, args.scenario)
    total = 0
    for scenario in scenarios:
        if args.seed is not None:
            from dataclasses import replace
            scenario = replace(scenario, seed=args.seed)
        count = pipeline.write_scenario_frames(
            cfg, scenario, Path(args.out) / scenario.id, overlay=args.overlay)
        print(f"{scenario.id}: {count} frames")
        total += count
    print(f"wrote {total} frames under {args.out}")
    return EXIT_OK


def cmd_export_dataset(args) -> int:
    cfg = _load(args)
    manifest = pipeline.build_corpus(cfg, args.out, query=args.query,
                                     progress=lambda msg: print(msg, file=sys.stderr))
    print(json.dumps(manifest, indent=2))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = _load(args)
    scenarios = _select_scenarios(cfg, args.scenario)
    rates = ErrorRates(p_loc=args.p_loc, p_dir=args.p_dir, p_col=args.p_col)
    if args.responder == "oracle":
        report = pipeline.evaluate_oracle(cfg, rates, args.seed, scenarios)
    else:
        endpoint = cfg.endpoints.get("vlm")
        if not endpoint:
            print("error: no vlm endpoint configured", file=sys.stderr)
            return EXIT_VALIDATION
        report = pipeline.evaluate_remote(cfg, endpoint, scenarios)
    if args.out:
        report.write(args.out)
    print(json.dumps({
        "frames_scored": report.frames_scored,
        "location_accuracy": report.location_accuracy,
        "steering_accuracy": report.steering_accuracy,
        "collision_accuracy": report.collision_accuracy,
    }, indent=2))
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _load(args)   # config load already validates alias DBs
    problems = []
    try:
        scenarios = load_scenario_dir(cfg.scenario_dir)
    except ScenarioError as exc:
        problems.append(str(exc))
        scenarios = []
    for cam in cfg.cameras:
        if cam.section_map is None or cam.alias_table is None:
            problems.append(f"camera {cam.id}: no alias DB configured")
            continue
        for violation in validate_alias_table(cam.section_map, cam.alias_table):
            problems.append(f"camera {cam.id}: {violation}")
    if problems:
        for p in problems:
            print(f"invalid: {p}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"ok: {len(scenarios)} scenarios, {len(cfg.cameras)} cameras")
    return EXIT_OK


def cmd_serve(args) -> int:
    cfg = _load(args)
    from .service import serve
    serve(cfg, host=args.host, port=args.port)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "simulate": cmd_simulate,
        "export-dataset": cmd_export_dataset,
        "evaluate": cmd_evaluate,
        "validate": cmd_validate,
        "serve": cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except SystemExit:
        raise
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
