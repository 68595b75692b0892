"""
Command-line interface: ``run`` executes identity suites on a scenario and
writes a report, ``dump-products`` writes product coefficient tables.
"""
import argparse
import logging
import sys
import time
from pathlib import Path
from typing import List, Optional

from config import EngineSettings, ResourceLimits
from exceptions import SuperStarError
from cli.report import build_report, print_summary, product_dump
from cli.scenario import SUITE_NAMES, check_resources, load_scenario
from cli.suites import SuiteContext, run_suites
from utils.config_loader import load_settings
from utils.file_ops import dump_json, save_json, save_text

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SUITE_FAILED = 1
EXIT_ENGINE_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="superstar",
        description="Exact star products with separation of variables on C^(m|d).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run identity suites on a scenario")
    run.add_argument("scenario", type=Path)
    run.add_argument("--suite", dest="suites", action="append", choices=SUITE_NAMES,
                     help="Suite to run (repeatable); defaults to the scenario's list")
    run.add_argument("--out", type=Path, help="Report path; the report is printed when omitted")
    run.add_argument("--seed", type=int, help="Override the scenario seed")
    run.add_argument("--max-budget", dest="max_budget", type=int, help="Override the cost budget")
    run.add_argument("--with-timings", dest="with_timings", action="store_true",
                     help="Add wall-clock timings to the report")

    dump = sub.add_parser("dump-products", help="Write C_r tables on the monomial basis")
    dump.add_argument("scenario", type=Path)
    dump.add_argument("--basis-degree", dest="basis_degree", type=int, required=True)
    dump.add_argument("--out", type=Path, help="Output path; printed when omitted")
    dump.add_argument("--max-budget", dest="max_budget", type=int, help="Override the cost budget")
    return parser


def _apply_overrides(settings: EngineSettings, args: argparse.Namespace) -> EngineSettings:
    if getattr(args, "max_budget", None) is not None:
        settings.limits = ResourceLimits(settings.limits.max_odd_dimension, args.max_budget)
    if getattr(args, "with_timings", False):
        settings.report_timings = True
    return settings


def cmd_run(args: argparse.Namespace, settings: EngineSettings) -> int:
    """
    Execute the requested suites and write the report.

    Returns:
        EXIT_OK when no suite failed, EXIT_SUITE_FAILED otherwise
    """
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = scenario.model_copy(update={"seed": args.seed})
    cost = check_resources(scenario, settings)

    ctx = SuiteContext(scenario, settings)
    timings = {} if settings.report_timings else None
    start = time.perf_counter()
    logger.info(f"Product ready: d={ctx.S.d}, truncated at nu^{ctx.S.order}")
    if timings is not None:
        timings["build_product"] = round(time.perf_counter() - start, 3)

    names = args.suites or scenario.suites
    results = run_suites(ctx, names, settings.report_timings)
    report = build_report(scenario, ctx, results, cost, timings)

    if args.out:
        save_json(args.out, report)
        logger.info(f"Report written to {args.out}")
    else:
        sys.stdout.write(dump_json(report))
    print_summary(results, sys.stdout if args.out else sys.stderr)
    return EXIT_OK if report["summary"]["all_passed"] else EXIT_SUITE_FAILED


def cmd_dump_products(args: argparse.Namespace, settings: EngineSettings) -> int:
    if args.basis_degree < 0:
        raise SuperStarError("--basis-degree must be non-negative")
    scenario = load_scenario(args.scenario)
    check_resources(scenario, settings)
    ctx = SuiteContext(scenario, settings)
    text = product_dump(scenario, ctx, args.basis_degree)
    if args.out:
        save_text(args.out, text)
        logger.info(f"Products written to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "dump-products": cmd_dump_products,
}


def main(argv: Optional[List[str]] = None, settings: Optional[EngineSettings] = None) -> int:
    """
    Parse arguments and dispatch.

    Engine errors (parse, validation, resource caps, non-admissible input)
    are logged and mapped to exit code 2.
    """
    args = build_parser().parse_args(argv)
    try:
        settings = _apply_overrides(settings or load_settings(), args)
        return COMMANDS[args.command](args, settings)
    except SuperStarError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_ENGINE_ERROR
