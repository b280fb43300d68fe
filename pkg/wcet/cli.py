"""
Command Line Driver
analyze / oracle / compare / generate subcommands with machine-readable
output lines and exit codes
"""
import argparse
import csv
import logging
import math
import sys
from typing import List, Optional

from wcet import VERSION, config
from wcet.cache import CacheConfig
from wcet.errors import WcetError
from wcet.generator import random_program
from wcet.hset import Report, RunOptions, incremental_analysis
from wcet.ir import SemanticError, TransitionSystem, parse_program, print_program, unroll_loops, validate
from wcet.oracle import PathExplosion, exhaustive_wcet

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_BUDGET = 2
EXIT_PATH_EXPLOSION = 3
EXIT_NOT_BRACKETED = 4

TRACE_COLUMNS = ['iteration', 'elapsed_ms', 'lower', 'upper', 'ai_leaves', 'dominated']


def _fmt(value) -> str:
    if value == math.inf:
        return 'inf'
    return str(int(value))


def configure_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else getattr(logging, config.LOG_LEVEL.upper(), logging.WARNING)
    logging.basicConfig(level=level, format=config.LOG_FORMAT, stream=sys.stderr, force=True)


def load_program(path: str) -> TransitionSystem:
    """
    Read, validate and unroll a program file.

    Raises:
        OSError: when the file cannot be read
        WcetError: on parse, validation or unrolling failures
    """
    with open(path, encoding='utf-8') as f:
        ts = parse_program(f.read())
    diagnostics = validate(ts)
    if diagnostics:
        raise SemanticError('; '.join(diagnostics))
    unrolled = unroll_loops(ts)
    if unrolled is not ts:
        logger.info(f"Unrolled {len(ts.transitions)} transitions into {len(unrolled.transitions)}")
    return unrolled


def cache_config(args) -> CacheConfig:
    return CacheConfig(args.cache_sets, args.hit_cost, args.miss_penalty)


def run_options(args) -> RunOptions:
    mode = args.mode or ('epsilon' if args.epsilon is not None else 'exact')
    return RunOptions(
        mode=mode,
        epsilon=args.epsilon if args.epsilon is not None else 0.05,
        budget_ms=args.budget_ms,
        max_iterations=args.max_iterations,
        domination=not args.no_domination,
        subsumption=not args.no_subsumption,
    )


def write_trace(report: Report, path: str) -> None:
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.DictWriter(handle, fieldnames=TRACE_COLUMNS)
        writer.writeheader()
        for rec in report.trace:
            writer.writerow({
                'iteration': rec.iteration,
                'elapsed_ms': f"{rec.elapsed_ms:.3f}",
                'lower': _fmt(rec.lower),
                'upper': _fmt(rec.upper),
                'ai_leaves': rec.ai_leaves,
                'dominated': rec.dominated,
            })


def _report_line(report: Report) -> str:
    return (f"lower={_fmt(report.final_lower)} upper={_fmt(report.final_upper)} "
            f"exact={'true' if report.exact else 'false'} iterations={report.iterations}")


def _analyze(args):
    ts = load_program(args.program)
    report = incremental_analysis(ts, cache_config(args), run_options(args))
    if args.log:
        write_trace(report, args.log)
    return ts, report


def cmd_analyze(args) -> int:
    _, report = _analyze(args)
    print(_report_line(report))
    return EXIT_OK if report.converged else EXIT_BUDGET


def cmd_oracle(args) -> int:
    ts = load_program(args.program)
    result = exhaustive_wcet(ts, cache_config(args), args.path_cap)
    print(f"wcet={_fmt(result.wcet)}")
    points = [ts.start] + [t.dst for t in result.path] if result.path else []
    print(f"path={'->'.join(points)}")
    print(f"paths={result.paths_explored}")
    return EXIT_OK


def improvement(ai_upper, incremental) -> str:
    """Imprecision removed relative to the incremental bound, (A - I)/I."""
    if ai_upper == math.inf:
        return 'inf'
    if incremental == 0:
        return 'inf' if ai_upper > 0 else '0.00'
    return f"{100.0 * (ai_upper - incremental) / incremental:.2f}"


def cmd_compare(args) -> int:
    ts, report = _analyze(args)
    print(f"ai_upper={_fmt(report.ai_upper)}")
    print(_report_line(report))
    status = EXIT_OK if report.converged else EXIT_BUDGET
    try:
        result = exhaustive_wcet(ts, cache_config(args), args.path_cap)
        print(f"oracle={_fmt(result.wcet)}")
        if not report.final_lower <= result.wcet <= report.final_upper:
            logger.error(f"Incremental bounds [{report.final_lower}, {report.final_upper}] "
                         f"miss oracle value {result.wcet}")
            status = EXIT_NOT_BRACKETED
    except PathExplosion as e:
        logger.warning(f"Oracle skipped: {e}")
        print("oracle=unavailable")
    print(f"improvement={improvement(report.ai_upper, report.final_upper)}%")
    return status


def cmd_generate(args) -> int:
    ts = random_program(args.seed, branches=args.branches, max_vars=args.vars)
    sys.stdout.write(print_program(ts))
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('program', help='Program file')
    parser.add_argument('--cache-sets', type=int, default=config.CACHE_SETS, help='Number of cache sets')
    parser.add_argument('--hit-cost', type=int, default=config.HIT_COST, help='Cycles for a cache hit')
    parser.add_argument('--miss-penalty', type=int, default=config.MISS_PENALTY, help='Cycles for a cache miss')
    parser.add_argument('--path-cap', type=int, default=config.ORACLE_PATH_CAP, help='Oracle path cap')


def _add_analysis(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--mode', choices=['exact', 'epsilon'], help='Termination mode (default exact)')
    parser.add_argument('--epsilon', type=float, help='Relative gap (U - L)/U to stop at; implies epsilon mode')
    parser.add_argument('--budget-ms', type=float, help='Wall-clock budget in milliseconds')
    parser.add_argument('--max-iterations', type=int, help='Refinement iteration cap')
    parser.add_argument('--log', help='Write the per-iteration trace to this CSV file')
    parser.add_argument('--no-domination', action='store_true', help='Refine dominated AI leaves too')
    parser.add_argument('--no-subsumption', action='store_true', help='Never reuse exact subtrees')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='wcet_analyze', description='Anytime incremental WCET analyzer')
    parser.add_argument('--version', action='version', version=f"%(prog)s {VERSION}")
    parser.add_argument('-v', '--verbose', action='store_true', help='Debug logging')
    sub = parser.add_subparsers(dest='command', required=True)

    analyze = sub.add_parser('analyze', help='Run the incremental analysis')
    _add_common(analyze)
    _add_analysis(analyze)
    analyze.set_defaults(handler=cmd_analyze)

    oracle = sub.add_parser('oracle', help='Enumerate every feasible path')
    _add_common(oracle)
    oracle.set_defaults(handler=cmd_oracle)

    compare = sub.add_parser('compare', help='AI-only vs incremental vs oracle')
    _add_common(compare)
    _add_analysis(compare)
    compare.set_defaults(handler=cmd_compare)

    generate = sub.add_parser('generate', help='Print a random program')
    generate.add_argument('--seed', type=int, default=0, help='Generator seed')
    generate.add_argument('--branches', type=int, default=None, help='Number of diamonds')
    generate.add_argument('--vars', type=int, default=4, help='Maximum number of variables')
    generate.set_defaults(handler=cmd_generate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        return args.handler(args)
    except PathExplosion as e:
        logger.error(f"Failed to enumerate paths: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PATH_EXPLOSION
    except (WcetError, OSError, ValueError) as e:
        logger.error(f"Failed to run {args.command}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
