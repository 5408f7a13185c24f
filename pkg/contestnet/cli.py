"""
Command-line front end.

    python -m contestnet solve --scenario b10v2.json --format csv
    python -m contestnet stability --concept lfps --scenario star.json
    python -m contestnet threshold --n 12

Results go to stdout (or --output); logs go to stderr. Exit codes: 0 success, 1 usage or
input error, 2 numeric failure or a failed validation.
"""
import argparse
import sys
import time
import uuid
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from contestnet import __version__
from contestnet.analytics import bipartite_threshold, cost_shock_derivatives, sweep
from contestnet.config import settings
from contestnet.dynamics import farsighted_stable_set, simulate_formation
from contestnet.errors import ContestNetError, InvalidInputError, UsageError
from contestnet.logger import configure_logging, get_logger, set_run_id
from contestnet.metrics import write_metrics
from contestnet.model import ContestParams, CostSpec, GameSpec, Structure, TechnologySpec
from contestnet.scenario import Scenario, load_scenario
from contestnet.serialization import FORMATS, equilibrium_csv, equilibrium_document, rows_to_csv, to_json, write_output
from contestnet.solver import METHODS, solve_equilibrium
from contestnet.stability import (
    LfpsSearch,
    check_lfps,
    check_nash,
    check_strong_pairwise,
    classify_partition,
    validate_mpartite,
    weaker_target_violations,
)
from contestnet.tracing import get_tracer, init_tracing, shutdown
from contestnet.validation import run_checks

CONCEPTS = ("nash", "strong_pairwise", "lfps")

Outcome = Tuple[str, int]


class ArgumentParser(argparse.ArgumentParser):
    """argparse that raises UsageError instead of exiting."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _pair(text: str) -> Tuple[int, int]:
    try:
        i, j = (int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'i,j', got {text!r}")
    return i, j


def _grid(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help="write the result here instead of stdout")
    common.add_argument("--format", choices=FORMATS, default="json", help="result format (default: json)")
    common.add_argument("--tol", type=float, default=None,
                        help=f"KKT residual bound (default: {settings.SOLVER_TOL:g})")
    common.add_argument("--seed", type=int, default=None, help="seed for randomized starts and pair draws")
    common.add_argument("--metrics-file", default=settings.METRICS_FILE or None,
                        help="write Prometheus text metrics here after the run")
    common.add_argument("--log-level", default=None, help=f"log level (default: {settings.LOG_LEVEL})")

    parser = ArgumentParser(prog="contestnet", description="Contest games on networks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    def scenario_arg(p, required=True):
        p.add_argument("--scenario", required=required, help="scenario JSON file")

    p = sub.add_parser("solve", parents=[common], help="solve the equilibrium on a structure")
    scenario_arg(p)
    p.add_argument("--method", choices=METHODS, default="auto")
    p.add_argument("--no-reduce", action="store_true", help="solve complete multipartite inputs in full")

    p = sub.add_parser("stability", parents=[common], help="check a stability notion")
    scenario_arg(p)
    p.add_argument("--concept", choices=CONCEPTS, required=True)
    p.add_argument("--exhaustive-limit", type=int, default=settings.LFPS_EXHAUSTIVE_LIMIT,
                   help="largest |F_i| searched exhaustively by lfps (default: %(default)s)")
    p.add_argument("--threads", type=int, default=settings.THREADS, help="lfps worker threads (default: %(default)s)")

    p = sub.add_parser("classify", parents=[common], help="class partition and structural verdict")
    scenario_arg(p)
    p.add_argument("--tol-rel", type=float, default=settings.CLASS_TOL_REL,
                   help="relative grouping tolerance on totals (default: %(default)g)")

    p = sub.add_parser("threshold", parents=[common], help="victim-class threshold of B(n - v, v)")
    scenario_arg(p, required=False)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=float, default=None, help="draw term (default: scenario or 0)")
    p.add_argument("--alpha", type=float, default=None, help="benchmark cost (2/alpha) x^alpha")

    p = sub.add_parser("sweep", parents=[common], help="re-solve along a parameter grid")
    scenario_arg(p)
    p.add_argument("--kind", choices=("r", "T", "cost_scale", "partition_v", "br_curve"), required=True)
    p.add_argument("--grid", type=_grid, required=True, help="comma-separated strictly monotone values")
    p.add_argument("--pair", type=_pair, default=None, help="linked pair 'i,j' for br_curve")
    p.add_argument("--threads", type=int, default=settings.THREADS)

    p = sub.add_parser("shock", parents=[common], help="cost-shock derivatives on B(a, v)")
    scenario_arg(p, required=False)
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--v", type=int, required=True)
    p.add_argument("--role", choices=("attacker", "victim"), required=True)

    p = sub.add_parser("simulate", parents=[common], help="sequential pair-revision network formation")
    scenario_arg(p)
    p.add_argument("--periods", type=int, required=True)

    p = sub.add_parser("farsighted", parents=[common], help="farsightedly stable structures for n <= 4")
    scenario_arg(p, required=False)
    p.add_argument("--n", type=int, required=True)

    p = sub.add_parser("validate", parents=[common], help="run the invariant checks on a scenario")
    scenario_arg(p)
    return parser


def _benchmark_spec(args) -> GameSpec:
    if args.scenario:
        spec = load_scenario(args.scenario).game_spec()
    else:
        spec = GameSpec(TechnologySpec(), CostSpec.benchmark(2.0), ContestParams())
    if getattr(args, "alpha", None) is not None:
        spec = spec.with_cost(CostSpec.benchmark(args.alpha))
    if getattr(args, "r", None) is not None:
        spec = spec.with_params(r=args.r)
    return spec


def _scenario(args) -> Tuple[Scenario, Structure, GameSpec]:
    scenario = load_scenario(args.scenario)
    return scenario, scenario.structure(), scenario.game_spec()


def cmd_solve(args) -> Outcome:
    _, g, spec = _scenario(args)
    eq = solve_equilibrium(g, spec, method=args.method, tol=args.tol, seed=args.seed, reduce=not args.no_reduce)
    if args.format == "csv":
        return equilibrium_csv(eq), 0
    return to_json(equilibrium_document(eq)), 0


def cmd_stability(args) -> Outcome:
    _, g, spec = _scenario(args)
    eq = solve_equilibrium(g, spec, tol=args.tol, seed=args.seed)
    if args.concept == "nash":
        report = check_nash(eq.profile, spec)
    elif args.concept == "strong_pairwise":
        report = check_strong_pairwise(eq.profile, spec)
    else:
        search = LfpsSearch(exhaustive_limit=args.exhaustive_limit, threads=args.threads)
        report = check_lfps(g, spec, search, eq=eq)
    if args.format == "csv":
        row = {
            "concept": report.concept,
            "verdict": report.verdict,
            "certificate_kind": report.certificate.kind if report.certificate else None,
            "deviators": " ".join(str(d.player) for d in report.certificate.deviators) if report.certificate else None,
            "search_family": report.search_family,
        }
        return rows_to_csv([row]), 0
    return to_json(report), 0


def cmd_classify(args) -> Outcome:
    _, g, spec = _scenario(args)
    eq = solve_equilibrium(g, spec, tol=args.tol, seed=args.seed)
    partition = classify_partition(eq, args.tol_rel)
    verdict = validate_mpartite(partition, g)
    if args.format == "csv":
        class_of = partition.class_of
        rows = [
            {"player": i, "class": class_of[i], "role": partition.roles[i], "total": float(eq.totals[i])}
            for i in range(g.n)
        ]
        return rows_to_csv(rows), 0
    document = {
        "partition": partition.to_dict(),
        "mpartite": verdict.model_dump(),
        "weaker_target_violations": [list(t) for t in weaker_target_violations(eq, args.tol_rel)],
    }
    return to_json(document), 0


def cmd_threshold(args) -> Outcome:
    spec = _benchmark_spec(args)
    result = bipartite_threshold(args.n, spec.r, spec.cost)
    if args.format == "csv":
        rows = [
            {"n": result.n, "r": result.r, "v": v, "f": f, "v_star": result.v_star, "max_stable_v": result.max_stable_v}
            for v, f in sorted(result.f_values.items())
        ]
        return rows_to_csv(rows, ["n", "r", "v", "f", "v_star", "max_stable_v"]), 0
    return to_json(result), 0


def cmd_sweep(args) -> Outcome:
    scenario = load_scenario(args.scenario)
    table = sweep(args.kind, args.grid, scenario, pair=args.pair, threads=args.threads)
    if args.format == "csv":
        return rows_to_csv(table.rows()), 0
    return to_json(table), 0


def cmd_shock(args) -> Outcome:
    result = cost_shock_derivatives(args.a, args.v, args.role, _benchmark_spec(args))
    if args.format == "csv":
        return rows_to_csv([result.model_dump()]), 0
    return to_json(result), 0


def cmd_simulate(args) -> Outcome:
    _, g, spec = _scenario(args)
    seed = 0 if args.seed is None else args.seed
    trajectory = simulate_formation(g, spec, args.periods, seed=seed)
    code = 2 if trajectory.status == "aborted" else 0
    if args.format == "csv":
        rows = [
            {
                "period": record.period,
                "phase": record.phase,
                "pair": "" if record.pair is None else f"{record.pair[0]}-{record.pair[1]}",
                "event": record.event,
                "edges": " ".join(f"{i}-{j}" for i, j in record.edges),
                "w_star": sum(record.totals),
                "residual": record.residual,
            }
            for record in trajectory.records
        ]
        return rows_to_csv(rows), code
    return trajectory.to_jsonl(), code


def cmd_farsighted(args) -> Outcome:
    result = farsighted_stable_set(args.n, _benchmark_spec(args))
    if args.format == "csv":
        rows = [
            {
                "edges": " ".join(f"{i}-{j}" for i, j in c.edges),
                "labelled_members": c.labelled_members,
                "payoffs": " ".join(format(p, ".17g") for p in c.payoffs),
            }
            for c in result.stable
        ]
        return rows_to_csv(rows, ["edges", "labelled_members", "payoffs"]), 0
    return to_json(result), 0


def cmd_validate(args) -> Outcome:
    result = run_checks(load_scenario(args.scenario), tol=args.tol, seed=args.seed)
    code = 0 if result["status"] == "pass" else 2
    if args.format == "csv":
        return rows_to_csv(result["checks"], ["name", "status", "detail"]), code
    return to_json(result), code


HANDLERS: Dict[str, Callable[[argparse.Namespace], Outcome]] = {
    "solve": cmd_solve,
    "stability": cmd_stability,
    "classify": cmd_classify,
    "threshold": cmd_threshold,
    "sweep": cmd_sweep,
    "shock": cmd_shock,
    "simulate": cmd_simulate,
    "farsighted": cmd_farsighted,
    "validate": cmd_validate,
}


def _report_error(message: str):
    sys.stderr.write(f"contestnet: error: {message}\n")


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse argv, dispatch one command and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        _report_error(str(e))
        return e.exit_code
    except SystemExit as e:
        # --help and --version
        return int(e.code or 0)

    configure_logging(
        env=settings.ENV,
        log_to_file=settings.LOG_TO_FILE,
        log_dir=settings.LOG_DIR,
        level=args.log_level or settings.LOG_LEVEL,
    )
    set_run_id(str(uuid.uuid4()))
    logger = get_logger(__name__)
    if settings.TRACING_ENABLED:
        try:
            init_tracing(service_name="contestnet", service_version=__version__, environment=settings.ENV)
        except Exception as e:
            logger.warning("tracing_init_failed", error=str(e))

    start = time.perf_counter()
    logger.info("command_started", command=args.command, scenario=getattr(args, "scenario", None))
    code = 2
    try:
        if args.tol is not None and not args.tol > 0:
            raise InvalidInputError(f"--tol must be positive, got {args.tol}")
        with get_tracer().start_as_current_span(f"cli.{args.command}") as span:
            text, code = HANDLERS[args.command](args)
            span.set_attribute("contestnet.exit_code", code)
        write_output(text, args.output)
    except ContestNetError as e:
        logger.error("command_failed", command=args.command, error=str(e), error_type=type(e).__name__)
        _report_error(str(e))
        code = e.exit_code
    except OSError as e:
        logger.error("output_failed", command=args.command, error=str(e))
        _report_error(str(e))
        code = 1
    except Exception as e:
        logger.exception("command_crashed", command=args.command, error=str(e))
        _report_error(f"unexpected failure: {e}")
        code = 2
    finally:
        if args.metrics_file:
            try:
                write_metrics(args.metrics_file)
            except OSError as e:
                logger.warning("metrics_write_failed", path=args.metrics_file, error=str(e))
        logger.info(
            "command_completed",
            command=args.command,
            exit_code=code,
            process_time_ms=round((time.perf_counter() - start) * 1000, 2),
        )
        shutdown()
    return code


def main():
    raise SystemExit(run())
