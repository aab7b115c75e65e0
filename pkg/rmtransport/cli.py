"""
Command-line front end.

    rmtransport run --problem test-a --method sr-sl --out DIR
    rmtransport compare --problem test-b --methods all --out DIR
    rmtransport quadrature --points 4

Exit codes: 0 on success, 1 on a usage or configuration error, 2 when a method did not converge.
"""
from typing import List, Optional, Sequence
import argparse
import logging

from .approximations import MethodKind
from .config import load_problem, transport_threads
from .errors import ConfigurationError, NonConvergenceError, SingularSystemError
from .grid import build_double_gauss_quadrature
from .harness import run_comparison, run_method, write_run

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NONCONVERGENCE = 2


def parse_methods(text: str) -> List[MethodKind]:
    """Parses 'all' or a comma-separated list of method names."""
    if text.strip() == "all":
        return list(MethodKind)
    return [MethodKind.from_name(name.strip()) for name in text.split(",") if name.strip()]


def _add_problem_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--problem", help="built-in problem: test-a or test-b")
    parser.add_argument("--config", help="key = value configuration file")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--dt", type=float, help="time step, ns")
    parser.add_argument("--cells", type=int, help="number of spatial cells")
    parser.add_argument("--tolerance", type=float, help="convergence tolerance on phi_bar")
    parser.add_argument("--tolerance-mode", choices=["relative", "absolute"])
    parser.add_argument("--verbose", "-v", action="store_true", help="log every iteration")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rmtransport",
                                     description="Time-dependent slab transport with reduced-memory time stepping.")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run one method")
    _add_problem_arguments(run)
    run.add_argument("--method", help="reference, zero-slope, p1, sr-sl, beta-bar or beta-lr")

    compare = commands.add_parser("compare", help="compare methods against the reference method")
    _add_problem_arguments(compare)
    compare.add_argument("--methods", default="all", help="'all' or a comma-separated list")
    compare.add_argument("--jobs", type=int, default=1, help="methods run concurrently")

    quadrature = commands.add_parser("quadrature", help="print double Gauss-Legendre directions and weights")
    quadrature.add_argument("--points", type=int, default=4, help="points per half-range")
    quadrature.add_argument("--verbose", "-v", action="store_true")
    return parser


def _problem(args):
    return load_problem(args.config, problem=args.problem, output=args.out, dt=args.dt, cell_count=args.cells,
                        tolerance=args.tolerance, tolerance_mode=args.tolerance_mode,
                        method=getattr(args, "method", None))


def _run(args) -> int:
    problem = _problem(args)
    run = run_method(problem, MethodKind.from_name(problem.method), transport_threads())
    write_run(run, problem.output)
    if run.failure is not None:
        return EXIT_NONCONVERGENCE
    print(f"{problem.name}: {problem.method}, {problem.step_count} steps, "
          f"{int(run.steps['iterations'].sum())} iterations, results in {problem.output}")
    return EXIT_OK


def _compare(args) -> int:
    problem = _problem(args)
    methods = parse_methods(args.methods)
    if args.jobs < 1:
        raise ConfigurationError("--jobs must be at least 1")
    report = run_comparison(problem, methods, problem.output, transport_threads(), args.jobs)
    print(report.summary.to_string(index=False))
    return EXIT_NONCONVERGENCE if report.failures else EXIT_OK


def _quadrature(args) -> int:
    quadrature = build_double_gauss_quadrature(args.points)
    print("m,mu,w")
    for m, (mu, weight) in enumerate(zip(quadrature.directions, quadrature.weights), start=1):
        print(f"{m},{mu:.17g},{weight:.17g}")
    return EXIT_OK


COMMANDS = {"run": _run, "compare": _compare, "quadrature": _quadrature}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as error:
        return EXIT_OK if error.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as error:
        logger.error(str(error))
        return EXIT_USAGE
    except (NonConvergenceError, SingularSystemError) as error:
        logger.error(str(error))
        return EXIT_NONCONVERGENCE
