"""
Command-line entry point.

    blockspec radius config.json
    blockspec density config.json --grid-points 1025 --out density.csv
    blockspec mass config.json --r1 0.5 --r2 1.5
    blockspec compare config.json --trials 10 --threads 4 -v

Exit codes: 0 on success, 2 for configuration and validation errors, 3 when
a fixed-point solve does not converge, 4 when the eigensolver fails.
"""

import argparse
import contextlib
import io
import logging
import sys
from collections.abc import Callable, Sequence
from pathlib import Path

from .config import RunConfig, parse_config
from .density import annulus_mass, density_grid
from .errors import (
    ConfigError,
    EigensolverFailure,
    InvalidSolverParams,
    InvalidStructure,
    NoConvergence,
    NotConverged,
    SolverFailure,
)
from .format import dumps_json, write_csv
from .montecarlo import compare, run_trials
from .reduced_matrices import build_reduced, hilbert_schmidt_radius
from .workers import threads

__all__ = [
    "EXIT_CONFIG",
    "EXIT_EIGENSOLVER",
    "EXIT_OK",
    "EXIT_SOLVER",
    "build_parser",
    "main",
    "run",
]

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_EIGENSOLVER = 4

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _validate(config: RunConfig, r1: float | None, r2: float | None) -> str:
    build_reduced(config.structure)
    logger.info("configuration is valid (D=%d)", config.structure.D)
    return ""


def _radius(config: RunConfig, r1: float | None, r2: float | None) -> str:
    reduced = build_reduced(config.structure)
    return dumps_json(
        {
            "D": reduced.D,
            "radius": reduced.radius,
            "pf_value": reduced.pf_value,
            "pf_vector": reduced.pf_vector,
            "pf_vector_hat": reduced.pf_vector_hat,
            "hilbert_schmidt_radius": hilbert_schmidt_radius(config.structure),
            "G": reduced.G,
            "Ghat": reduced.Ghat,
        }
    )


def _density(config: RunConfig, r1: float | None, r2: float | None) -> str:
    radial = density_grid(config.structure, config.grid_points, config.solver)
    header = ["r", "u", "f", "p", "M"] + [f"psi_{c + 1}" for c in range(radial.D)]
    columns = [radial.r_grid, radial.u_grid, radial.f, radial.p, radial.M, *radial.psi_grid]
    stream = io.StringIO()
    write_csv(stream, header, zip(*columns))
    return stream.getvalue()


def _mass(config: RunConfig, r1: float | None, r2: float | None) -> str:
    if r1 is None or r2 is None:
        raise ValueError("The mass command needs both r1 and r2.")
    mass = annulus_mass(config.structure, r1, r2, config.solver)
    return dumps_json({"r1": r1, "r2": r2, "mass": mass})


def _sample(config: RunConfig, r1: float | None, r2: float | None) -> str:
    empirical = run_trials(
        config.structure, config.N, config.trials, config.seed, bins=config.bins
    )
    values = empirical.eigenvalues
    stream = io.StringIO()
    write_csv(
        stream,
        ["re", "im", "trial"],
        zip(values.real, values.imag, empirical.trial_labels),
    )
    return stream.getvalue()


def _compare(config: RunConfig, r1: float | None, r2: float | None) -> str:
    empirical = run_trials(
        config.structure, config.N, config.trials, config.seed, bins=config.bins
    )
    return dumps_json(compare(empirical, config.structure, config.solver).to_dict())


COMMANDS: dict[str, Callable[[RunConfig, float | None, float | None], str]] = {
    "validate": _validate,
    "radius": _radius,
    "density": _density,
    "mass": _mass,
    "sample": _sample,
    "compare": _compare,
}


def _emit(text: str, output_path: str) -> None:
    if output_path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(output_path).write_text(text, encoding="utf-8", newline="")


def _fail(exc: BaseException, code: int) -> int:
    logger.debug("command failed", exc_info=exc)
    print(f"blockspec: error: {exc}", file=sys.stderr)
    return code


def run(
    command: str,
    config: RunConfig,
    *,
    r1: float | None = None,
    r2: float | None = None,
) -> int:
    """
    Execute one subcommand and write its output to `config.output_path`.

    Output is produced completely before anything is written, so a failing
    command leaves no partial file behind. Returns the process exit code.
    """
    handler = COMMANDS.get(command)
    if handler is None:
        raise ValueError(f"Unknown command {command!r}.")
    try:
        text = handler(config, r1, r2)
    except (ConfigError, InvalidStructure, InvalidSolverParams) as exc:
        return _fail(exc, EXIT_CONFIG)
    except (NoConvergence, SolverFailure, NotConverged) as exc:
        return _fail(exc, EXIT_SOLVER)
    except EigensolverFailure as exc:
        return _fail(exc, EXIT_EIGENSOLVER)
    if text:
        _emit(text, config.output_path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help='path to the JSON run configuration, or "-" for stdin')
    common.add_argument("--seed", type=int, help="override the base seed")
    common.add_argument("--trials", type=int, help="override the number of trials")
    common.add_argument("--grid-points", type=int, help="override the radial grid size")
    common.add_argument("--out", help='override the output path ("-" for stdout)')
    common.add_argument("--threads", type=int, help="cap the number of worker threads")
    common.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="log progress to stderr (-v for INFO, -vv for DEBUG)",
    )

    parser = argparse.ArgumentParser(
        prog="blockspec",
        description="Limiting spectra of block-structured asymmetric random matrices.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser("validate", parents=[common], help="check a configuration")
    subparsers.add_parser(
        "radius", parents=[common], help="support radius and Perron-Frobenius data (JSON)"
    )
    subparsers.add_parser(
        "density", parents=[common], help="radial density and cumulative mass (CSV)"
    )
    mass = subparsers.add_parser("mass", parents=[common], help="mass of an annulus (JSON)")
    mass.add_argument("--r1", type=float, required=True, help="inner radius")
    mass.add_argument("--r2", type=float, required=True, help="outer radius")
    subparsers.add_parser("sample", parents=[common], help="eigenvalues of sampled matrices (CSV)")
    subparsers.add_parser(
        "compare", parents=[common], help="Monte Carlo spectra against the limit law (JSON)"
    )
    return parser


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)


def _read_config(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    if args.command == "mass" and not 0 <= args.r1 <= args.r2:
        parser.error(f"need 0 <= r1 <= r2, got r1={args.r1}, r2={args.r2}")

    try:
        text = _read_config(args.config)
    except OSError as exc:
        return _fail(exc, EXIT_CONFIG)
    try:
        config = parse_config(text).with_overrides(
            seed=args.seed,
            trials=args.trials,
            grid_points=args.grid_points,
            output_path=args.out,
        )
        scope = (
            threads(args.threads).activate()
            if args.threads is not None
            else contextlib.nullcontext()
        )
    except ConfigError as exc:
        return _fail(exc, EXIT_CONFIG)

    logger.info("running %s (D=%d)", args.command, config.structure.D)
    with scope:
        return run(
            args.command,
            config,
            r1=getattr(args, "r1", None),
            r2=getattr(args, "r2", None),
        )
