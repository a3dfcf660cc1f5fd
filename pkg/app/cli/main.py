"""
ltisym command-line interface.

Usage:
    python main.py certify system.json --property all
    python main.py canonicalize system.json --form factorize
    python main.py hankel system.json --grid 15,0.001
    python main.py geometry subspace.json --test separable
    python main.py generate --kind relaxation --n 3 --seed 7

An input of ``-`` reads standard input; a directory input processes every
``*.json`` file in it, sorted by name, into one batch report.
"""
import argparse
import json
import sys
from pathlib import Path
from typing import Callable, List, Optional, Sequence, TextIO

from loguru import logger
from pydantic import BaseModel

from app import __version__
from app.cli import commands
from app.cli.error_handler import EXIT_INPUT_ERROR, EXIT_OK, INPUT_ERRORS, error_response
from app.exceptions import DocumentError
from app.schemas.report import BatchReportDocument, ReportDocument, dump_document
from app.schemas.subspace import load_subspace_document
from app.schemas.system import load_system_document
from app.services.generators import GeneratorKind
from config.logging_config import setup_logging


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ltisym", description="Symmetry certificates and canonical forms for LTI systems")
    parser.add_argument("--version", action="version", version=f"ltisym {__version__}")
    parser.add_argument("--log-level", default=None, help="Override LOG_LEVEL for this run")
    subparsers = parser.add_subparsers(dest="command", required=True, help="Command to execute")

    def with_input(sub: argparse.ArgumentParser, what: str) -> None:
        sub.add_argument("input", help=f"{what} document, '-' for stdin, or a directory of documents")
        sub.add_argument("--tol", type=float, default=None, help="Override the feasibility tolerance")
        sub.add_argument("--jobs", type=int, default=1, help="Worker threads for directory input")

    certify_parser = subparsers.add_parser("certify", help="Find structure certificates")
    with_input(certify_parser, "System")
    certify_parser.add_argument(
        "--property", dest="properties", action="append",
        choices=commands.PROPERTIES + ["all"], help="Property to test (repeatable, default all)",
    )

    canonical_parser = subparsers.add_parser("canonicalize", help="Transform to a canonical form")
    with_input(canonical_parser, "System")
    canonical_parser.add_argument("--form", required=True, choices=commands.FORMS)

    hankel_parser = subparsers.add_parser("hankel", help="Spectrum of the signature-weighted Hankel operator")
    with_input(hankel_parser, "System")
    hankel_parser.add_argument("--grid", default=None, help="Time grid 'T,h' for Mercer and discretized checks")

    geometry_parser = subparsers.add_parser("geometry", help="Lagrangian and Dirac subspace tests")
    with_input(geometry_parser, "Subspace")
    geometry_parser.add_argument("--test", required=True, choices=commands.GEOMETRY_TESTS)

    generate_parser = subparsers.add_parser("generate", help="Generate a random structured system")
    generate_parser.add_argument("--kind", required=True, choices=[k.value for k in GeneratorKind])
    generate_parser.add_argument("--n", type=int, required=True, help="State dimension")
    generate_parser.add_argument("--m", type=int, default=1, help="Number of inputs and outputs")
    generate_parser.add_argument("--seed", type=int, default=None, help="Random seed")
    return parser


def _read(source: str, stdin: TextIO) -> str:
    if source == "-":
        return stdin.read()
    try:
        return Path(source).read_text(encoding="utf-8")
    except OSError as exc:
        raise DocumentError(f"cannot read {source}: {exc}") from exc


def _handler(args: argparse.Namespace) -> Callable[[str], ReportDocument]:
    """Document text -> report for the chosen command."""
    if args.command == "certify":
        properties = args.properties or ["all"]
        return lambda text: commands.cmd_certify(load_system_document(text), properties)
    if args.command == "canonicalize":
        return lambda text: commands.cmd_canonicalize(load_system_document(text), args.form)
    if args.command == "hankel":
        grid = commands.parse_grid(args.grid)
        return lambda text: commands.cmd_hankel(load_system_document(text), grid)
    return lambda text: commands.cmd_geometry(load_subspace_document(text), args.test)


def _emit(document: BaseModel, stdout: TextIO) -> None:
    stdout.write(dump_document(document))
    stdout.write("\n")


def _run_batch(args: argparse.Namespace, directory: Path, handler, stdout: TextIO) -> int:
    files = sorted(directory.glob("*.json"), key=lambda p: p.name)
    logger.info(f"batch {args.command}: {len(files)} documents in {directory}")
    jobs = [(path.name, (lambda p=path: handler(p.read_text(encoding="utf-8")))) for path in files]
    batch = BatchReportDocument(command=args.command)
    for name, result in commands.run_many(jobs, max(1, args.jobs)):
        if isinstance(result, DocumentError):
            batch.errors[name] = error_response(result)["error"]
        else:
            batch.reports.append(result)
    _emit(batch, stdout)
    return EXIT_INPUT_ERROR if batch.errors else EXIT_OK


def main(argv: Optional[Sequence[str]] = None, stdin: TextIO = None, stdout: TextIO = None, stderr: TextIO = None) -> int:
    """
    Run the CLI.

    Returns:
        0 when the analysis ran (verdicts may be false or unknown), 2 on
        input errors
    """
    stdin, stdout, stderr = stdin or sys.stdin, stdout or sys.stdout, stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT_ERROR
    setup_logging(args.log_level)

    try:
        if args.command == "generate":
            _emit(commands.cmd_generate(args.kind, args.n, args.m, args.seed), stdout)
            return EXIT_OK

        with commands.tolerance_override(args.tol):
            handler = _handler(args)
            source = Path(args.input)
            if args.input != "-" and source.is_dir():
                return _run_batch(args, source, handler, stdout)
            _emit(handler(_read(args.input, stdin)), stdout)
        return EXIT_OK
    except INPUT_ERRORS as exc:
        logger.error(f"{args.command}: {exc.code}: {exc.message}")
        stderr.write(json.dumps(error_response(exc)))
        stderr.write("\n")
        return EXIT_INPUT_ERROR


def run(argv: Optional[List[str]] = None) -> None:
    sys.exit(main(argv))
