import argparse
import sys
from pathlib import Path
from typing import List, Optional

sys.path.append(str(Path(__file__).resolve().parent.parent))

from utils.app_utils import DEFAULT_SETTINGS_FILENAME

MODES = ("poly", "semialg", "archimedean")


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--settings", default=DEFAULT_SETTINGS_FILENAME, help="JSON settings file.")


def _add_program(parser: argparse.ArgumentParser, degree_required: bool) -> None:
    parser.add_argument("--mode", choices=MODES, default="poly", help="SOS program flavour.")
    parser.add_argument("--degree", type=int, required=degree_required, help="Template degree d.")
    parser.add_argument("--order", type=int, default=None, help="Relaxation order s (2s bounds all degrees).")
    parser.add_argument("--margin", default=None, help="Margin mu (exact rational, e.g. 1 or 0.5).")
    parser.add_argument("--epsilon", default=None, help="Constant epsilon added to both sides.")


def _add_solver(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--feas-tol", type=float, default=None, help="Feasibility tolerance.")
    parser.add_argument("--max-iterations", type=int, default=None, help="Interior-point iteration cap.")
    parser.add_argument("--threads", type=int, default=None, help="BLAS threads.")


def _add_sampling(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="Sampling seed.")
    parser.add_argument("--samples", type=int, default=None, help="Samples per clause.")
    parser.add_argument("--box", default=None, help="Sampling box LO,HI (write --box=-3,3).")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="interpolsos",
        description="Synthesize and check interpolants with sums-of-squares programs.",
    )
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    synth = commands.add_parser("synth", help="Synthesize an interpolant.")
    synth.add_argument("problem", help="Problem file.")
    _add_program(synth, degree_required=True)
    synth.add_argument("--max-degree", type=int, default=None, help="Largest template degree to try.")
    synth.add_argument("--max-order", type=int, default=None, help="Largest relaxation order to try.")
    synth.add_argument("--solver", choices=("embedded", "sdpa-export"), default="embedded")
    synth.add_argument("--sdpa-solution", default=None, help="SDPA output file to import (with --solver sdpa-export).")
    synth.add_argument("--out", default=None, help="Output prefix (default: problem path without extension).")
    _add_sampling(synth)
    _add_solver(synth)
    _add_common(synth)

    check = commands.add_parser("check", help="Check an interpolant by sampling (and optionally certify it).")
    check.add_argument("interpolant", help="Interpolant file.")
    check.add_argument("problem", help="Problem file.")
    check.add_argument("--cert", default=None, help="Certificate JSON to re-check.")
    check.add_argument("--certify", action="store_true", help="Search for an SOS certificate of the given interpolant.")
    _add_program(check, degree_required=False)
    check.add_argument("--out", default=None, help="Report prefix.")
    _add_sampling(check)
    _add_solver(check)
    _add_common(check)

    plot = commands.add_parser("plot", help="Draw phi, psi and the interpolant as an SVG.")
    plot.add_argument("problem", help="Problem file.")
    plot.add_argument("interpolant", help="Interpolant file.")
    plot.add_argument("--out", required=True, help="SVG file.")
    plot.add_argument("--resolution", type=int, default=None, help="Cells per axis.")
    plot.add_argument("--fix", action="append", default=[], help="VAR=VALUE, repeatable.")
    plot.add_argument("--box", default=None, help="Plot box LO,HI (write --box=-3,3).")
    plot.add_argument("--seed", type=int, default=None, help="Seed for private-variable draws.")
    _add_common(plot)

    export = commands.add_parser("export-sdpa", help="Write the SDP of one (d, s) in SDPA sparse format.")
    export.add_argument("problem", help="Problem file.")
    _add_program(export, degree_required=True)
    export.add_argument("--out", required=True, help="Output .dat-s file.")
    _add_common(export)

    return parser


def get_parsed_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """
    Parses the command line.

    Parameters:
        argv (list, optional): Arguments without the program name; defaults to sys.argv[1:].

    Returns:
        argparse.Namespace: Parsed options; `command` names the subcommand.
    """
    return build_parser().parse_args(argv)
