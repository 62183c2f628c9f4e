"""
InterpolSOS - Command Line

Entry point of the interpolsos command: synth, check, plot and export-sdpa.

Usage:
    python main.py synth data/curves.txt --mode semialg --degree 3 --box=-3,3
    python main.py check data/torus_hp.interp data/torus.txt --certify --degree 2 --order 2
    python main.py plot data/torus.txt data/torus_hp.interp --out torus.svg --fix z=0 --fix r=0.75 --fix R=5
    python main.py export-sdpa data/ovals.txt --degree 7 --order 4 --out ovals.dat-s

Exit status:
    0 - verified / check passed / file written.
    1 - usage, input or internal error.
    2 - no interpolant verified (synth) or a check failed (check).

Last Update:
    2026-10-16
"""

import sys
from pathlib import Path
from typing import List, Optional

sys.path.append(str(Path(__file__).resolve().parent))

from scripts.check import cmd_check
from scripts.export_sdpa import cmd_export_sdpa
from scripts.plot import cmd_plot
from scripts.synth import cmd_synth
from utils.app_utils import build_run_config, extract_settings_data
from utils.logger_utils import initialize_logger, log
from utils.parser_utils import get_parsed_arguments

COMMANDS = {
    "synth": cmd_synth,
    "check": cmd_check,
    "plot": cmd_plot,
    "export-sdpa": cmd_export_sdpa,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = get_parsed_arguments(argv)
    initialize_logger(args.settings)
    settings_data = extract_settings_data(args.settings)
    try:
        cfg = build_run_config(args, settings_data)
    except ValueError as e:
        log(f"Invalid option: {e}")
        return 1
    return COMMANDS[cfg.command](cfg, settings_data)


if __name__ == "__main__":
    sys.exit(main())
