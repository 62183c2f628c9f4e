"""
InterpolSOS - SDPA Export

This script writes the SDP of a single (d, s) in SDPA sparse format so it can be
handed to an external solver. The solution can be brought back with
`synth --solver sdpa-export --sdpa-solution`.

Usage:
    python export_sdpa.py ovals.txt --degree 7 --order 4 --out ovals.dat-s

Last Update:
    2026-10-16
"""

import sys
from pathlib import Path

sys.path.append(str(Path(__file__).resolve().parent.parent))

from utils.app_utils import RunConfig, settings_section
from utils.exception_handler import exception_handler
from utils.formula_utils import load_problem
from utils.logger_utils import console
from utils.sdpa_utils import export_sdpa
from utils.sos_utils import build_program, compile_to_sdp, minimal_order


@exception_handler(default_return=1)
def cmd_export_sdpa(cfg: RunConfig, settings_data: dict) -> int:
    synthesis = settings_section(settings_data, "synthesis")
    instance = load_problem(cfg.problem)
    order = cfg.order if cfg.order is not None else minimal_order(instance, cfg.degree, cfg.mode)
    program = build_program(instance, cfg.degree, order, cfg.mode, cfg.margin, cfg.epsilon)
    problem = compile_to_sdp(program, n_jobs=int(synthesis.get("n_jobs", 1)))
    export_sdpa(problem, cfg.out)
    stats = problem.stats()
    console.print(" ".join(f"{key}={stats[key]}" for key in ("blocks", "psd_dim", "equalities", "free")))
    return 0


if __name__ == "__main__":
    from main import main

    sys.exit(main(["export-sdpa", *sys.argv[1:]]))
