"""
InterpolSOS - Region Portrait

This script draws phi, psi and the sign regions of an interpolant over two shared
variables as a layered SVG. Further shared variables are fixed with --fix;
private variables may be fixed too, otherwise they are drawn at random.

Functions:
    parse_fix() - Turns VAR=VALUE options into a variable assignment.
    cmd_plot() - Rasterizes the regions and writes the SVG.

Usage:
    python plot.py torus.txt torus_hp.interp --out torus.svg --fix z=0 --fix r=0.75 --fix R=5

Last Update:
    2026-10-16
"""

import sys
from fractions import Fraction
from pathlib import Path
from time import time
from typing import Dict, List

sys.path.append(str(Path(__file__).resolve().parent.parent))

from utils.app_utils import RunConfig, settings_section
from utils.exception_handler import exception_handler
from utils.extract_utils import load_interpolant
from utils.formula_utils import ProblemInstance, load_problem
from utils.logger_utils import log
from utils.plot_utils import rasterize_regions, render_svg
from utils.poly_utils import VarId


def parse_fix(values: List[str], instance: ProblemInstance) -> Dict[VarId, float]:
    """
    Parses repeated VAR=VALUE options.

    Example:
        >>> parse_fix(["z=0", "R=5"], torus)
        {3: 0.0, 5: 5.0}
    """
    fixed = {}
    for item in values:
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise ValueError(f"--fix expects VAR=VALUE, got '{item}'")
        fixed[instance.vartable.index(name.strip())] = float(Fraction(value.strip()))
    return fixed


@exception_handler(default_return=1)
def cmd_plot(cfg: RunConfig, settings_data: dict) -> int:
    """
    Writes the region portrait of a problem and an interpolant.

    Steps:
        1. Parse the problem, the interpolant and the --fix assignments.
        2. Rasterize phi, psi and the sign of h on the grid.
        3. Render the layers to cfg.out.
    """
    start_time = time()
    plot = settings_section(settings_data, "plot")

    instance = load_problem(cfg.problem)
    interp = load_interpolant(cfg.interpolant, instance)
    fixed = parse_fix(cfg.fix, instance)

    grid = rasterize_regions(
        instance,
        interp,
        cfg.box,
        cfg.resolution,
        fixed=fixed,
        private_draws=int(plot.get("private_draws", 64)),
        seed=cfg.seed,
    )
    render_svg(grid, cfg.out, cfg.box, plot.get("colors"))

    end_time = time()
    log(f"Time taken: {end_time - start_time:.2f} seconds")
    return 0


if __name__ == "__main__":
    from main import main

    sys.exit(main(["plot", *sys.argv[1:]]))
