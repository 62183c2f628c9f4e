"""
InterpolSOS - Interpolant Synthesis

This script synthesizes an interpolant for a problem file. It walks the
template degree d and the relaxation order s upwards, builds the SOS program of
each (d, s), solves it, and stops at the first interpolant that survives the
certificate residual check and the sampling check.

Functions:
    cmd_synth() - Runs the escalation and writes the interpolant, certificate and reports.

Requirements:
    - formula_utils: Problem parsing.
    - sos_utils: SOS program construction and compilation.
    - sdp_utils / sdpa_utils: Embedded solver, SDPA export and import.
    - extract_utils: Interpolant and certificate extraction.
    - sample_utils: Sampling verification.
    - app_utils: Settings, RunConfig and report writers.

Usage:
    python synth.py problem.txt --degree 4 [--max-degree 6] [--mode poly|semialg|archimedean]
                    [--order 2] [--max-order 4] [--out prefix] [--box=-3,3]

    Outputs <prefix>.interp, <prefix>.cert.json, <prefix>.report.json and
    <prefix>.report.txt. Exit status 0 on a verified interpolant, 2 when every
    attempt failed, 1 on errors.

Last Update:
    2026-10-16
"""

import sys
from dataclasses import asdict
from pathlib import Path
from time import time
from typing import List, Optional

sys.path.append(str(Path(__file__).resolve().parent.parent))
from rich.table import Table

from utils.app_utils import (
    RunConfig,
    resolve_solver_settings,
    save_data_to_csv,
    save_json,
    save_text,
    settings_section,
)
from utils.errors import DegenerateInterpolantError, SdpLimitError
from utils.exception_handler import exception_handler
from utils.extract_utils import certificate_residual, extract, save_certificate, save_interpolant
from utils.formula_utils import Mode, load_problem
from utils.logger_utils import console, log
from utils.sample_utils import verify
from utils.sdp_utils import SdpStatus, solve
from utils.sdpa_utils import export_sdpa, import_solution
from utils.sos_utils import build_program, compile_to_sdp, minimal_order, program_digest


def output_prefix(cfg: RunConfig) -> str:
    return cfg.out or str(Path(cfg.problem).with_suffix(""))


def print_attempts(attempts: List[dict]) -> None:
    table = Table(title="Attempts")
    for column in ("d", "s", "status", "note"):
        table.add_column(column)
    for a in attempts:
        table.add_row(str(a["degree"]), str(a["order"]), a["status"], a.get("note", ""))
    console.print(table)


def render_report_text(report: dict) -> str:
    cfg = report["config"]
    lines = [
        f"problem      {cfg['problem']}",
        f"digest       {report['input_digest']}",
        f"mode         {cfg['mode']}",
        f"outcome      {report['outcome']}",
        "",
        "attempts:",
    ]
    for a in report["attempts"]:
        note = f"  ({a['note']})" if a.get("note") else ""
        lines.append(f"  d={a['degree']} s={a['order']}  {a['status']}{note}")
    result = report.get("result")
    if result:
        lines += [
            "",
            f"interpolant  {result['kind']} of degree {result['degree']}, scale {result['scale']!r}",
            f"residual     {result['certificate_residual']:.3e}",
            "",
            result["interpolant_display"].rstrip(),
            "",
            result["sample_text"].rstrip(),
        ]
    return "\n".join(lines) + "\n"


@exception_handler(default_return=1)
def cmd_synth(cfg: RunConfig, settings_data: dict) -> int:
    """
    Synthesizes an interpolant for the problem in `cfg.problem`.

    Steps:
        1. Parse the problem file.
        2. For d from --degree to --max-degree and s from the order floor to --max-order:
           build the SOS program, compile it and solve it.
        3. On FEASIBLE: extract the interpolant, check the certificate residual and
           sample-verify it; a degenerate or failing interpolant moves on to the next (d, s).
        4. Write the interpolant, certificate and reports of the first verified result,
           or an exhaustion report.

    Returns:
        int: 0 on success, 2 on exhaustion.
    """
    start_time = time()
    synthesis = settings_section(settings_data, "synthesis")
    sampling = settings_section(settings_data, "sampling")
    solver_settings = resolve_solver_settings(settings_data, cfg.solver_settings)
    residual_limit = float(synthesis.get("residual_factor", 10)) * solver_settings.feas_tol
    n_jobs = int(synthesis.get("n_jobs", 1))
    prefix = output_prefix(cfg)
    mode = Mode(cfg.mode)

    instance = load_problem(cfg.problem)
    log(
        f"Loaded {cfg.problem}: {len(instance.phi.clauses)} phi clause(s), "
        f"{len(instance.psi.clauses)} psi clause(s), shared {instance.names(instance.shared)}."
    )

    max_degree = max(cfg.max_degree or cfg.degree, cfg.degree)
    attempts: List[dict] = []
    result: Optional[dict] = None
    single_shot = cfg.solver == "sdpa-export"

    for degree in range(cfg.degree, max_degree + 1):
        floor = minimal_order(instance, degree, mode)
        first = max(cfg.order or floor, floor)
        if cfg.order is not None and cfg.order < floor:
            log(f"Order raised from {cfg.order} to {floor} to cover the generator degrees at d={degree}.")
        last = max(cfg.max_order or first, first)
        for order in range(first, last + 1):
            attempt = {"degree": degree, "order": order}
            attempts.append(attempt)
            log(f"Attempt d={degree}, s={order}.")
            stage_time = time()
            program = build_program(instance, degree, order, mode, cfg.margin, cfg.epsilon)
            problem = compile_to_sdp(program, n_jobs=n_jobs)
            attempt["sdp"] = problem.stats()
            log(f"Built and compiled {problem.stats()} in {time() - stage_time:.2f} seconds.")

            if single_shot:
                dat_file = f"{prefix}.d{degree}.s{order}.dat-s"
                export_sdpa(problem, dat_file)
                if not cfg.sdpa_solution:
                    attempt.update(status="EXPORTED", note=f"wrote {dat_file}; rerun with --sdpa-solution")
                    break
                solution = import_solution(problem, cfg.sdpa_solution, solver_settings)
            else:
                stage_time = time()
                try:
                    solution = solve(problem, solver_settings)
                except SdpLimitError as e:
                    attempt.update(status="REFUSED", note=str(e))
                    continue
                log(f"Solver finished with {solution.status.value} in {time() - stage_time:.2f} seconds.")
            attempt["status"] = solution.status.value
            attempt["solver"] = solution.summary()
            if solution.status != SdpStatus.FEASIBLE:
                attempt["note"] = solution.message
                if single_shot:
                    break
                continue

            try:
                interp, cert = extract(solution, program, float(synthesis.get("degenerate_tol", 1e-6)))
            except DegenerateInterpolantError as e:
                attempt.update(status="DEGENERATE", note=str(e))
                if single_shot:
                    break
                continue
            residual = certificate_residual(cert, program, interp)
            attempt["certificate_residual"] = float(residual)
            if residual > residual_limit:
                attempt.update(status="RESIDUAL", note=f"certificate residual {residual:.3e} > {residual_limit:.1e}")
                if single_shot:
                    break
                continue

            sample_report = verify(
                interp,
                instance,
                n=cfg.samples,
                default_box=cfg.box,
                seed=cfg.seed,
                pos_tol=float(sampling.get("pos_tol", 1e-7)),
                budget=int(sampling.get("budget", 1_000_000)),
                max_violations=int(sampling.get("max_violations", 25)),
                n_jobs=n_jobs,
            )
            attempt["verdict"] = sample_report.verdict
            if not sample_report.passed:
                attempt.update(status="SAMPLING", note=f"{sample_report.n_violations} sampling violations")
                save_data_to_csv(sample_report.violations_frame(), f"{prefix}.violations.csv")
                if single_shot:
                    break
                continue

            attempt["status"] = "VERIFIED"
            save_interpolant(interp, f"{prefix}.interp")
            save_certificate(cert, f"{prefix}.cert.json")
            result = {
                "degree": degree,
                "order": order,
                "kind": interp.kind.value,
                "scale": interp.scale,
                "interpolant": interp.render(),
                "interpolant_display": interp.render(digits=8),
                "certificate_residual": float(residual),
                "program_digest": program_digest(program),
                "sample_report": sample_report.to_dict(),
                "sample_text": sample_report.render_text(),
            }
            break
        if result is not None or single_shot:
            break

    report = {
        "config": cfg.to_dict(),
        "input_digest": instance.digest,
        "solver_settings": asdict(solver_settings),
        "attempts": attempts,
        "outcome": "verified" if result else "exhausted",
        "result": result,
    }
    save_json(report, f"{prefix}.report.json")
    save_text(render_report_text(report), f"{prefix}.report.txt")
    print_attempts(attempts)

    if result:
        console.print(result["interpolant_display"])
        log(f"Interpolant written to {prefix}.interp")
    else:
        log("No verified interpolant within the requested degree and order range.")

    end_time = time()
    log(f"Time taken: {end_time - start_time:.2f} seconds")
    return 0 if result else 2


if __name__ == "__main__":
    from main import main

    sys.exit(main(["synth", *sys.argv[1:]]))
