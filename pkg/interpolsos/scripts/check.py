"""
InterpolSOS - Interpolant Check

This script checks a given interpolant against a problem: it samples both formulas
and compares the sign of h on the samples. With --cert it also recomputes the
residual of a stored certificate, and with --certify it searches for an SOS
certificate of the given interpolant itself.

Functions:
    cmd_check() - Samples, re-checks or certifies an interpolant and writes a report.

Requirements:
    - extract_utils: Interpolant and certificate files.
    - sample_utils: Sampling verification.
    - sos_utils / sdp_utils: Candidate certification.

Usage:
    python check.py problem.interp problem.txt [--cert problem.cert.json]
                    [--certify --mode poly --degree 6 --order 3 --margin 0]

    Exit status 0 when every requested check passes, 2 otherwise, 1 on errors.

Last Update:
    2026-10-16
"""

import sys
from pathlib import Path
from time import time
from typing import Optional

sys.path.append(str(Path(__file__).resolve().parent.parent))

from utils.app_utils import (
    RunConfig,
    resolve_solver_settings,
    save_data_to_csv,
    save_json,
    save_text,
    settings_section,
)
from utils.exception_handler import exception_handler
from utils.extract_utils import (
    InterpolantKind,
    certificate_residual,
    extract,
    load_certificate,
    load_interpolant,
)
from utils.formula_utils import Mode, ProblemInstance, load_problem
from utils.logger_utils import console, log
from utils.sample_utils import verify
from utils.sdp_utils import SdpStatus, solve
from utils.sos_utils import build_program, compile_to_sdp, minimal_order, program_digest


def recheck_certificate(cfg: RunConfig, instance: ProblemInstance, interp, residual_limit: float) -> dict:
    """Rebuilds the certificate's program and recomputes its residual."""
    cert = load_certificate(cfg.certificate)
    if cert.problem_digest and cert.problem_digest != instance.digest:
        log(f"Warning: {cfg.certificate} was produced for a different problem file.")
    program = build_program(
        instance, cert.degree, cert.order, cert.mode, cert.program_margin, cert.program_epsilon
    )
    residual = certificate_residual(cert, program, interp)
    log(f"Certificate residual {residual:.3e} (limit {residual_limit:.1e}).")
    return {
        "file": cfg.certificate,
        "residual": float(residual),
        "limit": residual_limit,
        "passed": bool(residual <= residual_limit),
        "digest_match": not cert.problem_digest or cert.problem_digest == instance.digest,
    }


def certify_candidate(
    cfg: RunConfig, instance: ProblemInstance, interp, solver_settings, n_jobs: int, residual_limit: float
) -> dict:
    """
    Solves the SOS program with the interpolant fixed as the template.

    On a FEASIBLE solve the certificate is extracted and its residual recomputed;
    certification passes only when the residual is within `residual_limit`.
    """
    if interp.kind == InterpolantKind.SEMIALGEBRAIC:
        mode = Mode.SEMIALGEBRAIC
    else:
        mode = Mode(cfg.mode)
    degree = cfg.degree if cfg.degree is not None else interp.degree
    order = max(cfg.order or 0, minimal_order(instance, degree, mode))
    program = build_program(instance, degree, order, mode, cfg.margin, cfg.epsilon, candidate=interp.value)
    problem = compile_to_sdp(program, n_jobs=n_jobs)
    solution = solve(problem, solver_settings)
    log(f"Certification d={degree} s={order} ({mode.value}): {solution.status.value}.")

    residual: Optional[float] = None
    if solution.status == SdpStatus.FEASIBLE:
        candidate, cert = extract(solution, program)
        residual = float(certificate_residual(cert, program, candidate))
        log(f"Certification residual {residual:.3e} (limit {residual_limit:.1e}).")
    return {
        "mode": mode.value,
        "degree": degree,
        "order": order,
        "margin": cfg.margin,
        "epsilon": cfg.epsilon,
        "sdp": problem.stats(),
        "program_digest": program_digest(program),
        "status": solution.status.value,
        "solver": solution.summary(),
        "residual": residual,
        "limit": residual_limit,
        "passed": bool(residual is not None and residual <= residual_limit),
    }


@exception_handler(default_return=1)
def cmd_check(cfg: RunConfig, settings_data: dict) -> int:
    """
    Checks an interpolant file against a problem file.

    Steps:
        1. Parse the problem and the interpolant (h, h1/h2 or g form).
        2. Sample phi and psi and compare the sign of h.
        3. With --cert, recompute the residual of the stored certificate.
        4. With --certify, solve for a certificate of the interpolant as given
           and recompute its residual.
        5. Write <prefix>.check.json and <prefix>.check.txt.

    Returns:
        int: 0 when every requested check passes, 2 otherwise.
    """
    start_time = time()
    synthesis = settings_section(settings_data, "synthesis")
    sampling = settings_section(settings_data, "sampling")
    solver_settings = resolve_solver_settings(settings_data, cfg.solver_settings)
    n_jobs = int(synthesis.get("n_jobs", 1))
    prefix = cfg.out or str(Path(cfg.interpolant).with_suffix(""))

    instance = load_problem(cfg.problem)
    interp = load_interpolant(cfg.interpolant, instance)
    log(f"Loaded {interp.kind.value} interpolant of degree {interp.degree} from {cfg.interpolant}.")

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
    if sample_report.violations:
        save_data_to_csv(sample_report.violations_frame(), f"{prefix}.violations.csv")

    residual_limit = float(synthesis.get("residual_factor", 10)) * solver_settings.feas_tol
    certificate: Optional[dict] = None
    if cfg.certificate:
        certificate = recheck_certificate(cfg, instance, interp, residual_limit)

    certification: Optional[dict] = None
    if cfg.certify:
        certification = certify_candidate(cfg, instance, interp, solver_settings, n_jobs, residual_limit)

    passed = sample_report.passed
    passed &= certificate is None or certificate["passed"]
    passed &= certification is None or certification["passed"]

    report = {
        "config": cfg.to_dict(),
        "input_digest": instance.digest,
        "interpolant": interp.render(),
        "sample_report": sample_report.to_dict(),
        "certificate": certificate,
        "certification": certification,
        "outcome": "pass" if passed else "fail",
    }
    save_json(report, f"{prefix}.check.json")

    text = [sample_report.render_text().rstrip()]
    if certificate is not None:
        text.append(f"certificate  residual {certificate['residual']:.3e}  {'PASS' if certificate['passed'] else 'FAIL'}")
    if certification is not None:
        text.append(
            f"certify      d={certification['degree']} s={certification['order']} "
            f"{certification['mode']}  {certification['status']}"
        )
        if certification["residual"] is not None:
            text.append(f"             residual {certification['residual']:.3e}  {'PASS' if certification['passed'] else 'FAIL'}")
    text.append(f"outcome      {report['outcome'].upper()}")
    save_text("\n".join(text) + "\n", f"{prefix}.check.txt")
    console.print("\n".join(text))

    end_time = time()
    log(f"Time taken: {end_time - start_time:.2f} seconds")
    return 0 if passed else 2


if __name__ == "__main__":
    from main import main

    sys.exit(main(["check", *sys.argv[1:]]))
