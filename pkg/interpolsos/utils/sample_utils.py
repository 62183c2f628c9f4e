"""
Sampling-based verification of interpolants.

Each clause of phi and psi is sampled by rejection inside a box (explicit
univariate linear bounds of the clause tighten the default box). Thin sets that
rejection barely reaches are filled by jittering the accepted points. The
interpolant is evaluated at the projection of every sample onto the shared
variables.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from utils.errors import NoSamplesError
from utils.formula_utils import PHI, PSI, SIDES, Clause, ProblemInstance
from utils.logger_utils import log
from utils.poly_utils import VarId

Box = Dict[VarId, Tuple[float, float]]

DEFAULT_BOX = (-10.0, 10.0)
DEFAULT_BUDGET = 1_000_000


@dataclass
class ClauseSample:
    points: np.ndarray
    draws: int
    accepted: int
    jittered: int = 0

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.draws if self.draws else 0.0


def clause_box(
    clause: Clause,
    variables: Sequence[VarId],
    default: Tuple[float, float] = DEFAULT_BOX,
    overrides: Optional[Box] = None,
) -> Box:
    """
    The sampling box of a clause: `overrides` or `default` per variable, intersected
    with the bounds implied by univariate linear atoms a*v + b >= 0.
    """
    overrides = overrides or {}
    box = {v: tuple(map(float, overrides.get(v, default))) for v in variables}
    for atom in clause.atoms:
        used = atom.poly.variables()
        if len(used) != 1 or atom.poly.degree != 1:
            continue
        v = used[0]
        if v not in box:
            continue
        unit = [0] * len(atom.poly.vartable)
        unit[v] = 1
        a = atom.poly.coefficient(tuple(unit))
        b = atom.poly.coefficient(atom.poly.vartable.one())
        bound = float(-b / a)
        lo, hi = box[v]
        box[v] = (max(lo, bound), hi) if a > 0 else (lo, min(hi, bound))
    return box


def _satisfies(clause: Clause, points: np.ndarray) -> np.ndarray:
    mask = np.ones(points.shape[0], dtype=bool)
    for atom in clause.atoms:
        mask &= atom.poly.evaluate_many(points) >= 0.0
    return mask


def sample_clause(
    clause: Clause,
    n: int,
    box: Box,
    seed,
    budget: int = DEFAULT_BUDGET,
) -> ClauseSample:
    """
    Draws up to n points of the clause's set inside `box` (coordinates not in the
    box stay 0). Raises NoSamplesError when nothing is accepted within `budget` draws.
    """
    rng = np.random.default_rng(seed)
    nvars = len(clause.vartable)
    ids = sorted(box)
    lo = np.array([box[v][0] for v in ids], dtype=float)
    hi = np.array([box[v][1] for v in ids], dtype=float)
    if np.any(lo > hi):
        raise NoSamplesError(f"empty sampling box {box}")
    if any(atom.poly.degree <= 0 and atom.poly.coefficient(clause.vartable.one()) < 0 for atom in clause.atoms):
        raise NoSamplesError("clause has a negative constant atom")

    chunks: List[np.ndarray] = []
    accepted = draws = 0
    batch = max(1_000, min(100_000, 4 * n))
    while accepted < n and draws < budget:
        m = min(batch, budget - draws)
        pts = np.zeros((m, nvars))
        pts[:, ids] = rng.uniform(lo, hi, size=(m, len(ids)))
        good = pts[_satisfies(clause, pts)]
        chunks.append(good)
        accepted += good.shape[0]
        draws += m
    if accepted == 0:
        raise NoSamplesError(f"no samples found after {draws} draws")

    points = np.concatenate(chunks)[:n]
    sample = ClauseSample(points, draws, accepted)
    if points.shape[0] < n:
        sample.points, sample.jittered = _jitter_fill(clause, points, n, ids, lo, hi, rng, budget)
    return sample


def _jitter_fill(clause, seeds, n, ids, lo, hi, rng, budget):
    """Grows a small accepted set by Gaussian steps around accepted points, halving the step on failure."""
    pool = [seeds]
    have = seeds.shape[0]
    step = 0.01 * (hi - lo)
    tries = 0
    while have < n and tries < budget:
        base = np.concatenate(pool)
        m = min(10_000, 4 * (n - have))
        picks = base[rng.integers(0, base.shape[0], size=m)]
        moved = picks.copy()
        moved[:, ids] = np.clip(picks[:, ids] + rng.normal(size=(m, len(ids))) * step, lo, hi)
        good = moved[_satisfies(clause, moved)]
        if good.shape[0] == 0:
            step = step / 2.0
        pool.append(good)
        have += good.shape[0]
        tries += m
    points = np.concatenate(pool)[:n]
    return points, points.shape[0] - seeds.shape[0]


@dataclass
class SampleReport:
    n_phi: int
    n_psi: int
    min_on_phi: float
    max_on_psi: float
    pos_tol: float
    n_violations: int
    violations: List[dict] = field(default_factory=list)
    boxes: Dict[str, Dict[str, List[float]]] = field(default_factory=dict)
    acceptance: Dict[str, float] = field(default_factory=dict)
    empty_clauses: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.min_on_phi > self.pos_tol and self.max_on_psi < -self.pos_tol)

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "n_phi": self.n_phi,
            "n_psi": self.n_psi,
            "min_on_phi": _json_float(self.min_on_phi),
            "max_on_psi": _json_float(self.max_on_psi),
            "pos_tol": float(self.pos_tol),
            "n_violations": int(self.n_violations),
            "violations": self.violations,
            "boxes": self.boxes,
            "acceptance": self.acceptance,
            "empty_clauses": self.empty_clauses,
        }

    def violations_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.violations)

    def render_text(self) -> str:
        lines = [
            f"verdict      {self.verdict}",
            f"phi samples  {self.n_phi}   min h = {self.min_on_phi:.8g}",
            f"psi samples  {self.n_psi}   max h = {self.max_on_psi:.8g}",
            f"tolerance    {self.pos_tol:g}",
            f"violations   {self.n_violations}",
        ]
        for key in sorted(self.acceptance):
            lines.append(f"  {key:10s} acceptance {self.acceptance[key]:.4f}")
        for key in self.empty_clauses:
            lines.append(f"  {key:10s} no samples found")
        return "\n".join(lines) + "\n"


def _json_float(x: float):
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(x)


def _sample_one(clause, n, box, seed, budget):
    try:
        return sample_clause(clause, n, box, seed, budget)
    except NoSamplesError:
        return None


def verify(
    interp,
    instance: ProblemInstance,
    n: int = 10_000,
    default_box: Tuple[float, float] = DEFAULT_BOX,
    seed: int = 0,
    pos_tol: float = 1e-7,
    box_overrides: Optional[Box] = None,
    budget: int = DEFAULT_BUDGET,
    max_violations: int = 25,
    n_jobs: int = 1,
) -> SampleReport:
    """
    Samples every clause of phi and psi (n points each) and checks h > pos_tol on
    phi samples and h < -pos_tol on psi samples. A clause without samples is
    reported, not fatal; a formula without any samples passes vacuously.
    """
    jobs = []
    for s, side in enumerate(SIDES):
        variables = instance.side_variables(side)
        for k, clause in enumerate(instance.formula(side).clauses):
            box = clause_box(clause, variables, default_box, box_overrides)
            seq = np.random.SeedSequence([seed, s, k])
            jobs.append((side, k, box, clause, seq))

    samples = Parallel(n_jobs=n_jobs)(
        delayed(_sample_one)(clause, n, box, seq, budget) for _, _, box, clause, seq in jobs
    )

    shared = list(instance.shared)
    names = instance.vartable.names
    extremes = {PHI: np.inf, PSI: -np.inf}
    counts = {PHI: 0, PSI: 0}
    violations: List[dict] = []
    n_violations = 0
    boxes: Dict[str, Dict[str, List[float]]] = {}
    acceptance: Dict[str, float] = {}
    empty: List[str] = []

    for (side, k, box, clause, _), sample in zip(jobs, samples):
        key = f"{side}[{k}]"
        boxes[key] = {names[v]: [lo, hi] for v, (lo, hi) in sorted(box.items())}
        if sample is None:
            empty.append(key)
            log(f"{key}: no samples found.")
            continue
        acceptance[key] = float(sample.acceptance_rate)
        values = interp.evaluate_many(sample.points[:, shared])
        counts[side] += int(values.size)
        if side == PHI:
            extremes[PHI] = min(extremes[PHI], float(values.min()))
            bad = np.flatnonzero(values <= pos_tol)
        else:
            extremes[PSI] = max(extremes[PSI], float(values.max()))
            bad = np.flatnonzero(values >= -pos_tol)
        n_violations += int(bad.size)
        for i in bad[: max(0, max_violations - len(violations))]:
            row = {"clause": key, "h": float(values[i])}
            row.update({names[v]: float(sample.points[i, v]) for v in instance.side_variables(side)})
            violations.append(row)

    report = SampleReport(
        n_phi=counts[PHI],
        n_psi=counts[PSI],
        min_on_phi=extremes[PHI],
        max_on_psi=extremes[PSI],
        pos_tol=pos_tol,
        n_violations=n_violations,
        violations=violations,
        boxes=boxes,
        acceptance=acceptance,
        empty_clauses=empty,
    )
    log(
        f"Sampling verdict {report.verdict}: min on phi {report.min_on_phi:.6g}, "
        f"max on psi {report.max_on_psi:.6g}, {n_violations} violations."
    )
    return report


def parse_box(value: str) -> Tuple[float, float]:
    text = value.strip().strip("[]()")
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != 2:
        raise ValueError(f"box must be 'LO,HI', got '{value}'")
    lo, hi = (float(Fraction(p.strip())) for p in parts)
    if not lo < hi:
        raise ValueError(f"empty box [{lo}, {hi}]")
    return lo, hi
