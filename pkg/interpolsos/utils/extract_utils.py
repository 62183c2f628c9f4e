"""
Interpolants and SOS certificates read off a feasible SDP solution.
"""

import json
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from utils.errors import (
    CertificateShapeError,
    DegenerateInterpolantError,
    NotFeasibleError,
    ParseError,
    VariableError,
)
from utils.formula_utils import MultiplierKind, ProblemInstance, X0_NAME, parse_definitions
from utils.logger_utils import log
from utils.poly_utils import (
    Monomial,
    Polynomial,
    SqrtPair,
    VarTable,
    eval_sqrtpair_many,
    homogenize,
    mono_mul,
    projective_substitute,
    render_monomial,
)
from utils.sdp_utils import SdpSolution, SdpStatus
from utils.sos_utils import SosProgram, program_layout

DISPLAY_DIGITS = 8


class InterpolantKind(str, Enum):
    POLYNOMIAL = "polynomial"
    SEMIALGEBRAIC = "semialgebraic"


@dataclass(frozen=True)
class Interpolant:
    """h over the shared variables; a SqrtPair h1 + sqrt(|x|^2+1) h2 when semialgebraic."""

    kind: InterpolantKind
    value: Union[Polynomial, SqrtPair]
    scale: float = 1.0

    @classmethod
    def of(cls, value: Union[Polynomial, SqrtPair], scale: float = 1.0) -> "Interpolant":
        if isinstance(value, SqrtPair):
            if value.is_polynomial:
                return cls(InterpolantKind.POLYNOMIAL, value.h1, scale)
            return cls(InterpolantKind.SEMIALGEBRAIC, value, scale)
        return cls(InterpolantKind.POLYNOMIAL, value, scale)

    @property
    def vartable(self) -> VarTable:
        return self.value.vartable

    @property
    def degree(self) -> int:
        if self.kind == InterpolantKind.SEMIALGEBRAIC:
            return int(max(self.value.h1.degree, self.value.h2.degree, 0))
        return int(max(self.value.degree, 0))

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        if self.kind == InterpolantKind.SEMIALGEBRAIC:
            return eval_sqrtpair_many(self.value, points)
        return self.value.evaluate_many(points)

    def evaluate(self, point: Sequence[float]) -> float:
        return float(self.evaluate_many(np.asarray([point], dtype=float))[0])

    def polynomials(self) -> Dict[str, Polynomial]:
        if self.kind == InterpolantKind.SEMIALGEBRAIC:
            return {"h1": self.value.h1, "h2": self.value.h2}
        return {"h": self.value}

    def render(self, digits: Optional[int] = None) -> str:
        header = f"# {self.kind.value} interpolant over ({', '.join(self.vartable.names)}), scale {self.scale!r}"
        body = [f"{name} := {poly.render(digits)};" for name, poly in self.polynomials().items()]
        return "\n".join([header, *body]) + "\n"

    def rescaled(self, factor: float) -> "Interpolant":
        f = Fraction(repr(float(factor)))
        if self.kind == InterpolantKind.SEMIALGEBRAIC:
            value = SqrtPair(self.value.h1 * f, self.value.h2 * f)
        else:
            value = self.value * f
        return replace(self, value=value, scale=self.scale * factor)


@dataclass(frozen=True)
class SlotCertificate:
    kind: MultiplierKind
    label: str
    basis: Tuple[str, ...]
    gram: Optional[np.ndarray] = None
    coefficients: Optional[np.ndarray] = None


@dataclass(frozen=True)
class IdentityCertificate:
    side: str
    clause_index: int
    slots: Tuple[SlotCertificate, ...]


@dataclass(frozen=True)
class Certificate:
    """
    Multipliers of every identity, already multiplied by `scale` together with the
    margin and epsilon, so they certify the stored (scaled) interpolant.
    """

    identities: Tuple[IdentityCertificate, ...]
    mode: str
    degree: int
    order: int
    margin: float
    epsilon: float
    program_margin: str
    program_epsilon: str
    scale: float
    problem_digest: str = ""

    def rescaled(self, factor: float) -> "Certificate":
        identities = tuple(
            IdentityCertificate(
                ic.side,
                ic.clause_index,
                tuple(
                    replace(
                        sc,
                        gram=None if sc.gram is None else sc.gram * factor,
                        coefficients=None if sc.coefficients is None else sc.coefficients * factor,
                    )
                    for sc in ic.slots
                ),
            )
            for ic in self.identities
        )
        return replace(
            self,
            identities=identities,
            margin=self.margin * factor,
            epsilon=self.epsilon * factor,
            scale=self.scale * factor,
        )

    def to_dict(self) -> dict:
        return {
            "problem_digest": self.problem_digest,
            "program": {
                "mode": self.mode,
                "degree": self.degree,
                "order": self.order,
                "margin": self.program_margin,
                "epsilon": self.program_epsilon,
            },
            "scale": self.scale,
            "margin": self.margin,
            "epsilon": self.epsilon,
            "identities": [
                {
                    "side": ic.side,
                    "clause": ic.clause_index,
                    "slots": [
                        {
                            "kind": sc.kind.value,
                            "label": sc.label,
                            "basis": list(sc.basis),
                            **(
                                {"gram": sc.gram.tolist()}
                                if sc.kind == MultiplierKind.SOS
                                else {"coefficients": sc.coefficients.tolist()}
                            ),
                        }
                        for sc in ic.slots
                    ],
                }
                for ic in self.identities
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Certificate":
        try:
            identities = tuple(
                IdentityCertificate(
                    ic["side"],
                    int(ic["clause"]),
                    tuple(
                        SlotCertificate(
                            kind=MultiplierKind(sc["kind"]),
                            label=sc["label"],
                            basis=tuple(sc["basis"]),
                            gram=np.asarray(sc["gram"], dtype=float) if "gram" in sc else None,
                            coefficients=np.asarray(sc["coefficients"], dtype=float) if "coefficients" in sc else None,
                        )
                        for sc in ic["slots"]
                    ),
                )
                for ic in data["identities"]
            )
            program = data["program"]
            return cls(
                identities=identities,
                mode=program["mode"],
                degree=int(program["degree"]),
                order=int(program["order"]),
                margin=float(data["margin"]),
                epsilon=float(data["epsilon"]),
                program_margin=str(program["margin"]),
                program_epsilon=str(program["epsilon"]),
                scale=float(data["scale"]),
                problem_digest=data.get("problem_digest", ""),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise CertificateShapeError(f"malformed certificate: {e}") from e


def save_certificate(cert: Certificate, path: str) -> None:
    text = json.dumps(cert.to_dict(), indent=2, sort_keys=True) + "\n"
    with open(path, "w") as f:
        f.write(text)


def load_certificate(path: str) -> Certificate:
    with open(path, "r") as f:
        return Certificate.from_dict(json.load(f))


def _basis_names(program: SosProgram, basis: Sequence[Monomial]) -> Tuple[str, ...]:
    return tuple(render_monomial(m, program.vartable) for m in basis)


def extract(
    solution: SdpSolution, program: SosProgram, degenerate_tol: float = 1e-6
) -> Tuple[Interpolant, Certificate]:
    """
    Reads the interpolant and its certificate off a FEASIBLE solution.

    Template coefficients are divided by their largest magnitude; the Gram
    blocks, free multipliers, margin and epsilon are scaled by the same factor.
    """
    if solution.status != SdpStatus.FEASIBLE:
        raise NotFeasibleError(f"cannot extract from a {solution.status.value} solution")

    tpl = program.template
    n = tpl.n_unknowns
    if tpl.candidate is not None:
        interp = Interpolant.of(tpl.candidate)
        scale = 1.0
    else:
        raw = np.asarray(solution.free[:n], dtype=float)
        peak = float(np.max(np.abs(raw))) if raw.size else 0.0
        if peak < degenerate_tol:
            raise DegenerateInterpolantError(
                f"template coefficients vanish (max |c| = {peak:.3e} < {degenerate_tol:g})"
            )
        scale = 1.0 / peak
        interp = Interpolant.of(tpl.value(raw / peak), scale)

    layout, _, _ = program_layout(program)
    identities = []
    for identity, locations in zip(program.identities, layout):
        slots = []
        for slot, loc in zip(identity.slots, locations):
            names = _basis_names(program, slot.basis)
            if slot.kind == MultiplierKind.SOS:
                gram = np.asarray(solution.gram[loc.block], dtype=float) * scale
                slots.append(SlotCertificate(slot.kind, slot.label, names, gram=gram))
            else:
                coeffs = np.asarray(solution.free[loc.free_offset : loc.free_offset + slot.size], dtype=float) * scale
                slots.append(SlotCertificate(slot.kind, slot.label, names, coefficients=coeffs))
        identities.append(IdentityCertificate(identity.side, identity.clause_index, tuple(slots)))

    cert = Certificate(
        identities=tuple(identities),
        mode=program.mode.value,
        degree=program.degree,
        order=program.order,
        margin=float(program.margin) * scale,
        epsilon=float(program.epsilon) * scale,
        program_margin=str(program.margin),
        program_epsilon=str(program.epsilon),
        scale=scale,
        problem_digest=program.problem_digest,
    )
    log(f"Extracted {interp.kind.value} interpolant of degree {interp.degree} (scale {scale:.6g}).")
    return interp, cert


def _lifted_interpolant(program: SosProgram, interp: Interpolant) -> Dict[Monomial, float]:
    table = program.vartable
    if interp.kind == InterpolantKind.SEMIALGEBRAIC:
        if program.template.w is None:
            raise CertificateShapeError("a semialgebraic interpolant needs a semialgebraic program")
        poly = interp.value.h1.rebase(table) + Polynomial.variable(table, program.template.w) * interp.value.h2.rebase(table)
    else:
        poly = interp.value.rebase(table)
    if poly.is_zero:
        return {}
    if program.x0 is not None:
        poly = homogenize(poly, program.x0, degree=program.lift_degree)
    return {m: float(c) for m, c in poly.terms.items()}


def certificate_residual(cert: Certificate, program: SosProgram, interp: Interpolant) -> float:
    """
    Largest coefficient mismatch between the two sides of any identity, relative
    to the largest coefficient magnitude on either side of that identity.
    """
    if len(cert.identities) != len(program.identities):
        raise CertificateShapeError(
            f"certificate has {len(cert.identities)} identities, program has {len(program.identities)}"
        )
    lifted = _lifted_interpolant(program, interp)
    one = program.vartable.one()
    worst = 0.0
    for ic, identity in zip(cert.identities, program.identities):
        if len(ic.slots) != len(identity.slots):
            raise CertificateShapeError(
                f"{identity.side}[{identity.clause_index}]: {len(ic.slots)} slots, expected {len(identity.slots)}"
            )
        lhs: Dict[Monomial, float] = {}
        for m, c in lifted.items():
            lhs[m] = lhs.get(m, 0.0) + identity.sign * c
        if cert.margin:
            lhs[identity.margin_monomial] = lhs.get(identity.margin_monomial, 0.0) - cert.margin
        if cert.epsilon:
            lhs[one] = lhs.get(one, 0.0) + cert.epsilon

        rhs: Dict[Monomial, float] = {}
        for sc, slot in zip(ic.slots, identity.slots):
            size = slot.size
            gen = [(gm, float(gc)) for gm, gc in slot.generator.terms.items()]
            if sc.kind != slot.kind or len(sc.basis) != size:
                raise CertificateShapeError(
                    f"{identity.side}[{identity.clause_index}] slot '{slot.label}' does not match the program"
                )
            if slot.kind == MultiplierKind.SOS:
                gram = sc.gram
                if gram is None or gram.shape != (size, size):
                    raise CertificateShapeError(f"slot '{slot.label}' needs a {size}x{size} Gram matrix")
                for a in range(size):
                    for b in range(a + 1):
                        v = gram[a, b] if a == b else gram[a, b] + gram[b, a]
                        if v == 0.0:
                            continue
                        ab = mono_mul(slot.basis[a], slot.basis[b])
                        for gm, gc in gen:
                            m = mono_mul(ab, gm)
                            rhs[m] = rhs.get(m, 0.0) + v * gc
            else:
                coeffs = sc.coefficients
                if coeffs is None or coeffs.shape != (size,):
                    raise CertificateShapeError(f"slot '{slot.label}' needs {size} coefficients")
                for k, bm in enumerate(slot.basis):
                    if coeffs[k] == 0.0:
                        continue
                    for gm, gc in gen:
                        m = mono_mul(bm, gm)
                        rhs[m] = rhs.get(m, 0.0) + coeffs[k] * gc

        monos = set(lhs) | set(rhs)
        peak = max((max(abs(lhs.get(m, 0.0)), abs(rhs.get(m, 0.0))) for m in monos), default=0.0)
        if peak == 0.0:
            continue
        mismatch = max(abs(lhs.get(m, 0.0) - rhs.get(m, 0.0)) for m in monos)
        worst = max(worst, mismatch / peak)
    return float(worst)


def parse_interpolant(text: str, instance: ProblemInstance) -> Interpolant:
    """
    Reads an interpolant file: `h := ...;`, or `h1 := ...; h2 := ...;`, or
    `g := ...;` with g a polynomial in x0 and the shared variables.
    """
    defs = parse_definitions(text, instance.vartable)
    allowed = set(instance.shared)
    for name, poly in defs.items():
        ok = allowed | ({instance.x0} if name == "g" else set())
        stray = [instance.vartable.names[v] for v in poly.variables() if v not in ok]
        if stray:
            raise VariableError(f"'{name}' uses non-shared variable(s) {', '.join(stray)}")
    shared_table = instance.shared_table
    if set(defs) == {"h"}:
        return Interpolant.of(defs["h"].rebase(shared_table))
    if set(defs) == {"h1", "h2"}:
        return Interpolant.of(SqrtPair(defs["h1"].rebase(shared_table), defs["h2"].rebase(shared_table)))
    if set(defs) == {"g"}:
        g_table = VarTable((X0_NAME, *shared_table.names))
        g = defs["g"].rebase(g_table)
        return Interpolant.of(projective_substitute(g, g_table.index(X0_NAME), shared_table))
    raise ParseError(f"expected h, h1 and h2, or g; found {', '.join(sorted(defs)) or 'nothing'}")


def load_interpolant(path: str, instance: ProblemInstance) -> Interpolant:
    with open(path, "r") as f:
        return parse_interpolant(f.read(), instance)


def save_interpolant(interp: Interpolant, path: str) -> None:
    with open(path, "w") as f:
        f.write(interp.render())
