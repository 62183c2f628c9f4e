"""
SOS programs for interpolant synthesis and their compilation to SDP.

For every clause of phi (sign +1) and of psi (sign -1) the program asks for

    sign * l~ - margin * x0^D + eps = s0 + sum_i s_i * g_i

where l~ is the homogenized template (unknown coefficients, or a fixed
candidate), the g_i are the clause atoms homogenized and extended with the
auxiliary generators of the mode, SOS-tagged multipliers are Gram forms and
FREE-tagged multipliers are plain polynomials. Archimedean mode uses the
original atoms, no x0, and the constant margin 1.
"""

import hashlib
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Dict, List, Optional, Sequence, Tuple, Union

from joblib import Parallel, delayed

from utils.errors import DegreeBoundError, ModeError
from utils.formula_utils import (
    PHI,
    SIDES,
    Atom,
    Clause,
    ExtendedClause,
    Mode,
    MultiplierKind,
    ProblemInstance,
    clause_at_infinity,
    clause_extension,
)
from utils.logger_utils import log
from utils.poly_utils import (
    Monomial,
    Polynomial,
    SqrtPair,
    VarId,
    VarTable,
    basis_key,
    homogenize,
    mono_mul,
    render_monomial,
)
from utils.sdp_utils import SdpEquality, SdpProblem

Candidate = Union[Polynomial, SqrtPair]


def monomial_basis(vartable: VarTable, variables: Sequence[VarId], maxdeg: int) -> Tuple[Monomial, ...]:
    """All monomials of degree <= maxdeg in `variables`: 1, x1, x2, x1^2, x1*x2, x2^2, ..."""
    out = []
    ids = sorted(variables)
    for deg in range(maxdeg + 1):
        for combo in combinations_with_replacement(ids, deg):
            exps = [0] * len(vartable)
            for v in combo:
                exps[v] += 1
            out.append(tuple(exps))
    return tuple(out)


@dataclass(frozen=True)
class Template:
    vartable: VarTable
    shared: Tuple[VarId, ...]
    degree: int
    monomials: Tuple[Monomial, ...]
    semialgebraic: bool = False
    w: Optional[VarId] = None
    candidate: Optional[Candidate] = None

    @property
    def n_unknowns(self) -> int:
        if self.candidate is not None:
            return 0
        return len(self.monomials) * (2 if self.semialgebraic else 1)

    def lifted(
        self, x0: Optional[VarId], lift_degree: int
    ) -> Tuple[Dict[Monomial, Dict[int, Fraction]], Dict[Monomial, Fraction]]:
        """
        The template as it enters an identity: a linear part (monomial -> unknown
        index -> coefficient) and a constant part (the candidate, if fixed).
        """
        linear: Dict[Monomial, Dict[int, Fraction]] = {}
        constant: Dict[Monomial, Fraction] = {}
        if self.candidate is not None:
            poly = self.candidate_polynomial()
            if not poly.is_zero:
                if x0 is not None:
                    poly = homogenize(poly, x0, degree=lift_degree)
                constant = dict(poly.terms)
            return linear, constant

        count = len(self.monomials)
        for k, alpha in enumerate(self.monomials):
            exps = list(alpha)
            if x0 is not None:
                exps[x0] = lift_degree - sum(alpha)
            linear[tuple(exps)] = {k: Fraction(1)}
            if self.semialgebraic:
                exps = list(alpha)
                exps[self.w] += 1
                if x0 is not None:
                    exps[x0] = lift_degree - sum(alpha) - 1
                linear[tuple(exps)] = {count + k: Fraction(1)}
        return linear, constant

    def candidate_polynomial(self) -> Polynomial:
        """The fixed candidate as one polynomial over the program table (h1 + w*h2 when semialgebraic)."""
        cand = self.candidate
        if isinstance(cand, SqrtPair):
            return cand.h1.rebase(self.vartable) + Polynomial.variable(self.vartable, self.w) * cand.h2.rebase(self.vartable)
        return cand.rebase(self.vartable)

    def value(self, values: Sequence[float]) -> Candidate:
        """Builds h (or the pair h1, h2) over the shared variables from unknown values."""
        shared_table = self.vartable.subtable(self.shared)
        count = len(self.monomials)

        def poly(offset):
            terms = {}
            for k, alpha in enumerate(self.monomials):
                v = values[offset + k]
                c = v if isinstance(v, Fraction) else Fraction(repr(float(v)))
                terms[tuple(alpha[i] for i in self.shared)] = c
            return Polynomial(shared_table, terms)

        if self.semialgebraic:
            return SqrtPair(poly(0), poly(count))
        return poly(0)


@dataclass(frozen=True)
class MultiplierSlot:
    kind: MultiplierKind
    generator: Polynomial
    label: str
    basis: Tuple[Monomial, ...]

    @property
    def size(self) -> int:
        return len(self.basis)


@dataclass(frozen=True)
class SosIdentity:
    side: str
    clause_index: int
    sign: int
    source: Optional[Clause]
    extended: ExtendedClause
    slots: Tuple[MultiplierSlot, ...]
    margin: Fraction
    margin_monomial: Monomial
    epsilon: Fraction


@dataclass(frozen=True)
class SosProgram:
    vartable: VarTable
    mode: Mode
    degree: int
    order: int
    lift_degree: int
    x0: Optional[VarId]
    template: Template
    identities: Tuple[SosIdentity, ...]
    margin: Fraction
    epsilon: Fraction
    problem_digest: str = ""


def _slots_for(extended: ExtendedClause, vartable, variables, order) -> Tuple[MultiplierSlot, ...]:
    one = Polynomial.constant(vartable, 1)
    slots = [MultiplierSlot(MultiplierKind.SOS, one, "sigma0", monomial_basis(vartable, variables, order))]
    for gen in extended.generators:
        k = gen.poly.degree
        if k > 2 * order:
            raise DegreeBoundError(
                f"generator '{gen.label}' has degree {k} > 2s = {2 * order}; raise the order"
            )
        maxdeg = (2 * order - k) // 2 if gen.kind == MultiplierKind.SOS else 2 * order - k
        slots.append(MultiplierSlot(gen.kind, gen.poly, gen.label, monomial_basis(vartable, variables, maxdeg)))
    return tuple(slots)


def minimal_order(instance: ProblemInstance, degree: int, mode: Union[Mode, str]) -> int:
    """
    Smallest s with 2s >= the lifted template degree and every generator degree.

    Args:
        instance (ProblemInstance): The parsed problem.
        degree (int): Template degree d.
        mode (Mode | str): Program flavour; semialgebraic mode lifts the template to d + 1.

    Returns:
        int: The order floor, at least 1.
    """
    mode = Mode(mode)
    need = degree + 1 if mode == Mode.SEMIALGEBRAIC else degree
    for side in SIDES:
        for clause in instance.formula(side).clauses:
            for atom in clause.atoms:
                need = max(need, atom.poly.degree)
    if mode != Mode.ARCHIMEDEAN:
        need = max(need, 2)
    return max(1, (need + 1) // 2)


def build_program(
    instance: ProblemInstance,
    degree: int,
    order: int,
    mode: Union[Mode, str] = Mode.POLYNOMIAL,
    margin: Union[int, Fraction, str] = 1,
    epsilon: Union[int, Fraction, str] = 0,
    candidate: Optional[Candidate] = None,
) -> SosProgram:
    """
    Builds the SOS program of a problem for template degree `degree` and order `order` (2s bounds
    every multiplier product).

    With `candidate` the template is the given polynomial (or pair h1, h2 in semialgebraic
    mode) instead of unknown coefficients.

    Args:
        instance (ProblemInstance): The parsed problem.
        degree (int): Template degree d.
        order (int): Relaxation order s.
        mode (Mode | str): "poly", "semialg" or "archimedean".
        margin (int | Fraction | str): Margin mu; each identity carries sign * h - mu * x0^D.
        epsilon (int | Fraction | str): Constant added to the left-hand side of each identity.
        candidate (Polynomial | SqrtPair, optional): Fixed interpolant to certify.

    Returns:
        SosProgram: One identity per clause of phi and psi.

    Raises:
        DegreeBoundError: If d < 0 or a product exceeds degree 2s.
        ModeError: If a semialgebraic candidate is given outside semialgebraic mode.
    """
    mode = Mode(mode)
    margin = Fraction(margin)
    epsilon = Fraction(epsilon)
    if degree < 0:
        raise DegreeBoundError(f"template degree must be non-negative, got {degree}")
    if isinstance(candidate, SqrtPair) and mode != Mode.SEMIALGEBRAIC:
        raise ModeError(f"a semialgebraic candidate cannot be used in {mode.value} mode")

    table = instance.vartable
    semialg = mode == Mode.SEMIALGEBRAIC
    homogeneous = mode != Mode.ARCHIMEDEAN
    lift_degree = degree + 1 if semialg else degree
    if 2 * order < lift_degree:
        raise DegreeBoundError(
            f"template degree {lift_degree} exceeds 2s = {2 * order}; raise the order"
        )
    if candidate is not None:
        cand_degree = max(
            p.degree for p in ((candidate.h1, candidate.h2) if isinstance(candidate, SqrtPair) else (candidate,))
        )
        if cand_degree > degree:
            raise DegreeBoundError(f"candidate degree {cand_degree} exceeds the template degree {degree}")

    x0 = instance.x0 if homogeneous else None
    w = instance.w if semialg else None
    template = Template(
        vartable=table,
        shared=instance.shared,
        degree=degree,
        monomials=monomial_basis(table, instance.shared, degree),
        semialgebraic=semialg,
        w=w,
        candidate=candidate,
    )

    if homogeneous:
        margin_monomial = list(table.one())
        margin_monomial[x0] = lift_degree
        margin_monomial = tuple(margin_monomial)
        margin_value = margin
    else:
        margin_monomial = table.one()
        margin_value = Fraction(1)

    identities = []
    for side in SIDES:
        sign = 1 if side == PHI else -1
        private = instance.private(side)
        variables = list(instance.shared) + list(private)
        if homogeneous:
            variables = [x0] + variables + ([w] if semialg else [])
        for k, clause in enumerate(instance.formula(side).clauses):
            lifted = clause if not homogeneous else Clause(
                tuple(Atom(homogenize(a.poly, x0)) for a in clause.atoms)
            )
            extended = clause_extension(lifted, mode, x0, instance.shared, private, w)
            identities.append(
                SosIdentity(
                    side=side,
                    clause_index=k,
                    sign=sign,
                    source=clause,
                    extended=extended,
                    slots=_slots_for(extended, table, variables, order),
                    margin=margin_value,
                    margin_monomial=margin_monomial,
                    epsilon=epsilon,
                )
            )

    program = SosProgram(
        vartable=table,
        mode=mode,
        degree=degree,
        order=order,
        lift_degree=lift_degree,
        x0=x0,
        template=template,
        identities=tuple(identities),
        margin=margin_value,
        epsilon=epsilon,
        problem_digest=instance.digest,
    )
    log(
        f"Built {mode.value} program d={degree} s={order}: {len(identities)} identities, "
        f"{template.n_unknowns} template unknowns."
    )
    return program


def build_sos_check(p: Polynomial, order: int) -> SosProgram:
    """The program p = s0 with s0 a sum of squares of degree <= 2*order."""
    if 2 * order < p.degree:
        raise DegreeBoundError(f"polynomial degree {p.degree} exceeds 2s = {2 * order}")
    table = p.vartable
    variables = tuple(range(len(table)))
    template = Template(table, variables, max(int(p.degree), 0), (), candidate=p)
    extended = ExtendedClause((), 0)
    identity = SosIdentity(
        side=PHI,
        clause_index=0,
        sign=1,
        source=None,
        extended=extended,
        slots=_slots_for(extended, table, variables, order),
        margin=Fraction(0),
        margin_monomial=table.one(),
        epsilon=Fraction(0),
    )
    return SosProgram(
        vartable=table,
        mode=Mode.ARCHIMEDEAN,
        degree=template.degree,
        order=order,
        lift_degree=template.degree,
        x0=None,
        template=template,
        identities=(identity,),
        margin=Fraction(0),
        epsilon=Fraction(0),
    )


@dataclass(frozen=True)
class SlotLocation:
    block: Optional[int]
    free_offset: Optional[int]


def program_layout(program: SosProgram) -> Tuple[List[List[SlotLocation]], Tuple[int, ...], int]:
    """
    Where every multiplier lives in the SDP: SOS slots get consecutive blocks,
    FREE slots consecutive ranges of free scalars after the template unknowns.
    """
    layout, dims = [], []
    nfree = program.template.n_unknowns
    for identity in program.identities:
        locations = []
        for slot in identity.slots:
            if slot.kind == MultiplierKind.SOS:
                locations.append(SlotLocation(len(dims), None))
                dims.append(slot.size)
            else:
                locations.append(SlotLocation(None, nfree))
                nfree += slot.size
        layout.append(locations)
    return layout, tuple(dims), nfree


def _identity_equations(program: SosProgram, index: int, locations: List[SlotLocation]) -> List[SdpEquality]:
    identity = program.identities[index]
    gram: Dict[Monomial, Dict[Tuple[int, int, int], Fraction]] = defaultdict(dict)
    free: Dict[Monomial, Dict[int, Fraction]] = defaultdict(dict)
    rhs: Dict[Monomial, Fraction] = defaultdict(Fraction)

    for slot, loc in zip(identity.slots, locations):
        gen_terms = list(slot.generator.terms.items())
        basis = slot.basis
        if slot.kind == MultiplierKind.SOS:
            for a in range(len(basis)):
                for b in range(a + 1):
                    ab = mono_mul(basis[a], basis[b])
                    factor = 1 if a == b else 2
                    key = (loc.block, a, b)
                    for gm, gc in gen_terms:
                        row = gram[mono_mul(ab, gm)]
                        row[key] = row.get(key, Fraction(0)) + factor * gc
        else:
            for k, bm in enumerate(basis):
                idx = loc.free_offset + k
                for gm, gc in gen_terms:
                    row = free[mono_mul(bm, gm)]
                    row[idx] = row.get(idx, Fraction(0)) + gc

    linear, constant = program.template.lifted(program.x0, program.lift_degree)
    for mono, coeffs in linear.items():
        row = free[mono]
        for k, c in coeffs.items():
            row[k] = row.get(k, Fraction(0)) - identity.sign * c
    for mono, c in constant.items():
        rhs[mono] += identity.sign * c
    if identity.margin:
        rhs[identity.margin_monomial] -= identity.margin
    if identity.epsilon:
        rhs[program.vartable.one()] += identity.epsilon

    equalities = []
    for mono in sorted(set(gram) | set(free) | set(rhs), key=basis_key):
        equalities.append(
            SdpEquality(
                block_entries=tuple(
                    (blk, a, b, float(v)) for (blk, a, b), v in sorted(gram[mono].items()) if v
                ) if mono in gram else (),
                free_entries=tuple(
                    (k, float(v)) for k, v in sorted(free[mono].items()) if v
                ) if mono in free else (),
                rhs=float(rhs[mono]) if mono in rhs else 0.0,
            )
        )
    return equalities


def compile_to_sdp(program: SosProgram, n_jobs: int = 1) -> SdpProblem:
    """
    One equality per monomial of every identity, coefficients computed exactly and
    converted to floats at the end. Identities may be expanded in parallel; the
    result does not depend on n_jobs.

    Args:
        program (SosProgram): The program to compile.
        n_jobs (int): joblib workers for the per-identity expansion.

    Returns:
        SdpProblem: PSD blocks for the SOS slots, free scalars for the template and
        the free slots, one equality per monomial.
    """
    layout, dims, nfree = program_layout(program)
    per_identity = Parallel(n_jobs=n_jobs)(
        delayed(_identity_equations)(program, i, layout[i]) for i in range(len(program.identities))
    )
    equalities = tuple(eq for rows in per_identity for eq in rows)
    problem = SdpProblem(block_dims=dims, nfree=nfree, equalities=equalities)
    stats = problem.stats()
    log(
        f"Compiled SDP: {stats['blocks']} blocks, PSD dimension {stats['psd_dim']}, "
        f"{stats['equalities']} equalities, {stats['free']} free scalars."
    )
    return problem


def dump_program(program: SosProgram) -> str:
    """Human-readable listing of a program: one identity per paragraph, canonical polynomials."""
    table = program.vartable
    lines = [
        f"mode {program.mode.value}  degree {program.degree}  order {program.order}  "
        f"lifted degree {program.lift_degree}  margin {program.margin}  epsilon {program.epsilon}",
    ]
    tpl = program.template
    if tpl.candidate is not None:
        lines.append(f"template: fixed candidate {tpl.candidate_polynomial().render()}")
    else:
        shared = ", ".join(table.names[v] for v in tpl.shared)
        lines.append(f"template: {tpl.n_unknowns} unknowns over ({shared}), {len(tpl.monomials)} monomials")
    for identity in program.identities:
        sign = "+" if identity.sign > 0 else "-"
        margin = render_monomial(identity.margin_monomial, table)
        lines.append("")
        lines.append(
            f"{identity.side}[{identity.clause_index}]: {sign}l~ - {identity.margin}*{margin} + {identity.epsilon} ="
        )
        for slot in identity.slots:
            lines.append(
                f"  {slot.kind.value:4s} {slot.label:8s} basis {slot.size:4d}  generator {slot.generator.render()}"
            )
        if identity.source is not None:
            at_inf = " & ".join(f"{p.render()} >= 0" for p in clause_at_infinity(identity.source))
            lines.append(f"  at infinity: {at_inf}")
    return "\n".join(lines) + "\n"


def program_digest(program: SosProgram) -> str:
    return hashlib.sha256(dump_program(program).encode("utf-8")).hexdigest()
