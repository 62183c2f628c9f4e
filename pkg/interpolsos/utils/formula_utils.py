"""
Problem files: parsing, disjunctive normal form and clause extension.

A problem file declares the variable partition and the two formulas:

    # comments run to the end of the line
    shared x y z;
    phi_only u;
    psi_only r R;
    phi := 1 + 0.1*z^4 - x^4 - y^4 >= 0 & 10*z^4 - x^4 - y^4 >= 0;
    psi := 4*R^2*(x^2+y^2) - (x^2+y^2+z^2+R^2-r^2)^2 >= 0
           & 4 <= R <= 6 & 0.5 <= r <= 1;

Polynomials use `+ - * / ^` with explicit `*` and division by constants only.
Comparisons may be chained; `=` yields two atoms. Strict inequalities are
rejected. Formulas combine comparisons with `&`, `|` and parentheses.
"""

import hashlib
import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple, Union

from utils.errors import ParseError, PartitionError
from utils.poly_utils import Polynomial, VarId, VarTable, top_part

PHI = "phi"
PSI = "psi"
SIDES = (PHI, PSI)

X0_NAME = "x0"
W_NAME = "w"
RESERVED_NAMES = (X0_NAME, W_NAME)

_KEYWORDS = ("shared", "phi_only", "psi_only")
_RELOPS = (">=", "<=", "=")

_TOKEN_RE = re.compile(
    r"""
    (?P<nl>\n)
    | (?P<ws>[ \t\r]+)
    | (?P<comment>\#[^\n]*)
    | (?P<number>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)
    | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<op>:=|>=|<=|==|=|>|<|\+|-|\*|/|\^|\(|\)|&|\||;|,|≥|≤|∧|∨)
    """,
    re.VERBOSE,
)

_UNICODE_OPS = {"≥": ">=", "≤": "<=", "∧": "&", "∨": "|", "==": "="}


class Mode(str, Enum):
    POLYNOMIAL = "poly"
    SEMIALGEBRAIC = "semialg"
    ARCHIMEDEAN = "archimedean"


class MultiplierKind(str, Enum):
    SOS = "SOS"
    FREE = "FREE"


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> List[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if not match:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = match.lastgroup
        value = match.group()
        if kind == "nl":
            line += 1
            line_start = match.end()
        elif kind not in ("ws", "comment"):
            value = _UNICODE_OPS.get(value, value)
            tokens.append(Token(kind, value, line, pos - line_start + 1))
        pos = match.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


@dataclass(frozen=True)
class Atom:
    """The constraint poly >= 0."""

    poly: Polynomial

    def holds(self, point: Sequence[float], tol: float = 0.0) -> bool:
        return self.poly.evaluate(point) >= -tol


@dataclass(frozen=True)
class Clause:
    atoms: Tuple[Atom, ...]

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        if not self.atoms:
            raise ValueError("a clause needs at least one atom")

    @property
    def vartable(self) -> VarTable:
        return self.atoms[0].poly.vartable

    def variables(self) -> Tuple[VarId, ...]:
        used = set()
        for atom in self.atoms:
            used.update(atom.poly.variables())
        return tuple(sorted(used))

    def holds(self, point: Sequence[float], tol: float = 0.0) -> bool:
        return all(atom.holds(point, tol) for atom in self.atoms)


@dataclass(frozen=True)
class Formula:
    """A disjunction of clauses."""

    clauses: Tuple[Clause, ...]

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(self.clauses))
        if not self.clauses:
            raise ValueError("a formula needs at least one clause")

    def variables(self) -> Tuple[VarId, ...]:
        used = set()
        for clause in self.clauses:
            used.update(clause.variables())
        return tuple(sorted(used))

    def holds(self, point: Sequence[float], tol: float = 0.0) -> bool:
        return any(clause.holds(point, tol) for clause in self.clauses)


# Boolean syntax tree, flattened to DNF right after parsing.


@dataclass(frozen=True)
class BoolAtom:
    atom: Atom

    def holds(self, point, tol=0.0):
        return self.atom.holds(point, tol)


@dataclass(frozen=True)
class BoolAnd:
    parts: Tuple[object, ...]

    def holds(self, point, tol=0.0):
        return all(p.holds(point, tol) for p in self.parts)


@dataclass(frozen=True)
class BoolOr:
    parts: Tuple[object, ...]

    def holds(self, point, tol=0.0):
        return any(p.holds(point, tol) for p in self.parts)


BoolNode = Union[BoolAtom, BoolAnd, BoolOr]


def to_dnf(node: BoolNode) -> Formula:
    def clauses_of(n) -> List[Tuple[Atom, ...]]:
        if isinstance(n, BoolAtom):
            return [(n.atom,)]
        if isinstance(n, BoolOr):
            out = []
            for part in n.parts:
                out.extend(clauses_of(part))
            return out
        out = [()]
        for part in n.parts:
            out = [left + right for left, right in product(out, clauses_of(part))]
        return out

    return Formula(tuple(Clause(atoms) for atoms in clauses_of(node)))


class _Parser:
    def __init__(self, tokens: List[Token], vartable: Optional[VarTable]):
        self.tokens = tokens
        self.pos = 0
        self.vartable = vartable

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, *texts: str) -> bool:
        tok = self.peek()
        return tok.kind == "op" and tok.text in texts

    def error(self, message: str, tok: Optional[Token] = None) -> ParseError:
        tok = tok or self.peek()
        if tok.kind == "op" and tok.text in (">", "<"):
            message = "strict inequalities are not supported"
        return ParseError(message, tok.line, tok.column)

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.kind == "op" and tok.text == text:
            return self.advance()
        found = tok.text or "end of input"
        return self._raise(f"expected '{text}', found '{found}'", tok)

    def _raise(self, message, tok=None):
        raise self.error(message, tok)

    def expect_end(self) -> None:
        if self.peek().kind != "eof":
            self._raise(f"unexpected '{self.peek().text}'")

    # boolean layer

    def bool_expr(self) -> BoolNode:
        parts = [self.bool_term()]
        while self.at("|"):
            self.advance()
            parts.append(self.bool_term())
        return parts[0] if len(parts) == 1 else BoolOr(tuple(parts))

    def bool_term(self) -> BoolNode:
        parts = [self.bool_factor()]
        while self.at("&"):
            self.advance()
            parts.append(self.bool_factor())
        return parts[0] if len(parts) == 1 else BoolAnd(tuple(parts))

    def bool_factor(self) -> BoolNode:
        if self.at("("):
            start = self.pos
            try:
                self.advance()
                node = self.bool_expr()
                self.expect(")")
                if not self.at(*_RELOPS, "+", "-", "*", "/", "^", ">", "<"):
                    return node
            except ParseError:
                pass
            self.pos = start
        return self.comparison()

    def comparison(self) -> BoolNode:
        sides = [self.sum_expr()]
        ops = []
        while self.at(*_RELOPS, ">", "<"):
            tok = self.advance()
            if tok.text in (">", "<"):
                self._raise("strict comparison", tok)
            ops.append(tok.text)
            sides.append(self.sum_expr())
        if not ops:
            self._raise("expected a comparison (>=, <= or =)")
        atoms = []
        for op, lhs, rhs in zip(ops, sides, sides[1:]):
            if op == ">=":
                atoms.append(lhs - rhs)
            elif op == "<=":
                atoms.append(rhs - lhs)
            else:
                atoms.extend([lhs - rhs, rhs - lhs])
        # 0 >= 0 holds everywhere; keep it as the non-zero constant 1
        nodes = tuple(
            BoolAtom(Atom(p if not p.is_zero else Polynomial.constant(p.vartable, 1)))
            for p in atoms
        )
        return nodes[0] if len(nodes) == 1 else BoolAnd(nodes)

    # polynomial layer

    def sum_expr(self) -> Polynomial:
        value = self.product_expr()
        while self.at("+", "-"):
            op = self.advance().text
            rhs = self.product_expr()
            value = value + rhs if op == "+" else value - rhs
        return value

    def product_expr(self) -> Polynomial:
        value = self.unary_expr()
        while self.at("*", "/"):
            tok = self.advance()
            rhs = self.unary_expr()
            if tok.text == "*":
                value = value * rhs
                continue
            if rhs.degree != 0:
                self._raise("division is only allowed by non-zero constants", tok)
            value = value / rhs.coefficient(self.vartable.one())
        return value

    def unary_expr(self) -> Polynomial:
        if self.at("-"):
            self.advance()
            return -self.unary_expr()
        if self.at("+"):
            self.advance()
            return self.unary_expr()
        return self.power_expr()

    def power_expr(self) -> Polynomial:
        base = self.primary()
        if self.at("^"):
            self.advance()
            tok = self.advance()
            if tok.kind != "number" or not tok.text.isdigit():
                self._raise("exponent must be a non-negative integer literal", tok)
            return base ** int(tok.text)
        return base

    def primary(self) -> Polynomial:
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            return Polynomial.constant(self.vartable, Fraction(tok.text))
        if tok.kind == "ident":
            self.advance()
            if tok.text not in self.vartable.names:
                self._raise(f"undeclared variable '{tok.text}'", tok)
            return Polynomial.variable(self.vartable, tok.text)
        if self.at("("):
            self.advance()
            value = self.sum_expr()
            self.expect(")")
            return value
        found = tok.text or "end of input"
        return self._raise(f"unexpected '{found}'", tok)


def _split_statements(tokens: List[Token]) -> List[List[Token]]:
    statements, current = [], []
    for tok in tokens:
        if tok.kind == "eof":
            if current:
                raise ParseError("expected ';'", tok.line, tok.column)
            break
        if tok.kind == "op" and tok.text == ";":
            if not current:
                raise ParseError("empty statement", tok.line, tok.column)
            statements.append(current)
            current = []
        else:
            current.append(tok)
    return statements


@dataclass(frozen=True)
class ProblemInstance:
    """
    A parsed interpolation problem.

    The variable table is (x0, shared..., phi_only..., psi_only..., w); x0 and w
    are the auxiliary variables used by the SOS programs and never occur in
    phi or psi.
    """

    vartable: VarTable
    shared: Tuple[VarId, ...]
    phi_private: Tuple[VarId, ...]
    psi_private: Tuple[VarId, ...]
    phi: Formula
    psi: Formula
    digest: str = field(default="", compare=False)

    def __post_init__(self):
        validate_partition(self)

    @property
    def x0(self) -> VarId:
        return self.vartable.index(X0_NAME)

    @property
    def w(self) -> VarId:
        return self.vartable.index(W_NAME)

    @property
    def shared_table(self) -> VarTable:
        return self.vartable.subtable(self.shared)

    def formula(self, side: str) -> Formula:
        return self.phi if side == PHI else self.psi

    def private(self, side: str) -> Tuple[VarId, ...]:
        return self.phi_private if side == PHI else self.psi_private

    def side_variables(self, side: str) -> Tuple[VarId, ...]:
        return self.shared + self.private(side)

    def names(self, ids: Sequence[VarId]) -> Tuple[str, ...]:
        return tuple(self.vartable.names[i] for i in ids)


def validate_partition(instance: ProblemInstance) -> None:
    groups = {
        "shared": instance.shared,
        "phi_only": instance.phi_private,
        "psi_only": instance.psi_private,
    }
    seen: Dict[VarId, str] = {}
    for group, ids in groups.items():
        for v in ids:
            name = instance.vartable.names[v]
            if name in RESERVED_NAMES:
                raise PartitionError(f"'{name}' is a reserved variable name")
            if v in seen:
                raise PartitionError(
                    f"variable '{name}' is declared in both {seen[v]} and {group}"
                )
            seen[v] = group
    for side in SIDES:
        allowed = set(instance.side_variables(side))
        for v in instance.formula(side).variables():
            if v not in allowed:
                raise PartitionError(
                    f"variable '{instance.vartable.names[v]}' may not occur in {side}"
                )


def parse_problem(text: str) -> ProblemInstance:
    """Parses a problem file into a ProblemInstance (formulas already in DNF)."""
    statements = _split_statements(tokenize(text))
    declared: Dict[str, List[str]] = {k: [] for k in _KEYWORDS}
    formulas: Dict[str, List[Token]] = {}
    for stmt in statements:
        head = stmt[0]
        if head.kind == "ident" and head.text in _KEYWORDS:
            for tok in stmt[1:]:
                if tok.kind == "op" and tok.text == ",":
                    continue
                if tok.kind != "ident":
                    raise ParseError(f"expected a variable name, found '{tok.text}'", tok.line, tok.column)
                if tok.text in RESERVED_NAMES:
                    raise ParseError(f"'{tok.text}' is a reserved variable name", tok.line, tok.column)
                if any(tok.text in names for names in declared.values()):
                    raise ParseError(f"variable '{tok.text}' declared twice", tok.line, tok.column)
                declared[head.text].append(tok.text)
        elif head.kind == "ident" and head.text in SIDES:
            if len(stmt) < 2 or stmt[1].text != ":=":
                tok = stmt[1] if len(stmt) > 1 else head
                raise ParseError("expected ':='", tok.line, tok.column)
            if head.text in formulas:
                raise ParseError(f"{head.text} defined twice", head.line, head.column)
            formulas[head.text] = stmt[2:]
        else:
            raise ParseError(f"unknown statement '{head.text}'", head.line, head.column)

    for side in SIDES:
        if side not in formulas:
            raise ParseError(f"missing definition of {side}", 0, 0)

    names = (X0_NAME, *declared["shared"], *declared["phi_only"], *declared["psi_only"], W_NAME)
    vartable = VarTable(names)

    parsed = {}
    for side in SIDES:
        body = formulas[side]
        if not body:
            raise ParseError(f"empty definition of {side}", 0, 0)
        last = body[-1]
        parser = _Parser(body + [Token("eof", "", last.line, last.column + len(last.text))], vartable)
        node = parser.bool_expr()
        parser.expect_end()
        other = "psi_only" if side == PHI else "phi_only"
        for tok in body:
            if tok.kind == "ident" and (tok.text in declared[other] or tok.text in RESERVED_NAMES):
                raise ParseError(f"variable '{tok.text}' may not occur in {side}", tok.line, tok.column)
        parsed[side] = to_dnf(node)

    return ProblemInstance(
        vartable=vartable,
        shared=vartable.ids(declared["shared"]),
        phi_private=vartable.ids(declared["phi_only"]),
        psi_private=vartable.ids(declared["psi_only"]),
        phi=parsed[PHI],
        psi=parsed[PSI],
        digest=hashlib.sha256(text.encode("utf-8")).hexdigest(),
    )


def load_problem(path: str) -> ProblemInstance:
    with open(path, "r") as f:
        return parse_problem(f.read())


def parse_polynomial(text: str, vartable: VarTable) -> Polynomial:
    parser = _Parser(tokenize(text), vartable)
    value = parser.sum_expr()
    parser.expect_end()
    return value


def parse_definitions(text: str, vartable: VarTable) -> Dict[str, Polynomial]:
    """Parses `name := polynomial;` statements (interpolant files)."""
    out: Dict[str, Polynomial] = {}
    for stmt in _split_statements(tokenize(text)):
        head = stmt[0]
        if head.kind != "ident" or len(stmt) < 3 or stmt[1].text != ":=":
            raise ParseError("expected 'name := polynomial;'", head.line, head.column)
        if head.text in out:
            raise ParseError(f"'{head.text}' defined twice", head.line, head.column)
        last = stmt[-1]
        parser = _Parser(stmt[2:] + [Token("eof", "", last.line, last.column + len(last.text))], vartable)
        out[head.text] = parser.sum_expr()
        parser.expect_end()
    return out


def render_formula(formula: Formula) -> str:
    clauses = []
    for clause in formula.clauses:
        atoms = " & ".join(f"{atom.poly.render()} >= 0" for atom in clause.atoms)
        clauses.append(f"({atoms})" if len(formula.clauses) > 1 and len(clause.atoms) > 1 else atoms)
    return "\n     | ".join(clauses)


def render_problem(instance: ProblemInstance) -> str:
    """Renders a problem back to the input syntax; parsing the result gives an equal instance."""
    lines = []
    for keyword, ids in (
        ("shared", instance.shared),
        ("phi_only", instance.phi_private),
        ("psi_only", instance.psi_private),
    ):
        if ids:
            lines.append(f"{keyword} {' '.join(instance.names(ids))};")
    lines.append(f"phi := {render_formula(instance.phi)};")
    lines.append(f"psi := {render_formula(instance.psi)};")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Generator:
    poly: Polynomial
    kind: MultiplierKind
    label: str


@dataclass(frozen=True)
class ExtendedClause:
    """A clause's atoms (SOS-weighted) followed by the auxiliary generators of a mode."""

    generators: Tuple[Generator, ...]
    atom_count: int

    @property
    def tags(self) -> Tuple[MultiplierKind, ...]:
        return tuple(g.kind for g in self.generators)


def clause_extension(
    clause: Clause,
    mode: Mode,
    x0: Optional[VarId] = None,
    shared: Sequence[VarId] = (),
    private: Sequence[VarId] = (),
    w: Optional[VarId] = None,
) -> ExtendedClause:
    """
    Appends the auxiliary constraints of a program mode to a clause.

    polynomial:    x0 >= 0 (SOS) and x0^2 + |x|^2 + |y|^2 - 1 = 0 (FREE)
    semialgebraic: x0 >= 0, w >= 0 (SOS), x0^2 + |x|^2 + w^2 + |y|^2 - 1 = 0 and
                   x0^2 + |x|^2 - w^2 = 0 (FREE)
    archimedean:   nothing

    The clause atoms are expected to be homogenized already (except in
    archimedean mode).
    """
    table = clause.vartable
    gens = [
        Generator(atom.poly, MultiplierKind.SOS, f"atom{k}")
        for k, atom in enumerate(clause.atoms)
    ]
    if mode == Mode.ARCHIMEDEAN:
        return ExtendedClause(tuple(gens), len(clause.atoms))
    if x0 is None:
        raise ValueError("the homogenizing variable x0 is required")

    def var(v):
        return Polynomial.variable(table, v)

    one = Polynomial.constant(table, 1)
    shared_sq = sum((var(v) ** 2 for v in shared), Polynomial(table))
    private_sq = sum((var(v) ** 2 for v in private), Polynomial(table))
    gens.append(Generator(var(x0), MultiplierKind.SOS, "x0"))
    if mode == Mode.POLYNOMIAL:
        sphere = var(x0) ** 2 + shared_sq + private_sq - one
        gens.append(Generator(sphere, MultiplierKind.FREE, "sphere"))
    else:
        if w is None:
            raise ValueError("the auxiliary variable w is required in semialgebraic mode")
        gens.append(Generator(var(w), MultiplierKind.SOS, "w"))
        sphere = var(x0) ** 2 + shared_sq + var(w) ** 2 + private_sq - one
        cone = var(x0) ** 2 + shared_sq - var(w) ** 2
        gens.append(Generator(sphere, MultiplierKind.FREE, "sphere"))
        gens.append(Generator(cone, MultiplierKind.FREE, "cone"))
    return ExtendedClause(tuple(gens), len(clause.atoms))


def clause_at_infinity(clause: Clause) -> Tuple[Polynomial, ...]:
    """Top parts of the atoms: the description of the clause's points at infinity."""
    return tuple(top_part(atom.poly) for atom in clause.atoms)
