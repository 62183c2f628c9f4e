"""
Exact sparse multivariate polynomials.

Coefficients are `fractions.Fraction`, monomials are exponent tuples indexed by
the position of a variable in a `VarTable`. Two polynomials can only be combined
when they share the same table. Terms are kept in a dict keyed by monomial and
never mutated after construction.

Canonical order is graded lexicographic: higher total degree first, ties broken
lexicographically on the exponent tuple (earlier variables first).
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from utils.errors import DimensionError, VariableError, ZeroPolynomialError

VarId = int
Monomial = Tuple[int, ...]
Scalar = Union[int, Fraction]

ZERO_DEGREE = -math.inf


@dataclass(frozen=True)
class VarTable:
    """Ordered list of variable names; a VarId is an index into it."""

    names: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        if len(set(self.names)) != len(self.names):
            raise VariableError(f"duplicate variable names in {self.names}")

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> VarId:
        try:
            return self.names.index(name)
        except ValueError:
            raise VariableError(f"unknown variable '{name}'") from None

    def ids(self, names: Iterable[str]) -> Tuple[VarId, ...]:
        return tuple(self.index(n) for n in names)

    def subtable(self, ids: Sequence[VarId]) -> "VarTable":
        return VarTable(tuple(self.names[i] for i in ids))

    def unit(self, var: VarId) -> Monomial:
        exps = [0] * len(self)
        exps[var] = 1
        return tuple(exps)

    def one(self) -> Monomial:
        return (0,) * len(self)


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x + y for x, y in zip(a, b))


def mono_degree(m: Monomial) -> int:
    return sum(m)


def grlex_key(m: Monomial) -> Tuple[int, Monomial]:
    return (sum(m), m)


def basis_key(m: Monomial) -> Tuple[int, Tuple[int, ...]]:
    """Degree ascending, within a degree x1 before x2 (1, x1, x2, x1^2, x1*x2, ...)."""
    return (sum(m), tuple(-e for e in m))


def render_monomial(m: Monomial, vartable: VarTable) -> str:
    factors = []
    for name, e in zip(vartable.names, m):
        if e == 1:
            factors.append(name)
        elif e > 1:
            factors.append(f"{name}^{e}")
    return "*".join(factors) if factors else "1"


def render_coefficient(c: Fraction, digits: Optional[int] = None) -> str:
    """
    Renders a non-negative rational.

    Terminating decimals (denominator 2^a 5^b) come out as exact decimals that
    parse back to the same Fraction; anything else as `p/q`. With `digits` the
    value is rounded to that many significant digits for display.
    """
    if digits is not None:
        return f"{float(c):.{digits}g}"
    if c.denominator == 1:
        return str(c.numerator)
    den = c.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{c.numerator}/{c.denominator}"
    places = max(twos, fives)
    scaled = str(c.numerator * 10**places // c.denominator).rjust(places + 1, "0")
    return f"{scaled[:-places]}.{scaled[-places:]}"


class Polynomial:
    __slots__ = ("vartable", "_terms")

    def __init__(
        self, vartable: VarTable, terms: Optional[Mapping[Monomial, Scalar]] = None
    ):
        n = len(vartable)
        clean: Dict[Monomial, Fraction] = {}
        for mono, coeff in (terms or {}).items():
            mono = tuple(mono)
            if len(mono) != n:
                raise DimensionError(
                    f"monomial {mono} has {len(mono)} exponents, table has {n} variables"
                )
            if any(e < 0 for e in mono):
                raise DimensionError(f"negative exponent in {mono}")
            c = coeff if isinstance(coeff, Fraction) else Fraction(coeff)
            if c:
                clean[mono] = clean.get(mono, Fraction(0)) + c
                if not clean[mono]:
                    del clean[mono]
        self.vartable = vartable
        self._terms = clean

    @classmethod
    def constant(cls, vartable: VarTable, value: Scalar) -> "Polynomial":
        return cls(vartable, {vartable.one(): value})

    @classmethod
    def variable(cls, vartable: VarTable, var: Union[VarId, str]) -> "Polynomial":
        if isinstance(var, str):
            var = vartable.index(var)
        return cls(vartable, {vartable.unit(var): 1})

    @classmethod
    def monomial(
        cls, vartable: VarTable, mono: Monomial, coeff: Scalar = 1
    ) -> "Polynomial":
        return cls(vartable, {mono: coeff})

    @property
    def terms(self) -> Mapping[Monomial, Fraction]:
        return MappingProxyType(self._terms)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> Union[int, float]:
        if not self._terms:
            return ZERO_DEGREE
        return max(sum(m) for m in self._terms)

    @property
    def is_homogeneous(self) -> bool:
        return len({sum(m) for m in self._terms}) <= 1

    def variables(self) -> Tuple[VarId, ...]:
        used = set()
        for mono in self._terms:
            used.update(i for i, e in enumerate(mono) if e)
        return tuple(sorted(used))

    def coefficient(self, mono: Monomial) -> Fraction:
        return self._terms.get(tuple(mono), Fraction(0))

    def sorted_terms(self) -> List[Tuple[Monomial, Fraction]]:
        return sorted(self._terms.items(), key=lambda t: grlex_key(t[0]), reverse=True)

    def homogeneous_part(self, k: int) -> "Polynomial":
        return Polynomial(
            self.vartable, {m: c for m, c in self._terms.items() if sum(m) == k}
        )

    def max_abs_coefficient(self) -> Fraction:
        return max((abs(c) for c in self._terms.values()), default=Fraction(0))

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.vartable != self.vartable:
                raise VariableError(
                    f"variable tables differ: {self.vartable.names} vs {other.vartable.names}"
                )
            return other
        if isinstance(other, (int, Fraction)):
            return Polynomial.constant(self.vartable, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self._terms)
        for m, c in other._terms.items():
            terms[m] = terms.get(m, Fraction(0)) + c
        return Polynomial(self.vartable, terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.vartable, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return Polynomial(self.vartable, {m: c * other for m, c in self._terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms: Dict[Monomial, Fraction] = {}
        for ma, ca in self._terms.items():
            for mb, cb in other._terms.items():
                m = mono_mul(ma, mb)
                terms[m] = terms.get(m, Fraction(0)) + ca * cb
        return Polynomial(self.vartable, terms)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)) and other != 0:
            return self * (Fraction(1) / Fraction(other))
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError(f"exponent must be a non-negative integer, got {k}")
        result = Polynomial.constant(self.vartable, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(self.vartable, other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.vartable == other.vartable and self._terms == other._terms

    def __hash__(self):
        return hash((self.vartable, frozenset(self._terms.items())))

    def evaluate(self, point: Sequence[float]) -> float:
        if len(point) != len(self.vartable):
            raise DimensionError(
                f"point has {len(point)} coordinates, expected {len(self.vartable)}"
            )
        total = 0.0
        for mono, c in self._terms.items():
            total += float(c) * math.prod(
                float(point[i]) ** e for i, e in enumerate(mono) if e
            )
        return total

    def evaluate_exact(self, point: Sequence[Scalar]) -> Fraction:
        if len(point) != len(self.vartable):
            raise DimensionError(
                f"point has {len(point)} coordinates, expected {len(self.vartable)}"
            )
        values = [Fraction(v) for v in point]
        total = Fraction(0)
        for mono, c in self._terms.items():
            term = c
            for i, e in enumerate(mono):
                if e:
                    term *= values[i] ** e
            total += term
        return total

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Evaluates at every row of an (N, len(vartable)) array."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != len(self.vartable):
            raise DimensionError(
                f"points have shape {pts.shape}, expected (N, {len(self.vartable)})"
            )
        out = np.zeros(pts.shape[0])
        for mono, c in self._terms.items():
            term = np.full(pts.shape[0], float(c))
            for i, e in enumerate(mono):
                if e:
                    term *= pts[:, i] ** e
            out += term
        return out

    def rebase(self, vartable: VarTable) -> "Polynomial":
        """Re-expresses the polynomial over another table, matching variables by name."""
        positions = []
        for i, name in enumerate(self.vartable.names):
            positions.append(vartable.names.index(name) if name in vartable.names else None)
        terms = {}
        for mono, c in self._terms.items():
            exps = [0] * len(vartable)
            for i, e in enumerate(mono):
                if not e:
                    continue
                if positions[i] is None:
                    raise VariableError(
                        f"variable '{self.vartable.names[i]}' is not in {vartable.names}"
                    )
                exps[positions[i]] = e
            terms[tuple(exps)] = c
        return Polynomial(vartable, terms)

    def render(self, digits: Optional[int] = None) -> str:
        if not self._terms:
            return "0"
        parts = []
        for k, (mono, c) in enumerate(self.sorted_terms()):
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            body = render_monomial(mono, self.vartable)
            if body == "1":
                text = render_coefficient(mag, digits)
            elif mag == 1:
                text = body
            else:
                text = f"{render_coefficient(mag, digits)}*{body}"
            if k == 0:
                parts.append(f"-{text}" if sign == "-" else text)
            else:
                parts.append(f" {sign} {text}")
        return "".join(parts)

    def __str__(self):
        return self.render()

    def __repr__(self):
        return f"Polynomial({self.render()!r}, vars={self.vartable.names})"


def homogenize(f: Polynomial, x0: VarId, degree: Optional[int] = None) -> Polynomial:
    """
    Returns x0^D * f(x/x0) with D = deg f, or the given degree D >= deg f.

    Args:
        f (Polynomial): A non-zero polynomial that does not use `x0`.
        x0 (VarId): The homogenizing variable, a member of f's table.
        degree (int, optional): Target degree D. Defaults to deg f.

    Returns:
        Polynomial: A homogeneous polynomial of degree D over the same table.

    Raises:
        ZeroPolynomialError: If f is zero.
        VariableError: If f already uses `x0`.
        DimensionError: If `degree` is below deg f.
    """
    if f.is_zero:
        raise ZeroPolynomialError("cannot homogenize the zero polynomial")
    if x0 in f.variables():
        raise VariableError(
            f"homogenizing variable '{f.vartable.names[x0]}' already occurs in the polynomial"
        )
    d = f.degree if degree is None else degree
    if d < f.degree:
        raise DimensionError(f"target degree {d} is below the polynomial degree {f.degree}")
    terms = {}
    for mono, c in f.terms.items():
        exps = list(mono)
        exps[x0] = d - sum(mono)
        terms[tuple(exps)] = c
    return Polynomial(f.vartable, terms)


def dehomogenize(g: Polynomial, x0: VarId) -> Polynomial:
    """Substitutes x0 = 1."""
    terms: Dict[Monomial, Fraction] = {}
    for mono, c in g.terms.items():
        exps = list(mono)
        exps[x0] = 0
        key = tuple(exps)
        terms[key] = terms.get(key, Fraction(0)) + c
    return Polynomial(g.vartable, terms)


def top_part(p: Polynomial) -> Polynomial:
    """
    The homogeneous component of highest degree, i.e. the behaviour of p at infinity.

    Args:
        p (Polynomial): A non-zero polynomial.

    Returns:
        Polynomial: The terms of p of degree deg p.

    Raises:
        ZeroPolynomialError: If p is zero.
    """
    if p.is_zero:
        raise ZeroPolynomialError("the zero polynomial has no top part")
    return p.homogeneous_part(p.degree)


@dataclass(frozen=True)
class SqrtPair:
    """The function h1(x) + sqrt(|x|^2 + 1) * h2(x)."""

    h1: Polynomial
    h2: Polynomial

    def __post_init__(self):
        if self.h1.vartable != self.h2.vartable:
            raise VariableError("h1 and h2 must share a variable table")

    @property
    def vartable(self) -> VarTable:
        return self.h1.vartable

    @property
    def is_polynomial(self) -> bool:
        return self.h2.is_zero


def eval_sqrtpair(h: SqrtPair, point: Sequence[float]) -> float:
    """
    Evaluates h1(x) + sqrt(1 + |x|^2) * h2(x) at one point.

    Args:
        h (SqrtPair): The function to evaluate.
        point (Sequence[float]): One coordinate per variable of h's table.

    Returns:
        float: The value at `point`.

    Raises:
        DimensionError: If the point has the wrong number of coordinates.
    """
    if len(point) != len(h.vartable):
        raise DimensionError(
            f"point has {len(point)} coordinates, expected {len(h.vartable)}"
        )
    rho = math.sqrt(1.0 + sum(float(v) ** 2 for v in point))
    return h.h1.evaluate(point) + rho * h.h2.evaluate(point)


def eval_sqrtpair_many(h: SqrtPair, points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    rho = np.sqrt(1.0 + np.sum(pts**2, axis=1))
    return h.h1.evaluate_many(pts) + rho * h.h2.evaluate_many(pts)


def projective_substitute(
    g: Polynomial, x0: VarId, shared: Optional[VarTable] = None
) -> SqrtPair:
    """
    Pulls a polynomial g(x0, x) back along x0 = 1/rho, x = x/rho, rho = sqrt(1+|x|^2).

    A term of degree k becomes the same term with x0 set to 1, times
    (1+|x|^2)^floor((deg g - k)/2); terms with odd deg g - k land in h2.
    The result lives over `shared` (default: every variable of g's table but x0).

    Args:
        g (Polynomial): A non-zero polynomial over a table containing `x0`.
        x0 (VarId): The homogenizing variable.
        shared (VarTable, optional): Target table; must not contain x0's name.

    Returns:
        SqrtPair: (h1, h2) with h1(x) + rho * h2(x) = rho^deg(g) * g(1/rho, x/rho).

    Raises:
        ZeroPolynomialError: If g is zero.
        VariableError: If the target table contains x0.
    """
    if shared is None:
        shared = g.vartable.subtable([i for i in range(len(g.vartable)) if i != x0])
    x0_name = g.vartable.names[x0]
    if x0_name in shared.names:
        raise VariableError(f"'{x0_name}' cannot be a target variable")
    if g.is_zero:
        raise ZeroPolynomialError("cannot pull back the zero polynomial")

    big_d = g.degree
    norm_sq = Polynomial.constant(shared, 1)
    for i in range(len(shared)):
        norm_sq = norm_sq + Polynomial.variable(shared, i) ** 2
    powers = {0: Polynomial.constant(shared, 1)}

    def norm_power(k: int) -> Polynomial:
        if k not in powers:
            powers[k] = norm_power(k - 1) * norm_sq
        return powers[k]

    h1 = Polynomial(shared)
    h2 = Polynomial(shared)
    for mono, c in g.terms.items():
        k = sum(mono)
        exps = list(mono)
        exps[x0] = 0
        term = Polynomial(g.vartable, {tuple(exps): c}).rebase(shared)
        gap = big_d - k
        lifted = term * norm_power(gap // 2)
        if gap % 2:
            h2 = h2 + lifted
        else:
            h1 = h1 + lifted
    return SqrtPair(h1, h2)
