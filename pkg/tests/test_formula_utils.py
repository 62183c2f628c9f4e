import numpy as np
import pytest

from utils.errors import ParseError, PartitionError
from utils.formula_utils import (
    Atom,
    BoolAnd,
    BoolAtom,
    BoolOr,
    Mode,
    MultiplierKind,
    clause_at_infinity,
    clause_extension,
    parse_definitions,
    parse_polynomial,
    parse_problem,
    render_problem,
    to_dnf,
    validate_partition,
)
from utils.poly_utils import VarTable


def test_parse_single_atom():
    instance = parse_problem("shared x y;\nphi := x^2 + y^2 - 1 >= 0;\npsi := -x >= 0;\n")
    assert instance.names(instance.shared) == ("x", "y")
    assert len(instance.phi.clauses) == 1
    assert len(instance.phi.clauses[0].atoms) == 1
    assert instance.vartable.names == ("x0", "x", "y", "w")


def test_parse_torus_chain_sugar(torus_instance):
    table = torus_instance.vartable
    assert torus_instance.names(torus_instance.psi_private) == ("r", "R")
    (clause,) = torus_instance.psi.clauses
    atoms = [a.poly for a in clause.atoms]
    expected = [
        "4*R^2*(x^2 + y^2) - (x^2 + y^2 + z^2 + R^2 - r^2)^2",
        "R - 4",
        "6 - R",
        "r - 0.5",
        "1 - r",
    ]
    assert atoms == [parse_polynomial(text, table) for text in expected]


def test_parse_dnf_distribution():
    instance = parse_problem("shared x;\nphi := (x >= 1 | x <= -1) & x^2 <= 9;\npsi := x^2 <= 0.25;\n")
    assert len(instance.phi.clauses) == 2
    assert all(len(c.atoms) == 2 for c in instance.phi.clauses)
    assert instance.phi.holds([1.0, 2.0, 0.0])
    assert not instance.phi.holds([1.0, 0.0, 0.0])


def test_parse_equality_becomes_two_atoms():
    instance = parse_problem("shared x y;\nphi := x = y;\npsi := x - y >= 1;\n")
    assert len(instance.phi.clauses[0].atoms) == 2


def test_strict_inequality_rejected():
    with pytest.raises(ParseError, match="strict inequalities are not supported"):
        parse_problem("shared x;\nphi := x > 0;\npsi := x <= -1;\n")


def test_parse_error_reports_position():
    with pytest.raises(ParseError) as excinfo:
        parse_problem("shared x;\nphi := x >= 0;\npsi := x + * 2 >= 0;\n")
    assert excinfo.value.line == 3
    assert excinfo.value.column > 0


def test_private_variable_of_other_side_rejected():
    text = "shared x;\nphi_only u;\npsi_only v;\nphi := x + u >= 0;\npsi := x - v >= 0 & u >= 0;\n"
    with pytest.raises(ParseError, match="may not occur in psi"):
        parse_problem(text)


@pytest.mark.parametrize("name", ["x0", "w"])
def test_reserved_names_rejected(name):
    with pytest.raises(ParseError, match="reserved"):
        parse_problem(f"shared {name};\nphi := {name} >= 0;\npsi := {name} <= -1;\n")


def test_undeclared_variable_rejected():
    with pytest.raises(ParseError, match="undeclared variable 'q'"):
        parse_problem("shared x;\nphi := q >= 0;\npsi := x <= -1;\n")


def test_division_by_polynomial_rejected():
    with pytest.raises(ParseError, match="division"):
        parse_problem("shared x;\nphi := 1/x >= 0;\npsi := x <= -1;\n")


def test_missing_side_rejected():
    with pytest.raises(ParseError, match="missing definition of psi"):
        parse_problem("shared x;\nphi := x >= 0;\n")


def test_render_problem_parses_back(torus_instance):
    again = parse_problem(render_problem(torus_instance))
    assert again.vartable == torus_instance.vartable
    assert again.phi == torus_instance.phi
    assert again.psi == torus_instance.psi


def test_validate_partition_accepts_parsed(torus_instance):
    validate_partition(torus_instance)


def test_validate_partition_rejects_overlap(torus_instance):
    from dataclasses import replace

    with pytest.raises(PartitionError, match="declared in both"):
        replace(torus_instance, phi_private=torus_instance.shared[:1])


def test_parse_definitions(disc_instance):
    defs = parse_definitions("# comment\nh1 := 1 - x^2;\nh2 := 0.5;\n", disc_instance.vartable)
    assert set(defs) == {"h1", "h2"}
    assert defs["h2"] == parse_polynomial("1/2", disc_instance.vartable)


def test_clause_extension_keeps_atoms(disc_instance):
    clause = disc_instance.phi.clauses[0]
    extended = clause_extension(clause, Mode.ARCHIMEDEAN)
    assert [g.poly for g in extended.generators] == [a.poly for a in clause.atoms]


def test_clause_extension_tags(disc_instance):
    inst = parse_problem("shared x y;\nphi := 1 - x^2 >= 0 & 1 - y^2 >= 0;\npsi := x^2 - 4 >= 0;\n")
    clause = inst.phi.clauses[0]
    poly_ext = clause_extension(clause, Mode.POLYNOMIAL, inst.x0, inst.shared, inst.phi_private)
    assert poly_ext.tags == (MultiplierKind.SOS,) * 3 + (MultiplierKind.FREE,)
    semi_ext = clause_extension(clause, Mode.SEMIALGEBRAIC, inst.x0, inst.shared, inst.phi_private, inst.w)
    assert semi_ext.tags == (MultiplierKind.SOS,) * 4 + (MultiplierKind.FREE,) * 2
    assert [g.label for g in semi_ext.generators] == ["atom0", "atom1", "x0", "w", "sphere", "cone"]


def test_clause_extension_sphere_includes_private(torus_instance):
    inst = torus_instance
    clause = inst.psi.clauses[0]
    ext = clause_extension(clause, Mode.POLYNOMIAL, inst.x0, inst.shared, inst.psi_private)
    sphere = ext.generators[-1].poly
    assert ext.generators[-1].label == "sphere"
    assert sphere == parse_polynomial("x0^2 + x^2 + y^2 + z^2 + r^2 + R^2 - 1", inst.vartable)


def test_clause_at_infinity(disc_instance):
    (top,) = clause_at_infinity(disc_instance.psi.clauses[0])
    assert top == parse_polynomial("x^2 + y^2", disc_instance.vartable)


def random_poly_text(rng):
    a = int(rng.integers(1, 5)) * int(rng.choice([-1, 1]))
    i, j = (int(e) for e in rng.integers(1, 3, size=2))
    b, c = (int(e) for e in rng.integers(-4, 5, size=2))
    return f"{a}*x^{i}*y^{j} + {b}*x + {c}"


def random_formula_text(rng, depth):
    if depth == 0 or rng.random() < 0.3:
        return f"{random_poly_text(rng)} {rng.choice(['>=', '<=', '='])} 0"
    op = " & " if rng.random() < 0.5 else " | "
    return "(" + op.join(random_formula_text(rng, depth - 1) for _ in range(2)) + ")"


def random_bool_node(rng, table, depth):
    if depth == 0 or rng.random() < 0.3:
        return BoolAtom(Atom(parse_polynomial(random_poly_text(rng), table)))
    parts = tuple(random_bool_node(rng, table, depth - 1) for _ in range(int(rng.integers(2, 4))))
    return BoolAnd(parts) if rng.random() < 0.5 else BoolOr(parts)


def test_dnf_agrees_with_formula_on_random_points():
    table = VarTable(("x", "y"))
    rng = np.random.default_rng(21)
    pts = rng.uniform(-2, 2, size=(100, 2))
    for _ in range(50):
        node = random_bool_node(rng, table, depth=3)
        dnf = to_dnf(node)
        assert [dnf.holds(p) for p in pts] == [node.holds(p) for p in pts]


def test_render_round_trip_on_generated_problems():
    rng = np.random.default_rng(22)
    for _ in range(50):
        text = (
            "shared x y;\n"
            f"phi := {random_formula_text(rng, depth=3)};\n"
            f"psi := {random_formula_text(rng, depth=2)};\n"
        )
        first = parse_problem(text)
        again = parse_problem(render_problem(first))
        assert again.phi == first.phi
        assert again.psi == first.psi
        assert render_problem(again) == render_problem(first)
