import pytest

from utils.errors import NothingToExportError, SdpaParseError, StructureMismatchError
from utils.formula_utils import parse_problem
from utils.sdp_utils import SdpEquality, SdpProblem, SdpStatus, solve
from utils.sdpa_utils import export_sdpa, import_sdpa, import_solution, parse_sdpa_output
from utils.sos_utils import build_program, compile_to_sdp


def scalar_problem(rhs):
    return SdpProblem((1,), 0, (SdpEquality(((0, 0, 0, 1.0),), (), rhs),))


SOLUTION_TEMPLATE = """SDPA start at ...
phase.value  = {phase}
   Iteration = 7
xVec =
{{{xvec}}}
xMat =
{{
{{ {{0.0 }} }}
}}
yMat =
{{
{{ {{{y}}} }}
}}
"""


@pytest.fixture
def scalar_file(tmp_path):
    path = tmp_path / "scalar.dat-s"
    export_sdpa(scalar_problem(1.0), str(path))
    return path


def test_export_scalar(scalar_file):
    lines = scalar_file.read_text().splitlines()
    assert lines[0].startswith('"interpolsos nfree=0')
    assert lines[1:5] == ["1", "1", "1", "1.0"]
    assert "1 1 1 1 1.0" in lines


def test_export_nothing(tmp_path):
    with pytest.raises(NothingToExportError):
        export_sdpa(SdpProblem((), 0, ()), str(tmp_path / "empty.dat-s"))


def test_export_import_program(tmp_path, disc_instance):
    problem = compile_to_sdp(build_program(disc_instance, 2, 1))
    path = tmp_path / "disc.dat-s"
    export_sdpa(problem, str(path))
    again = import_sdpa(str(path))
    assert again.block_dims == problem.block_dims
    assert again.nfree == problem.nfree
    assert again.equalities == problem.equalities


@pytest.mark.parametrize(
    "text",
    [
        "shared x y;\nphi := 1 - x^2 - y^2 >= 0;\npsi := x^2 + y^2 - 4 >= 0;\n",
        "shared x;\nphi := x >= 0;\npsi := x >= 1;\n",
    ],
)
def test_export_import_solves_alike(tmp_path, text):
    problem = compile_to_sdp(build_program(parse_problem(text), 2, 1))
    path = tmp_path / "p.dat-s"
    export_sdpa(problem, str(path))
    assert solve(import_sdpa(str(path))).status == solve(problem).status


def test_free_block_is_split(tmp_path):
    problem = SdpProblem((1,), 2, (SdpEquality(((0, 0, 0, 1.0),), ((1, 3.0),), 1.0),))
    path = tmp_path / "free.dat-s"
    export_sdpa(problem, str(path))
    lines = path.read_text().splitlines()
    assert lines[3] == "1 -4"
    assert "1 2 2 2 3.0" in lines
    assert "1 2 4 4 -3.0" in lines


def test_import_solution_feasible(tmp_path):
    path = tmp_path / "scalar.out"
    path.write_text(SOLUTION_TEMPLATE.format(phase="pdOPT", xvec="-1.0", y="1.0"))
    solution = import_solution(scalar_problem(1.0), str(path))
    assert solution.status == SdpStatus.FEASIBLE
    assert solution.primal_residual <= 1e-8
    assert solution.solver_status == "pdOPT"


def test_import_solution_infeasible(tmp_path):
    path = tmp_path / "scalar.out"
    path.write_text(SOLUTION_TEMPLATE.format(phase="pINF_dFEAS", xvec="1.0", y="0.0"))
    solution = import_solution(scalar_problem(-1.0), str(path))
    assert solution.status == SdpStatus.INFEASIBLE


def test_import_solution_truncated(tmp_path):
    path = tmp_path / "broken.out"
    path.write_text("phase.value = pdOPT\nxVec =\n{1.0, 2.0\n")
    with pytest.raises(SdpaParseError, match="at byte"):
        import_solution(scalar_problem(1.0), str(path))


def test_import_solution_wrong_structure(tmp_path):
    path = tmp_path / "other.out"
    path.write_text(
        "phase.value = pdOPT\nxVec =\n{1.0}\nxMat =\n{ { {0.0} } }\n"
        "yMat =\n{\n{ {1.0} }\n{ {1.0} }\n}\n"
    )
    with pytest.raises(StructureMismatchError):
        import_solution(scalar_problem(1.0), str(path))


def test_parse_sdpa_output_nested_lists():
    parsed = parse_sdpa_output("phase.value = pdOPT\nxVec = {1, -2.5e-1}\nxMat = {}\nyMat = {{{1,2},{2,5}}}")
    assert parsed["phase"] == "pdOPT"
    assert parsed["xVec"] == [1.0, -0.25]
    assert parsed["yMat"] == [[[1.0, 2.0], [2.0, 5.0]]]


def test_import_sdpa_rejects_bad_free_header(tmp_path):
    path = tmp_path / "bad.dat-s"
    path.write_text('"interpolsos nfree=2 psd_blocks=1\n1\n2\n1 -2\n1.0\n1 1 1 1 1.0\n')
    with pytest.raises(StructureMismatchError):
        import_sdpa(str(path))


def test_torus_block_count_matches_sos_slots(torus_instance):
    program = build_program(torus_instance, 2, 2)
    problem = compile_to_sdp(program)
    sos_slots = sum(1 for identity in program.identities for slot in identity.slots if slot.kind.value == "SOS")
    assert problem.stats()["blocks"] == sos_slots
