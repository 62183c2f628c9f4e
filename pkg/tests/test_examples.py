import json

import pytest

from main import main

pytestmark = pytest.mark.slow


def synth(settings_file, problem, out, *options):
    return main(["synth", str(problem), "--out", str(out), "--settings", str(settings_file), *options])


def report_of(out):
    return json.loads(out.with_name(out.name + ".report.json").read_text())


def test_ovals_degree_seven(settings_file, data_dir, tmp_path):
    out = tmp_path / "ovals"
    assert synth(settings_file, data_dir / "ovals.txt", out, "--degree", "7", "--order", "4", "--box=-2,2") == 0
    assert report_of(out)["result"]["degree"] == 7


def test_curves_polynomial_needs_degree_four(settings_file, data_dir, tmp_path):
    out = tmp_path / "curves_poly"
    assert synth(settings_file, data_dir / "curves.txt", out, "--degree", "3", "--max-degree", "4", "--box=-3,3") == 0
    attempts = report_of(out)["attempts"]
    assert all(a["status"] != "VERIFIED" for a in attempts if a["degree"] == 3)
    assert report_of(out)["result"]["degree"] == 4


def test_curves_semialgebraic_degree_three(settings_file, data_dir, tmp_path):
    # atoms of degree 6 put the order floor at 3, not 2
    out = tmp_path / "curves_semi"
    code = synth(settings_file, data_dir / "curves.txt", out, "--mode", "semialg", "--degree", "3", "--box=-3,3")
    assert code == 0
    result = report_of(out)["result"]
    assert result["degree"] <= 3
    assert result["order"] == 3


def test_torus_degree_one_exhausts(settings_file, data_dir, tmp_path):
    out = tmp_path / "torus_linear"
    assert synth(settings_file, data_dir / "torus.txt", out, "--degree", "1", "--max-degree", "1", "--box=-8,8") == 2
    report = report_of(out)
    assert report["outcome"] == "exhausted"
    assert report["attempts"]
    assert all(a["degree"] == 1 and a["status"] != "VERIFIED" for a in report["attempts"])


def test_torus_degree_two(settings_file, data_dir, tmp_path):
    out = tmp_path / "torus"
    assert synth(settings_file, data_dir / "torus.txt", out, "--degree", "2", "--box=-8,8") == 0
    assert report_of(out)["result"]["kind"] == "polynomial"


def test_motzkin_candidate_certified(settings_file, data_dir, tmp_path):
    code = main(
        [
            "check",
            str(data_dir / "motzkin_candidate.interp"),
            str(data_dir / "motzkin.txt"),
            "--certify",
            "--degree",
            "6",
            "--order",
            "3",
            "--out",
            str(tmp_path / "motzkin"),
            "--settings",
            str(settings_file),
        ]
    )
    assert code == 0
    certification = json.loads((tmp_path / "motzkin.check.json").read_text())["certification"]
    assert certification["status"] == "FEASIBLE"
    assert certification["sdp"]["blocks"] == 3 + 3
    assert certification["residual"] <= 1e-6
    assert certification["passed"] is True
