import json
from unittest.mock import patch

import pytest

from main import main
from utils.sdp_utils import SdpSolution, SdpStatus


@pytest.fixture
def disc_file(tmp_path, disc_problem_text):
    path = tmp_path / "disc.txt"
    path.write_text(disc_problem_text)
    return path


@pytest.fixture
def disc_interp(tmp_path):
    path = tmp_path / "disc.interp"
    path.write_text("h := 2 - x^2 - y^2;\n")
    return path


def run(settings_file, *argv):
    return main([*argv, "--settings", str(settings_file)])


def test_export_sdpa_prints_sizes(settings_file, disc_file, tmp_path, capsys):
    out = tmp_path / "disc.dat-s"
    assert run(settings_file, "export-sdpa", str(disc_file), "--degree", "2", "--out", str(out)) == 0
    assert out.exists()
    assert "blocks=6" in capsys.readouterr().out


def test_synth_disc(settings_file, disc_file, tmp_path):
    prefix = tmp_path / "disc_out"
    assert run(settings_file, "synth", str(disc_file), "--degree", "2", "--out", str(prefix)) == 0
    report = json.loads((tmp_path / "disc_out.report.json").read_text())
    assert report["outcome"] == "verified"
    assert report["result"]["degree"] == 2
    assert report["attempts"][-1]["status"] == "VERIFIED"
    assert report["config"]["degree"] == 2
    assert (tmp_path / "disc_out.interp").read_text().startswith("# polynomial interpolant over (x, y)")
    assert (tmp_path / "disc_out.report.txt").read_text().startswith("problem")

    code = run(
        settings_file,
        "check",
        str(tmp_path / "disc_out.interp"),
        str(disc_file),
        "--cert",
        str(tmp_path / "disc_out.cert.json"),
    )
    assert code == 0
    check = json.loads((tmp_path / "disc_out.check.json").read_text())
    assert check["certificate"]["passed"] is True
    assert check["certificate"]["residual"] <= check["certificate"]["limit"]
    assert check["certificate"]["digest_match"]


def test_synth_escalates_over_degree_and_order(settings_file, disc_file, tmp_path):
    prefix = tmp_path / "esc"
    with patch("scripts.synth.solve", return_value=SdpSolution(SdpStatus.INFEASIBLE, message="mocked")) as solve:
        code = run(
            settings_file,
            "synth",
            str(disc_file),
            "--degree",
            "2",
            "--max-degree",
            "3",
            "--max-order",
            "2",
            "--out",
            str(prefix),
        )
    assert code == 2
    assert solve.call_count == 3
    report = json.loads((tmp_path / "esc.report.json").read_text())
    assert [(a["degree"], a["order"]) for a in report["attempts"]] == [(2, 1), (2, 2), (3, 2)]
    assert report["outcome"] == "exhausted"
    assert report["result"] is None
    assert not (tmp_path / "esc.interp").exists()


def test_synth_overlapping_sets_exhausts(settings_file, tmp_path):
    problem = tmp_path / "overlap.txt"
    problem.write_text("shared x;\nphi := x >= 0;\npsi := x >= 1;\n")
    assert run(settings_file, "synth", str(problem), "--degree", "1", "--max-degree", "2") == 2
    report = json.loads((tmp_path / "overlap.report.json").read_text())
    assert report["outcome"] == "exhausted"
    assert all(a["status"] != "VERIFIED" for a in report["attempts"])


def test_synth_sdpa_export_single_attempt(settings_file, disc_file, tmp_path):
    prefix = tmp_path / "ext"
    code = run(settings_file, "synth", str(disc_file), "--degree", "2", "--solver", "sdpa-export", "--out", str(prefix))
    assert code == 2
    assert (tmp_path / "ext.d2.s1.dat-s").exists()
    report = json.loads((tmp_path / "ext.report.json").read_text())
    assert [a["status"] for a in report["attempts"]] == ["EXPORTED"]


def test_synth_refused_by_limits(tmp_path, disc_file, mock_settings_data):
    mock_settings_data["settings"]["solver"]["max_psd_dim"] = 1
    mock_settings_data["settings"]["log_filename"] = str(tmp_path / "test.log")
    settings = tmp_path / "tight.json"
    settings.write_text(json.dumps(mock_settings_data))
    assert run(settings, "synth", str(disc_file), "--degree", "2", "--out", str(tmp_path / "tight")) == 2
    report = json.loads((tmp_path / "tight.report.json").read_text())
    assert report["attempts"][0]["status"] == "REFUSED"


def test_check_pass_and_certify(settings_file, disc_file, disc_interp, tmp_path):
    assert run(settings_file, "check", str(disc_interp), str(disc_file), "--certify", "--degree", "2") == 0
    report = json.loads((tmp_path / "disc.check.json").read_text())
    assert report["outcome"] == "pass"
    assert report["certification"]["status"] == "FEASIBLE"
    assert report["certification"]["margin"] == "0"
    assert report["certification"]["passed"] is True
    assert report["certification"]["residual"] <= report["certification"]["limit"]
    assert "outcome      PASS" in (tmp_path / "disc.check.txt").read_text()


def test_check_torus(settings_file, data_dir, tmp_path):
    prefix = tmp_path / "torus"
    code = run(
        settings_file,
        "check",
        str(data_dir / "torus_hp.interp"),
        str(data_dir / "torus.txt"),
        "--box=-8,8",
        "--samples",
        "200",
        "--out",
        str(prefix),
    )
    assert code == 0


def test_check_fail_writes_violations(settings_file, disc_file, tmp_path):
    bad = tmp_path / "bad.interp"
    bad.write_text("h := x^2 + y^2 - 2;\n")
    assert run(settings_file, "check", str(bad), str(disc_file)) == 2
    assert (tmp_path / "bad.violations.csv").exists()
    assert json.loads((tmp_path / "bad.check.json").read_text())["outcome"] == "fail"


def test_plot_writes_svg(settings_file, disc_file, disc_interp, tmp_path):
    out = tmp_path / "disc.svg"
    assert run(settings_file, "plot", str(disc_file), str(disc_interp), "--out", str(out), "--resolution", "20") == 0
    assert 'id="phi"' in out.read_text()


def test_plot_needs_two_free_variables(settings_file, tmp_path):
    problem = tmp_path / "interval.txt"
    problem.write_text("shared x;\nphi := x >= 0;\npsi := x <= -1;\n")
    interp = tmp_path / "interval.interp"
    interp.write_text("h := x + 1/2;\n")
    assert run(settings_file, "plot", str(problem), str(interp), "--out", str(tmp_path / "i.svg")) == 1


def test_plot_bad_fix(settings_file, data_dir, tmp_path):
    code = run(
        settings_file,
        "plot",
        str(data_dir / "torus.txt"),
        str(data_dir / "torus_hp.interp"),
        "--out",
        str(tmp_path / "t.svg"),
        "--fix",
        "z",
    )
    assert code == 1


def test_invalid_box_is_usage_error(settings_file, disc_file):
    assert run(settings_file, "synth", str(disc_file), "--degree", "2", "--box=3,1") == 1


def test_missing_problem_file(settings_file, tmp_path):
    assert run(settings_file, "synth", str(tmp_path / "nope.txt"), "--degree", "2") == 1


def test_parse_error_is_reported(settings_file, tmp_path, capsys):
    problem = tmp_path / "broken.txt"
    problem.write_text("shared x;\nphi := x > 0;\npsi := x <= -1;\n")
    assert run(settings_file, "synth", str(problem), "--degree", "1") == 1
    assert "ParseError: line 2" in capsys.readouterr().out


def test_check_report_write_failure_is_an_error(settings_file, disc_file, disc_interp, tmp_path):
    with patch("scripts.check.save_json", side_effect=TypeError("not JSON serializable")):
        assert run(settings_file, "check", str(disc_interp), str(disc_file)) == 1


def test_certify_fails_on_large_residual(settings_file, disc_file, disc_interp, tmp_path):
    with patch("scripts.check.certificate_residual", return_value=1.0):
        assert run(settings_file, "check", str(disc_interp), str(disc_file), "--certify", "--degree", "2") == 2
    certification = json.loads((tmp_path / "disc.check.json").read_text())["certification"]
    assert certification["status"] == "FEASIBLE"
    assert certification["residual"] == 1.0
    assert certification["passed"] is False


def test_same_seed_gives_identical_reports(settings_file, disc_file, disc_interp, tmp_path):
    prefix = tmp_path / "again"
    outputs = []
    for _ in range(2):
        assert run(settings_file, "synth", str(disc_file), "--degree", "2", "--seed", "7", "--out", str(prefix)) == 0
        assert run(settings_file, "check", str(disc_interp), str(disc_file), "--seed", "7", "--out", str(prefix)) == 0
        outputs.append(
            [
                (tmp_path / name).read_bytes()
                for name in ("again.report.json", "again.report.txt", "again.interp", "again.check.json", "again.check.txt")
            ]
        )
    assert outputs[0] == outputs[1]
