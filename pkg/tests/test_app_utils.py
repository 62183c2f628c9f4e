import os
import json
import numpy as np
import pandas as pd
import pytest
from types import SimpleNamespace
from utils.app_utils import (
    RunConfig,
    build_run_config,
    extract_settings_data,
    resolve_solver_settings,
    save_data_to_csv,
    save_json,
    save_text,
    settings_section,
)
from utils.parser_utils import get_parsed_arguments


@pytest.fixture
def sample_dataframe():
    return pd.DataFrame({"clause": ["phi[0]", "psi[0]"], "h": [-0.5, 0.25], "x": [1.0, 2.0]})


@pytest.fixture
def temp_json_file(tmp_path):
    settings = {"key": "value", "number": 42}
    path = tmp_path / "settings.json"
    with open(path, "w") as f:
        json.dump(settings, f)
    return path


@pytest.fixture
def clean_env(monkeypatch):
    for key in list(os.environ):
        if key.startswith("INTERPOLSOS_"):
            monkeypatch.delenv(key)
    return monkeypatch


def test_save_data_to_csv(sample_dataframe, tmp_path):
    path = tmp_path / "violations.csv"
    save_data_to_csv(sample_dataframe, path)
    assert os.path.exists(path)
    pd.testing.assert_frame_equal(sample_dataframe, pd.read_csv(path))


def test_save_data_to_csv_none():
    assert save_data_to_csv(None, "test.csv") is None


def test_extract_settings_data(temp_json_file):
    settings = extract_settings_data(temp_json_file)
    assert settings == {"key": "value", "number": 42}


def test_extract_settings_data_invalid():
    with pytest.raises(SystemExit):
        extract_settings_data("nonexistent.json")


def test_settings_section(mock_settings_data):
    assert settings_section(mock_settings_data, "sampling")["samples"] == 500
    assert settings_section(mock_settings_data, "missing") == {}


def test_solver_settings_from_file(clean_env, mock_settings_data):
    settings = resolve_solver_settings(mock_settings_data)
    assert settings.max_iterations == 100
    assert settings.psd_tol == 1e-8


def test_solver_settings_precedence(clean_env, mock_settings_data):
    clean_env.setenv("INTERPOLSOS_MAX_ITERATIONS", "50")
    clean_env.setenv("INTERPOLSOS_FEAS_TOL", "1e-6")
    settings = resolve_solver_settings(mock_settings_data, {"feas_tol": 1e-9, "threads": None})
    assert settings.max_iterations == 50
    assert settings.feas_tol == 1e-9
    assert settings.threads == 1


def test_solver_settings_ignore_unknown_keys(clean_env):
    settings = resolve_solver_settings({"settings": {"solver": {"feas_tol": 1e-7, "backend": "mosek"}}})
    assert settings.feas_tol == 1e-7


def test_build_run_config_synth(mock_settings_data):
    args = get_parsed_arguments(["synth", "ovals.txt", "--degree", "7", "--order", "4", "--seed", "3"])
    cfg = build_run_config(args, mock_settings_data)
    assert isinstance(cfg, RunConfig)
    assert (cfg.degree, cfg.order, cfg.seed) == (7, 4, 3)
    assert cfg.margin == "1"
    assert cfg.samples == 500
    assert cfg.box == (-3.0, 3.0)
    assert cfg.solver_settings == {}
    assert cfg.to_dict()["box"] == [-3.0, 3.0]


def test_build_run_config_certify_defaults_margin_to_zero(mock_settings_data):
    args = get_parsed_arguments(["check", "h.interp", "ovals.txt", "--certify", "--feas-tol", "1e-7"])
    cfg = build_run_config(args, mock_settings_data)
    assert cfg.margin == "0"
    assert cfg.certify
    assert cfg.solver_settings == {"feas_tol": 1e-7}


def test_build_run_config_plot_box(mock_settings_data):
    args = get_parsed_arguments(["plot", "curves.txt", "h.interp", "--out", "c.svg"])
    cfg = build_run_config(args, mock_settings_data)
    assert cfg.box == (-2.0, 2.0)
    assert cfg.resolution == 40


def test_build_run_config_bad_box(mock_settings_data):
    args = SimpleNamespace(command="synth", problem="p.txt", box="3,1")
    with pytest.raises(ValueError):
        build_run_config(args, mock_settings_data)


def test_save_json_and_text(tmp_path):
    save_json({"b": 1, "a": [1, 2]}, str(tmp_path / "report.json"))
    assert json.loads((tmp_path / "report.json").read_text()) == {"a": [1, 2], "b": 1}
    save_text("verdict PASS\n", str(tmp_path / "report.txt"))
    assert (tmp_path / "report.txt").read_text() == "verdict PASS\n"


def test_save_json_converts_numpy_scalars(tmp_path):
    residual = np.float64(2.5e-9)
    save_json({"passed": residual <= 1e-6, "residual": residual, "n": np.int64(3)}, str(tmp_path / "r.json"))
    assert json.loads((tmp_path / "r.json").read_text()) == {"n": 3, "passed": True, "residual": 2.5e-9}


def test_save_json_leaves_no_partial_file(tmp_path):
    path = tmp_path / "r.json"
    with pytest.raises(TypeError):
        save_json({"a": 1, "b": object()}, str(path))
    assert not path.exists()


def test_save_json_failure_propagates(tmp_path):
    with pytest.raises(FileNotFoundError):
        save_json({"a": 1}, str(tmp_path / "missing" / "report.json"))
