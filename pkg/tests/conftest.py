import json
import sys
from pathlib import Path

import pytest

PACKAGE_DIR = Path(__file__).resolve().parent.parent / "interpolsos"
sys.path.insert(0, str(PACKAGE_DIR))

from utils import logger_utils  # noqa: E402
from utils.formula_utils import parse_problem  # noqa: E402

DATA_DIR = PACKAGE_DIR / "data"


@pytest.fixture(autouse=True)
def reset_logger(monkeypatch):
    monkeypatch.setattr(logger_utils, "log_filename", None)


@pytest.fixture
def data_dir():
    return DATA_DIR


@pytest.fixture
def mock_settings_data():
    return {
        "settings": {
            "log_filename": "interpolsos.log",
            "solver": {"feas_tol": 1e-8, "max_iterations": 100},
            "synthesis": {"margin": "1", "epsilon": "0", "residual_factor": 10, "n_jobs": 1},
            "sampling": {"samples": 500, "seed": 0, "default_box": [-3, 3], "pos_tol": 1e-7},
            "plot": {"resolution": 40, "box": [-2, 2], "private_draws": 4},
        }
    }


@pytest.fixture
def settings_file(tmp_path, mock_settings_data):
    data = json.loads(json.dumps(mock_settings_data))
    data["settings"]["log_filename"] = str(tmp_path / "test.log")
    path = tmp_path / "settings.json"
    path.write_text(json.dumps(data))
    return path


@pytest.fixture
def disc_problem_text():
    return "shared x y;\nphi := 1 - x^2 - y^2 >= 0;\npsi := x^2 + y^2 - 4 >= 0;\n"


@pytest.fixture
def disc_instance(disc_problem_text):
    return parse_problem(disc_problem_text)


@pytest.fixture
def interval_instance():
    return parse_problem("shared x;\nphi := x >= 0 & 1 - x >= 0;\npsi := x + 3 <= 0 & x >= -4;\n")


@pytest.fixture
def torus_instance():
    return parse_problem((DATA_DIR / "torus.txt").read_text())


@pytest.fixture
def motzkin_instance():
    return parse_problem((DATA_DIR / "motzkin.txt").read_text())


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="Run the end-to-end example runs.")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: end-to-end runs on the bundled examples")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)
