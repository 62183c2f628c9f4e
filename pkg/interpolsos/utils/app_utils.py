import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from dotenv import load_dotenv

from utils.exception_handler import exception_handler
from utils.logger_utils import log
from utils.sample_utils import parse_box
from utils.sdp_utils import SolverSettings

load_dotenv()

DEFAULT_SETTINGS_FILENAME = str(Path(__file__).resolve().parent.parent / "settings.json")

ENV_PREFIX = "INTERPOLSOS_"
ENV_SOLVER_KEYS = {
    "FEAS_TOL": ("feas_tol", float),
    "PSD_TOL": ("psd_tol", float),
    "MAX_ITERATIONS": ("max_iterations", int),
    "THREADS": ("threads", int),
}


@exception_handler()
def save_data_to_csv(data: pd.DataFrame, filename: str) -> Optional[int]:
    """
    Saves the provided data to a CSV file without the index.

    Parameters:
        data (pd.DataFrame): The DataFrame containing the data to be saved.
        filename (str): The name or path of the CSV file to save the data to.

    Returns:
        None. Logs a confirmation message, or an error if `data` is None.

    Example:
        >>> save_data_to_csv(report.violations_frame(), 'ovals.violations.csv')
        Data saved to ovals.violations.csv
    """
    if data is None:
        log(f"Error in save_data_to_csv. data is None.\n{data}")
        return None

    data.to_csv(filename, index=False)
    log(f"Data saved to {filename}")


@exception_handler(default_return=exit)
def extract_settings_data(settings_filename: str) -> Union[dict, Callable]:
    """
    Extracts and returns settings data from a JSON file.

    Logs a message upon successfully loading the settings, or logs the error and
    exits the program with status 1 if the file is missing or not valid JSON.

    Parameters:
        settings_filename (str): The path to the JSON settings file.

    Returns:
        dict: A dictionary containing the parsed settings data.
    """
    with open(settings_filename, "r") as f:
        settings_data = json.load(f)

    log(f"Successfully loaded settings from {settings_filename}")

    return settings_data


def settings_section(settings_data: dict, name: str) -> dict:
    """
    Returns a copy of one section of the settings file.

    Parameters:
        settings_data (dict): Parsed settings JSON with a top-level "settings" object.
        name (str): Section name, e.g. "solver", "synthesis", "sampling" or "plot".

    Returns:
        dict: The section, or an empty dict when it is missing.
    """
    return dict(settings_data.get("settings", {}).get(name, {}))


def resolve_solver_settings(settings_data: dict, overrides: Optional[dict] = None) -> SolverSettings:
    """
    Solver settings with precedence CLI override > environment > settings file > built-in default.

    Parameters:
        settings_data (dict): Parsed settings JSON; only keys of SolverSettings are read from "solver".
        overrides (dict, optional): Command-line values; None entries are ignored.

    Returns:
        SolverSettings: The merged settings. INTERPOLSOS_FEAS_TOL, INTERPOLSOS_PSD_TOL,
        INTERPOLSOS_MAX_ITERATIONS and INTERPOLSOS_THREADS are read from the environment
        (a .env file is loaded on import).
    """
    values = {
        k: v
        for k, v in settings_section(settings_data, "solver").items()
        if k in SolverSettings.__dataclass_fields__
    }
    for suffix, (key, cast) in ENV_SOLVER_KEYS.items():
        raw = os.environ.get(ENV_PREFIX + suffix)
        if raw:
            values[key] = cast(raw)
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    return SolverSettings(**values)


def text_digest(text: str) -> str:
    """SHA-256 hex digest of a UTF-8 string."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass
class RunConfig:
    """Every resolved option of a CLI run; embedded verbatim in reports."""

    command: str
    problem: str
    mode: str = "poly"
    degree: Optional[int] = None
    order: Optional[int] = None
    max_degree: Optional[int] = None
    max_order: Optional[int] = None
    margin: str = "1"
    epsilon: str = "0"
    solver: str = "embedded"
    sdpa_solution: Optional[str] = None
    seed: int = 0
    samples: int = 10_000
    box: Tuple[float, float] = (-10.0, 10.0)
    out: Optional[str] = None
    interpolant: Optional[str] = None
    certificate: Optional[str] = None
    certify: bool = False
    resolution: int = 400
    fix: List[str] = field(default_factory=list)
    solver_settings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["box"] = list(self.box)
        return data


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def save_json(data: dict, filename: str) -> None:
    """
    Writes a report as indented JSON with sorted keys.

    The document is serialized before the file is opened, so a value that cannot
    be written leaves no partial file behind. Errors propagate to the calling
    command, which turns them into a non-zero exit status.

    Args:
        data (dict): The report. NumPy scalars and arrays are converted to plain values.
        filename (str): Destination path.

    Raises:
        TypeError: If `data` holds a value JSON cannot represent.
        OSError: If the file cannot be written.
    """
    text = json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n"
    with open(filename, "w") as f:
        f.write(text)
    log(f"Report saved to {filename}")


def save_text(text: str, filename: str) -> None:
    """
    Writes a plain-text report. Errors propagate to the calling command.

    Args:
        text (str): The rendered report.
        filename (str): Destination path.
    """
    with open(filename, "w") as f:
        f.write(text)
    log(f"Report saved to {filename}")


def _box(value: Optional[str], fallback) -> Tuple[float, float]:
    if value is None:
        lo, hi = fallback
        return float(lo), float(hi)
    return parse_box(value)


def build_run_config(args, settings_data: dict) -> RunConfig:
    """Merges parsed arguments with the settings file into a RunConfig."""
    synthesis = settings_section(settings_data, "synthesis")
    sampling = settings_section(settings_data, "sampling")
    plot = settings_section(settings_data, "plot")
    command = args.command

    def arg(name, default=None):
        value = getattr(args, name, None)
        return default if value is None else value

    certify = bool(arg("certify", False))
    margin_default = "0" if certify else str(synthesis.get("margin", "1"))
    box_default = plot.get("box", [-3, 3]) if command == "plot" else sampling.get("default_box", [-10, 10])
    solver_overrides = {
        "feas_tol": arg("feas_tol"),
        "max_iterations": arg("max_iterations"),
        "threads": arg("threads"),
    }
    return RunConfig(
        command=command,
        problem=args.problem,
        mode=arg("mode", "poly"),
        degree=arg("degree"),
        order=arg("order"),
        max_degree=arg("max_degree"),
        max_order=arg("max_order"),
        margin=str(arg("margin", margin_default)),
        epsilon=str(arg("epsilon", synthesis.get("epsilon", "0"))),
        solver=arg("solver", "embedded"),
        sdpa_solution=arg("sdpa_solution"),
        seed=int(arg("seed", sampling.get("seed", 0))),
        samples=int(arg("samples", sampling.get("samples", 10_000))),
        box=_box(arg("box"), box_default),
        out=arg("out"),
        interpolant=arg("interpolant"),
        certificate=arg("cert"),
        certify=certify,
        resolution=int(arg("resolution", plot.get("resolution", 400))),
        fix=list(arg("fix", [])),
        solver_settings={k: v for k, v in solver_overrides.items() if v is not None},
    )
