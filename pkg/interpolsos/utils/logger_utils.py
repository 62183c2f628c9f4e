import json
from datetime import datetime
from typing import Optional

from rich.console import Console

log_filename: Optional[str] = None

console = Console(highlight=False, markup=False, soft_wrap=True)


def initialize_logger(settings_filename: str) -> None:
    """
    Initializes the logger by loading the log file path from a JSON settings file.

    Reads the `settings_filename` JSON file to extract the `log_filename` value,
    which determines where log messages will be appended. If the file does not exist,
    is invalid JSON, or does not contain the required key, the program exits with status 1.

    This function modifies the global variable `log_filename` with the log file path.

    Parameters:
        settings_filename (str): The path to the JSON settings file.

    Returns:
        None
    """
    global log_filename

    try:
        with open(settings_filename, "r") as f:
            settings_data = json.load(f)
            log_filename = settings_data["settings"]["log_filename"]

    except FileNotFoundError:
        console.print(f"Error: File {settings_filename} not found.")
        exit(1)
    except json.JSONDecodeError:
        console.print(f"Error: File {settings_filename} is not a valid JSON.")
        exit(1)
    except KeyError:
        console.print(f"Error: log_filename not found in {settings_filename}.")
        exit(1)


def log(message: str) -> None:
    """
    Logs a message to the console and, once initialized, appends it to the log file.

    Every line carries the current timestamp. Before `initialize_logger()` has been
    called the message only goes to the console, so library code can log freely.

    Parameters:
        message (str): The log message to be recorded.

    Returns:
        None
    """
    try:
        formatted_now = datetime.now().strftime("%Y-%m-%d %H:%M:%S")
        log_message = f"[{formatted_now}] {message}"

        console.print(log_message)

        if log_filename is not None:
            with open(log_filename, "a") as log_file:
                log_file.write(log_message + "\n")

    except Exception as e:
        console.print(f"Logging failed: {e}")
        return None
