import sys
import json
import functools

from utils.errors import InterpolSosError
from utils.logger_utils import log


def exception_handler(default_return=None):
    """
    A decorator that catches exceptions, logs them and returns a fallback value.

    Used on the outer surface only (CLI commands and file helpers); library
    functions raise their typed errors and let the caller decide.

    Args:
        default_return (Any, optional): The value to return if an exception occurs.
            If it is the builtin `exit`, the program exits with status 1; if it is
            another callable, its result is returned. Defaults to None.

    Returns:
        function: A wrapped function that handles exceptions.

    Exceptions Caught:
        - InterpolSosError and subclasses (parse, degree, solver limit, sampling...)
        - ValueError, TypeError, ArithmeticError
        - FileNotFoundError, OSError, json.JSONDecodeError
        - General Exception (any other unexpected errors)
    """

    def exception_handler_decorator(func):
        @functools.wraps(func)
        def exception_handler_wrapper(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except (
                InterpolSosError,
                IndexError,
                ValueError,
                TypeError,
                ArithmeticError,
                FileNotFoundError,
                json.JSONDecodeError,
                OSError,
            ) as e:
                exception_type = type(e).__name__
                log(f"{exception_type}: {e}")
            except Exception as e:
                exception_type = "Exception"
                log(f"{exception_type}: {e}")

            if default_return is exit:
                log("Exiting program due to an error.")
                sys.exit(1)
            elif callable(default_return):
                return default_return()
            return default_return

        return exception_handler_wrapper

    return exception_handler_decorator
