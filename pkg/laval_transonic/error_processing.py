"""
Error-processing functions and the exception classes raised by the solvers
"""

import json
import logging
import sys

from . constants import (EXIT_CONFIG_ERROR,
                         EXIT_SOLVER_FAILURE)


class LavalError(Exception):
    """
    Base class of every error the package raises deliberately.

    `history` optionally carries the iterate residuals accumulated before the failure, so that
    a divergence can be reported together with how it developed.
    """

    def __init__(self, message, *, history=None):
        super().__init__(message)
        self.message = message
        self.history = list(history) if history is not None else []


class GasDomainError(LavalError, ValueError):
    pass


class NozzleParameterError(LavalError, ValueError):
    pass


class BoundaryMapError(LavalError):
    pass


class ConfigError(LavalError, ValueError):
    pass


class SolverDivergenceError(LavalError):
    pass


class InnerSolveError(SolverDivergenceError):
    pass


class SubsonicityLostError(SolverDivergenceError):
    pass


class OuterDivergenceError(SolverDivergenceError):
    pass


class ContractionStallError(SolverDivergenceError):
    pass


class CFLCollapseError(SolverDivergenceError):
    pass


class CharacteristicTraceError(SolverDivergenceError):
    pass


class SignViolationError(SolverDivergenceError):
    pass


class MassFluxMismatchError(LavalError):
    pass


class CurlResidualError(LavalError):
    pass


class JacobianDegeneracyError(LavalError):
    pass


class SonicSetError(LavalError):
    pass


class ClassificationMismatchError(LavalError):
    pass


class FatalDeveloperError(RuntimeError):
    pass


def format_error_text(string):
    """
    Formats a string that is intended as an error message. Kept as a single hook so that console
    highlighting can be added in one place.
    """

    formatted_string = string
    return formatted_string


def log_nonfatal_error(string):
    """
    Logs an error message for a nonfatal error
    """

    logging.getLogger(__name__).warning(format_error_text(string))


def exit_code_for(exc):
    """
    Maps an exception to the exit status of the command-line front end.

    Configuration and parameter problems exit with status 2; everything a solver or a
    post-processing check gives up on exits with status 1.
    """
    if isinstance(exc, (ConfigError, NozzleParameterError, GasDomainError)):
        return EXIT_CONFIG_ERROR
    return EXIT_SOLVER_FAILURE


def error_payload(exc):
    """
    Returns the machine-readable description of `exc` that the CLI emits as JSON.
    """
    history = getattr(exc, "history", [])
    return {
        "error": type(exc).__name__,
        "message": str(exc),
        "exit_code": exit_code_for(exc),
        "history": [_jsonable(item) for item in history],
    }


def _jsonable(item):
    # Iterate histories hold floats or small dicts of floats
    if isinstance(item, dict):
        return {str(key): _jsonable(value) for key, value in item.items()}
    if isinstance(item, (list, tuple)):
        return [_jsonable(value) for value in item]
    if isinstance(item, (int, str, bool)) or item is None:
        return item
    return float(item)


def fatal_error_without_traceback(exc):
    """
    Logs a fatal error, writes its machine-readable payload to stderr as JSON, and returns the exit
    status for the command-line front end instead of letting a traceback escape.

    A traceback gives information that is irrelevant to the user of a batch run (e.g., where in the
    code the exception occurred).
    """

    errmsg_list = []
    errmsg_list.append("FATAL ERROR! ")
    errmsg_list.append(f"{type(exc).__name__}: {exc}")
    error_message = "".join(errmsg_list)

    logging.getLogger(__name__).critical(format_error_text(error_message))
    payload = error_payload(exc)
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    return payload["exit_code"]


def fatal_developer_error(string):
    """
    Raises fatal developer error: An error that should NOT occur under any conceivable set of user
    inputs. It can result only from developer error or an erroneous assumption by the developer.
    """

    errmsg_list = []
    errmsg_list.append("\nFATAL DEVELOPER ERROR. THIS SHOULD NOT HAPPEN!")
    if string:
        errmsg_list.append("\n" + string)
    error_message = "".join(errmsg_list)
    logging.getLogger(__name__).critical(format_error_text(error_message))
    raise FatalDeveloperError(error_message)
