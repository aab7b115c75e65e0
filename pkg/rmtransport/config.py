"""
Problem configuration files and environment settings.

A configuration file is a flat list of ``key = value`` lines whose keys are the ProblemSpec fields, plus
``problem`` to start from a built-in problem and ``sigma_a`` as an alternative to ``sigma_s``. A ``[problem]``
section header is accepted but not required.
"""
from dataclasses import fields
from pathlib import Path
import configparser
import logging
import os

from .errors import ConfigurationError
from .harness import ProblemSpec, builtin_problem, with_overrides

logger = logging.getLogger(__name__)

SECTION = "problem"
THREADS_VARIABLE = "TRANSPORT_THREADS"
FIELD_TYPES = {spec_field.name: spec_field.type for spec_field in fields(ProblemSpec)}


def _parse(key: str, raw: str):
    value = raw.strip()
    if key == "problem":
        return value
    if key == "sigma_a":
        return float(value)
    if key not in FIELD_TYPES:
        raise ConfigurationError(f"Unknown configuration key '{key}'")
    kind = FIELD_TYPES[key]
    if kind is int:
        number = float(value)
        if number != int(number):
            raise ConfigurationError(f"'{key}' must be an integer, got {value}")
        return int(number)
    return kind(value)


def read_config(path) -> dict:
    """
    Reads a configuration file into typed values.

    Parameters
    ----------
    path : str or Path

    Returns
    -------
    dict
        Values keyed by field name, converted to the field types.

    Raises
    ------
    ConfigurationError
        If the file is missing or malformed, or holds an unknown key or a value of the wrong type.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as error:
        raise ConfigurationError(f"Cannot read configuration file {path}: {error}") from error
    if not text.lstrip().startswith("["):
        text = f"[{SECTION}]\n{text}"
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as error:
        raise ConfigurationError(f"Malformed configuration file {path}: {error}") from error
    if not parser.has_section(SECTION):
        raise ConfigurationError(f"Configuration file {path} has no [{SECTION}] section")
    values = {}
    for key, raw in parser.items(SECTION):
        try:
            values[key] = _parse(key, raw)
        except ValueError as error:
            raise ConfigurationError(f"Invalid value for '{key}' in {path}: {raw}") from error
    logger.info(f"Read {len(values)} settings from {path}")
    return values


def _resolve_absorption(values: dict, base: ProblemSpec) -> dict:
    """Turns a sigma_a entry into sigma_s = sigma_t - sigma_a."""
    values = dict(values)
    sigma_a = values.pop("sigma_a", None)
    if sigma_a is None:
        return values
    sigma_t = values.get("sigma_t", base.sigma_t)
    sigma_s = sigma_t - sigma_a
    if "sigma_s" in values and abs(values["sigma_s"] - sigma_s) > 1e-12 * max(1.0, sigma_t):
        raise ConfigurationError(f"sigma_s = {values['sigma_s']} and sigma_a = {sigma_a} do not add up to "
                                 f"sigma_t = {sigma_t}")
    values["sigma_s"] = sigma_s
    return values


def load_problem(path=None, problem: str = None, **overrides) -> ProblemSpec:
    """
    Builds a problem from a built-in problem, a configuration file and overrides, in increasing precedence.

    Parameters
    ----------
    path : str or Path, optional
        Configuration file.
    problem : str, optional
        Built-in problem name; takes precedence over a ``problem`` key of the file.
    **overrides
        ProblemSpec fields; None values are ignored.

    Returns
    -------
    ProblemSpec
    """
    values = read_config(path) if path is not None else {}
    name = problem or values.pop("problem", None)
    values.pop("problem", None)
    base = builtin_problem(name) if name else ProblemSpec()
    values = _resolve_absorption(values, base)
    values.update({key: value for key, value in overrides.items() if value is not None})
    return with_overrides(base, **values)


def transport_threads(environ=None) -> int:
    """Number of sweep threads from TRANSPORT_THREADS, 1 when unset."""
    environ = os.environ if environ is None else environ
    raw = environ.get(THREADS_VARIABLE)
    if raw is None or not raw.strip():
        return 1
    try:
        threads = int(raw.strip())
    except ValueError:
        raise ConfigurationError(f"{THREADS_VARIABLE} must be an integer, got '{raw}'") from None
    if threads < 1:
        raise ConfigurationError(f"{THREADS_VARIABLE} must be at least 1, got {threads}")
    return threads
