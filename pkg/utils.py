"""
Utility functions for hardyops.
Includes environment loading, the error-class bases, geometric bracket growth,
canonical serialization helpers, and report persistence.
"""

import csv
import hashlib
import io
import json
import math
import os
import uuid
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, Optional, Sequence, Tuple

from dotenv import load_dotenv


class HardyOpsError(Exception):
    """Base class for every error raised by hardyops."""


class InputError(HardyOpsError, ValueError):
    """Base class for invalid arguments and inadmissible requests (caller can fix)."""


class NumericalError(HardyOpsError, ArithmeticError):
    """Base class for failures of the numerics themselves."""


class DomainError(InputError):
    """Argument outside the domain of a function."""


class RangeError(InputError):
    """Exponent or parameter outside the range a statement is made for."""

    def __init__(self, message: str, condition: str = ""):
        super().__init__(message)
        self.condition = condition or message


class PreconditionError(InputError):
    """A stated convergence or validity precondition does not hold."""


class UsageError(InputError):
    """Invalid command-line usage or configuration."""


class BracketError(NumericalError):
    """Root bracket could not be grown to enclose the target."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not converge to the requested tolerance."""


def load_env() -> Dict[str, Any]:
    """
    Load environment variables from .env file and return configuration.

    Returns:
        Dictionary of configuration values with appropriate defaults
    """
    load_dotenv()

    config = {
        "HARDYOPS_THREADS": os.getenv("HARDYOPS_THREADS", "1"),
        "HARDYOPS_LOG_DIR": os.getenv("HARDYOPS_LOG_DIR", "logs"),
        "HARDYOPS_LOG_LEVEL": os.getenv("HARDYOPS_LOG_LEVEL", "INFO").upper(),
        "HARDYOPS_OUTPUT_DIR": os.getenv("HARDYOPS_OUTPUT_DIR", "."),
    }

    return config


def validate_env(config: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """
    Validate the environment configuration and coerce typed values.

    Raises:
        ValueError: naming every invalid variable
    """
    config = dict(config if config is not None else load_env())
    problems = []

    try:
        threads = int(config["HARDYOPS_THREADS"])
        if threads < 1:
            raise ValueError
        config["HARDYOPS_THREADS"] = threads
    except (TypeError, ValueError):
        problems.append(f"HARDYOPS_THREADS={config['HARDYOPS_THREADS']!r} (positive integer expected)")

    if config["HARDYOPS_LOG_LEVEL"] not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
        problems.append(f"HARDYOPS_LOG_LEVEL={config['HARDYOPS_LOG_LEVEL']!r}")

    if problems:
        raise ValueError(f"Invalid environment variables: {', '.join(problems)}")

    return config


def thread_cap() -> int:
    """Parallelism cap from HARDYOPS_THREADS; invalid values fall back to 1."""
    try:
        return validate_env()["HARDYOPS_THREADS"]
    except ValueError:
        return 1


def grow_geometrically(
    accept: Callable[[float], bool],
    start: float,
    step: Callable[[float], float],
    max_steps: int = 200,
    error: type = BracketError,
    what: str = "bracket",
) -> float:
    """
    Advance a parameter by repeated ``step`` until ``accept`` holds.

    The numerical counterpart of a retry loop with backoff: used to grow
    root brackets toward a pole and dyadic truncation ranges until the
    tails are negligible.

    Returns:
        The first accepted value

    Raises:
        ``error`` if no value is accepted within ``max_steps`` steps
    """
    value = start
    for _ in range(max_steps + 1):
        if accept(value):
            return value
        value = step(value)
    raise error(f"{what} not reached after {max_steps} geometric steps (last value {value!r})")


def format_float(value: float) -> str:
    """17 significant digits, the CSV float format."""
    return format(float(value), ".17g")


def canonical_json(payload: Any) -> str:
    """Deterministic JSON text: sorted keys, compact separators."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), default=_to_builtin)


def config_digest(payload: Any) -> str:
    """SHA-256 hex digest of the canonical JSON of a configuration."""
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def _to_builtin(value: Any) -> Any:
    if hasattr(value, "tolist"):
        return value.tolist()
    if hasattr(value, "model_dump"):
        return value.model_dump()
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def csv_text(header: Sequence[str], rows: Iterable[Sequence[float]]) -> str:
    """CSV text with LF line endings and 17-significant-digit floats."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(v) for v in row])
    return buffer.getvalue()


class ReportWriter:
    """Writes JSON verdict reports and CSV dumps; reads JSON configuration files."""

    def __init__(self, path: Optional[str] = None):
        self.path = Path(path) if path else None

    def exists(self) -> bool:
        return self.path is not None and self.path.exists()

    def load(self) -> Optional[Dict[str, Any]]:
        """
        Load a JSON document from the path.

        Returns:
            The parsed dictionary, or None if there is no file
        """
        if not self.exists():
            return None
        with open(self.path, "r", encoding="utf-8") as f:
            return json.load(f)

    def write_text(self, text: str) -> Optional[Path]:
        """Write text to the path (LF endings); returns the path or None for stdout use."""
        if self.path is None:
            return None
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        return self.path

    def write_json(self, payload: Any) -> str:
        text = json.dumps(payload, sort_keys=True, indent=2, default=_to_builtin) + "\n"
        self.write_text(text)
        return text

    def write_csv(self, header: Sequence[str], rows: Iterable[Sequence[float]]) -> str:
        text = csv_text(header, rows)
        self.write_text(text)
        return text


def create_run_context(**kwargs) -> Dict[str, Any]:
    """
    Create a context dictionary for run tracking in the logs.

    Args:
        **kwargs: Additional context fields

    Returns:
        Context dictionary with run_id and other fields
    """
    return {"run_id": str(uuid.uuid4()), **kwargs}


def dyadic_range(lo: float, hi: float, base: float = 2.0) -> Tuple[float, ...]:
    """Powers of ``base`` inside [lo, hi] (inclusive up to rounding)."""
    if lo <= 0 or hi < lo:
        return ()
    j_lo = math.ceil(math.log(lo, base) - 1e-12)
    j_hi = math.floor(math.log(hi, base) + 1e-12)
    return tuple(base ** j for j in range(j_lo, j_hi + 1))
