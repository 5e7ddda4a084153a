"""
Logging configuration for hardyops.
Console output goes to stderr so command results on stdout stay parsable;
a JSON-lines file log records every structured event of a run.
"""

import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict


class JSONFormatter(logging.Formatter):
    """Custom formatter that outputs structured JSON logs."""

    def format(self, record: logging.LogRecord) -> str:
        log_entry = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }

        # Run context added by LoggerAdapter
        for field in ("run_id", "suite", "alpha", "lam", "event"):
            if hasattr(record, field):
                log_entry[field] = getattr(record, field)
        if hasattr(record, "extra_data"):
            log_entry.update(record.extra_data)

        if record.exc_info:
            log_entry["exception"] = self.formatException(record.exc_info)

        return json.dumps(log_entry, default=_json_default)


def _json_default(value: Any) -> Any:
    # numpy scalars and arrays show up in metric payloads
    if hasattr(value, "tolist"):
        return value.tolist()
    return str(value)


def get_logger(name: str) -> logging.Logger:
    """
    Get a configured logger instance with console and file output.

    The level comes from HARDYOPS_LOG_LEVEL (default INFO) and the file
    handler writes to HARDYOPS_LOG_DIR/hardyops.log (default ``logs``);
    an empty HARDYOPS_LOG_DIR disables the file handler.

    Args:
        name: The logger name (typically __name__)

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)

    if not logger.handlers:
        level = getattr(logging, os.getenv("HARDYOPS_LOG_LEVEL", "INFO").upper(), logging.INFO)
        logger.setLevel(level)

        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(level)
        console_handler.setFormatter(
            logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")
        )
        logger.addHandler(console_handler)

        log_dir = os.getenv("HARDYOPS_LOG_DIR", "logs")
        if log_dir:
            try:
                path = Path(log_dir)
                path.mkdir(parents=True, exist_ok=True)
                file_handler = logging.FileHandler(path / "hardyops.log", mode="a", encoding="utf-8")
                file_handler.setLevel(level)
                file_handler.setFormatter(JSONFormatter())
                logger.addHandler(file_handler)
            except OSError as e:
                logger.warning(f"Could not set up file logging: {e}")

        logger.propagate = False

    return logger


class LoggerAdapter(logging.LoggerAdapter):
    """
    Adapter that adds the run context (run_id, suite, model parameters)
    to every record of a verification run.
    """

    def __init__(self, logger: logging.Logger, extra: Dict[str, Any]):
        super().__init__(logger, extra)

    def process(self, msg: str, kwargs: Dict[str, Any]) -> tuple:
        if "extra" not in kwargs:
            kwargs["extra"] = {}
        kwargs["extra"].update(self.extra)
        return msg, kwargs

    def log_event(self, level: int, event: str, message: str, **extra_data):
        """Log an event with structured data."""
        extra = {"event": event}
        if extra_data:
            extra["extra_data"] = extra_data
        self.log(level, message, extra=extra)

    def info_event(self, event: str, message: str, **extra_data):
        self.log_event(logging.INFO, event, message, **extra_data)

    def error_event(self, event: str, message: str, **extra_data):
        self.log_event(logging.ERROR, event, message, **extra_data)

    def warning_event(self, event: str, message: str, **extra_data):
        self.log_event(logging.WARNING, event, message, **extra_data)


def event_logger(name: str, **context) -> LoggerAdapter:
    """Shortcut used by the numerical modules: a module logger wrapped with context."""
    return LoggerAdapter(get_logger(name), context)
