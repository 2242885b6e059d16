"""
Structured logging and command timing for the piwb CLI.

Adds run ID tracking, structured JSON log formatting, and timing for every
command, so a CI log can be filtered down to one invocation.
"""

from __future__ import annotations

import functools
import json
import logging
import time
import uuid
from contextvars import ContextVar
from typing import Callable

# ── Run context ───────────────────────────────────────────────────────────────

run_id_var: ContextVar[str] = ContextVar("run_id", default="")


def get_run_id() -> str:
    return run_id_var.get()


# ── Structured JSON formatter ─────────────────────────────────────────────────


class StructuredLogFormatter(logging.Formatter):
    """Emit logs as JSON lines, one object per record."""

    def format(self, record: logging.LogRecord) -> str:
        log_entry = {
            "timestamp": self.formatTime(record, self.datefmt),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }

        run_id = get_run_id()
        if run_id:
            log_entry["run_id"] = run_id

        if hasattr(record, "extra_data"):
            log_entry["data"] = record.extra_data

        if record.exc_info and record.exc_info[1]:
            log_entry["exception"] = str(record.exc_info[1])

        return json.dumps(log_entry, ensure_ascii=False)


# ── Command timing ────────────────────────────────────────────────────────────


def timed_command(name: str) -> Callable:
    """Assign a run ID to the wrapped command and log its start, end and exit code."""

    def decorator(fn: Callable[..., int]) -> Callable[..., int]:
        @functools.wraps(fn)
        def wrapper(*args, **kwargs) -> int:
            token = run_id_var.set(str(uuid.uuid4())[:8])
            logger = logging.getLogger("piwb.command")
            t0 = time.perf_counter()
            logger.info("→ %s", name)
            try:
                code = fn(*args, **kwargs)
                elapsed_ms = (time.perf_counter() - t0) * 1000
                logger.info(
                    "← %s exit=%d (%.0fms)",
                    name,
                    code,
                    elapsed_ms,
                    extra={"extra_data": {"exit_code": code, "latency_ms": round(elapsed_ms, 1)}},
                )
                return code
            finally:
                run_id_var.reset(token)

        return wrapper

    return decorator


def configure_logging(level: str = "WARNING", structured: bool = False) -> None:
    """Configure root logger with optional structured JSON output."""
    root = logging.getLogger()
    root.setLevel(level.upper())

    # Remove existing handlers
    for handler in root.handlers[:]:
        root.removeHandler(handler)

    handler = logging.StreamHandler()
    if structured:
        handler.setFormatter(StructuredLogFormatter())
    else:
        handler.setFormatter(logging.Formatter("%(levelname)s | %(name)s | %(message)s"))
    root.addHandler(handler)
