import logging
import os
import uuid
from contextvars import ContextVar
from datetime import datetime, timezone
from typing import Any, Dict, Optional

import colorlog
from pythonjsonlogger import jsonlogger

from qgamma.config import settings

# Context variables for storing run-scoped data
run_id: ContextVar[str] = ContextVar("run_id", default="")
method: ContextVar[str] = ContextVar("method", default="")
base: ContextVar[int] = ContextVar("base", default=0)


class CustomJsonFormatter(jsonlogger.JsonFormatter):
    """JSON formatter that stamps run context on every record."""

    def add_fields(
        self,
        log_record: Dict[str, Any],
        record: logging.LogRecord,
        message_dict: Dict[str, Any],
    ) -> None:
        super().add_fields(log_record, record, message_dict)

        log_record["timestamp"] = datetime.now(timezone.utc).isoformat()
        log_record["level"] = record.levelname
        log_record["component"] = record.name
        log_record["run_id"] = run_id.get()

        if method.get():
            log_record["method"] = method.get()
        if base.get():
            log_record["base"] = base.get()

        if hasattr(record, "data"):
            log_record["data"] = record.data


def setup_logger(name: Optional[str] = None) -> logging.Logger:
    """
    Set up a logger with a colored console handler and an optional JSON file handler.

    Args:
        name (str, optional): Logger name. If None, defaults to the root 'qgamma' logger.

    Returns:
        logging.Logger: Configured logger instance.
    """
    if name and name.startswith("qgamma."):
        name = name[len("qgamma.") :]
    logger_name = f"qgamma.{name}" if name else "qgamma"
    logger = logging.getLogger(logger_name)

    # Handlers filter
    logger.setLevel(logging.DEBUG)
    logger.propagate = False

    if not logger.handlers:
        console_handler = logging.StreamHandler()
        console_formatter = colorlog.ColoredFormatter(
            "%(log_color)s%(levelname)-8s%(reset)s %(blue)s%(name)s%(reset)s - "
            "%(log_color)s%(message)s%(reset)s",
            log_colors={
                "DEBUG": "white",
                "INFO": "green",
                "WARNING": "yellow",
                "ERROR": "red",
                "CRITICAL": "red,bg_white",
            },
            style="%",
        )
        console_handler.setFormatter(console_formatter)
        console_handler.setLevel(settings.LOG_LEVEL.upper())
        logger.addHandler(console_handler)

        if settings.LOG_JSON_FILE:
            os.makedirs(settings.LOG_DIR, exist_ok=True)
            log_file = os.path.join(
                settings.LOG_DIR, f"{datetime.now().strftime('%Y-%m-%d')}.jsonl"
            )
            json_handler = logging.FileHandler(log_file)
            json_handler.setFormatter(
                CustomJsonFormatter(
                    "%(timestamp)s %(level)s %(name)s %(run_id)s %(message)s %(data)s"
                )
            )
            json_handler.setLevel(logging.DEBUG)
            logger.addHandler(json_handler)

    return logger


def set_console_level(level: str) -> None:
    """Change the console level of every qgamma logger created so far."""
    for logger_name, logger in logging.root.manager.loggerDict.items():
        if not logger_name.startswith("qgamma") or not isinstance(
            logger, logging.Logger
        ):
            continue
        for handler in logger.handlers:
            if not isinstance(handler, logging.FileHandler):
                handler.setLevel(level.upper())


def set_run_id(new_id: Optional[str] = None) -> str:
    """Set a new run ID or generate one if not provided."""
    new_run_id = new_id or uuid.uuid4().hex
    run_id.set(new_run_id)
    return new_run_id


def get_run_id() -> str:
    return run_id.get()


def set_method(name: str) -> None:
    method.set(name)


def set_base(value: int) -> None:
    base.set(value)
