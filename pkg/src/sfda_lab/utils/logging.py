"""Logging configuration and utilities."""

import logging
import logging.handlers
from pathlib import Path
from typing import Any

from rich.logging import RichHandler

from ..config.models import LoggingConfig

PACKAGE_LOGGER = "sfda_lab"

_FILE_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)-30s | %(message)s"


def _owned(handler: logging.Handler) -> bool:
    return getattr(handler, "_sfda_lab", False)


def setup_logging(config: LoggingConfig) -> logging.Logger:
    """Install console and file handlers on the ``sfda_lab`` logger.

    Calling it again replaces the handlers installed by the previous call, so
    several commands can run in one process. Records still propagate to the
    root logger.

    Args:
        config: Logging configuration object.

    Returns:
        The package logger.
    """
    logger = logging.getLogger(PACKAGE_LOGGER)
    level = logging.getLevelName(config.level)
    logger.setLevel(level)

    for handler in [h for h in logger.handlers if _owned(h)]:
        logger.removeHandler(handler)
        handler.close()

    handlers: list[logging.Handler] = []
    if config.console:
        console_handler = RichHandler(
            rich_tracebacks=True,
            show_time=True,
            show_path=False,
        )
        console_handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
        handlers.append(console_handler)

    if config.file:
        file_path = Path(config.file)
        file_path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.handlers.RotatingFileHandler(
            filename=file_path,
            maxBytes=config.max_size_mb * 1024 * 1024,
            backupCount=config.max_files,
            encoding="utf-8",
        )
        file_handler.setFormatter(
            logging.Formatter(_FILE_FORMAT, datefmt="%Y-%m-%d %H:%M:%S")
        )
        handlers.append(file_handler)

    for handler in handlers:
        handler.setLevel(level)
        handler._sfda_lab = True  # type: ignore[attr-defined]
        logger.addHandler(handler)
    return logger


class StructuredLogger:
    """Structured logger that renders keyword fields as ``k=v`` pairs."""

    def __init__(self, name: str):
        self.logger = logging.getLogger(name)

    @staticmethod
    def _render(message: str, fields: dict[str, Any]) -> str:
        extra_data = " | ".join(f"{k}={_fmt(v)}" for k, v in fields.items())
        return f"{message} | {extra_data}" if extra_data else message

    def info(self, message: str, **kwargs: Any) -> None:
        if self.logger.isEnabledFor(logging.INFO):
            self.logger.info(self._render(message, kwargs))

    def error(self, message: str, **kwargs: Any) -> None:
        self.logger.error(self._render(message, kwargs))

    def warning(self, message: str, **kwargs: Any) -> None:
        self.logger.warning(self._render(message, kwargs))

    def debug(self, message: str, **kwargs: Any) -> None:
        if self.logger.isEnabledFor(logging.DEBUG):
            self.logger.debug(self._render(message, kwargs))


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.4g}"
    if isinstance(value, tuple):
        return "x".join(str(v) for v in value)
    return str(value)


def get_logger(name: str) -> StructuredLogger:
    """Get a structured logger, typically for ``__name__``."""
    return StructuredLogger(name)
