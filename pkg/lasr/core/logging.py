"""Logging setup helpers."""

import logging
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path

from lasr.core.config import settings


def configure_logging(level: str | None = None) -> None:
    """Install the stderr handler on the package logger.

    Args:
        level: Log level name; defaults to ``settings.LOG_LEVEL``.
    """
    root = logging.getLogger("lasr")
    root.setLevel(level or settings.LOG_LEVEL)
    if not any(getattr(h, "_lasr_console", False) for h in root.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(settings.LOG_FORMAT))
        handler._lasr_console = True  # type: ignore[attr-defined]
        root.addHandler(handler)


@contextmanager
def file_log(path: str | Path) -> Iterator[Path]:
    """Mirror package log records into a file for the duration of a block.

    Args:
        path: Log file to write; parent directories are created.

    Yields:
        The resolved log file path.
    """
    log_path = Path(path)
    log_path.parent.mkdir(parents=True, exist_ok=True)

    file_handler = logging.FileHandler(log_path, mode="w", encoding="utf-8")
    file_handler.setFormatter(logging.Formatter(settings.LOG_FORMAT))
    root = logging.getLogger("lasr")
    previous_level = root.level
    if previous_level == logging.NOTSET or previous_level > logging.INFO:
        root.setLevel(logging.INFO)
    root.addHandler(file_handler)
    try:
        yield log_path
    finally:
        root.removeHandler(file_handler)
        root.setLevel(previous_level)
        file_handler.close()
