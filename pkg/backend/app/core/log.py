"""
Logging setup for command-line runs.
"""
import logging
from logging.handlers import RotatingFileHandler
from pathlib import Path

from app.core.config import Settings

LOG_FORMAT = "%(asctime)s %(levelname)s [%(name)s] %(message)s"


def configure_logging(config: Settings, level: str | None = None) -> None:
    """Install a stream handler (and a rotating file handler when LOG_FILE is set)."""
    root = logging.getLogger()
    root.setLevel(level or config.LOG_LEVEL)

    # Re-running commands in one interpreter (tests) must not stack handlers
    for handler in list(root.handlers):
        if getattr(handler, "_servicetime", False):
            root.removeHandler(handler)

    handlers: list[logging.Handler] = [logging.StreamHandler()]
    if config.LOG_FILE:
        Path(config.LOG_FILE).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(
            RotatingFileHandler(
                config.LOG_FILE,
                maxBytes=config.LOG_MAX_BYTES,
                backupCount=config.LOG_BACKUP_COUNT,
            )
        )

    for handler in handlers:
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._servicetime = True  # type: ignore[attr-defined]
        root.addHandler(handler)

    # matplotlib is chatty at DEBUG
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
