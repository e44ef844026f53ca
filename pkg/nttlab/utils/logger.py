import logging
import os
import sys
from logging.handlers import RotatingFileHandler
from typing import Optional

_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def _log_dir() -> str:
    return os.environ.get(
        "NTTLAB_LOG_DIR", os.path.join(os.path.expanduser("~"), ".nttlab", "logs")
    )


def setup_logger(name: str = "nttlab", level: Optional[str] = None) -> logging.Logger:
    """
    Configure the package logger: rotating file + stderr.

    Stdout stays free for command output (stats lines, report JSON).
    Calling it twice does not duplicate handlers.
    """
    logger = logging.getLogger(name)
    level_name = (level or os.environ.get("NTTLAB_LOG_LEVEL") or "INFO").upper()
    logger.setLevel(getattr(logging, level_name, logging.INFO))

    if getattr(logger, "_nttlab_configured", False):
        return logger

    formatter = logging.Formatter(_FORMAT)

    # File Handler (Rotating)
    # Max 5MB, keep 3 backups
    try:
        log_dir = _log_dir()
        os.makedirs(log_dir, exist_ok=True)
        file_handler = RotatingFileHandler(
            os.path.join(log_dir, "nttlab.log"),
            maxBytes=5 * 1024 * 1024,
            backupCount=3,
            encoding="utf-8",
        )
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)
    except OSError as e:
        sys.stderr.write(f"nttlab: file logging disabled ({e})\n")

    stream_handler = logging.StreamHandler(sys.stderr)
    stream_handler.setFormatter(formatter)
    logger.addHandler(stream_handler)

    logger._nttlab_configured = True  # type: ignore[attr-defined]
    return logger


def set_level(level: str) -> None:
    """Change the level of the package logger at runtime (CLI --verbose)."""
    logging.getLogger("nttlab").setLevel(getattr(logging, level.upper(), logging.INFO))


logger = setup_logger()
