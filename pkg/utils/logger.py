"""
Logging for the pricing engine.

Records go to stderr; stdout carries CSV results only.
"""

import logging
import sys
import time
from contextlib import contextmanager
from typing import Iterator, Optional, TextIO

LOG_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def setup_logger(level: str = "INFO", stream: Optional[TextIO] = None) -> None:
    """
    Configure the root logger.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL); unknown names fall back to INFO
        stream: Destination, stderr by default
    """
    log_level = getattr(logging, str(level).upper(), logging.INFO)

    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    console_handler = logging.StreamHandler(stream or sys.stderr)
    console_handler.setLevel(log_level)
    console_handler.setFormatter(logging.Formatter(fmt=LOG_FORMAT, datefmt=DATE_FORMAT))
    root_logger.addHandler(console_handler)

    logging.captureWarnings(True)
    # scipy's quadrature warnings are reported through our own error bounds
    logging.getLogger("py.warnings").setLevel(logging.ERROR)


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """
    Get a logger instance.

    Args:
        name: Logger name (usually __name__)

    Returns:
        Logger instance
    """
    return logging.getLogger(name or "multistep_barrier")


@contextmanager
def timed(logger: logging.Logger, label: str, level: int = logging.INFO) -> Iterator[None]:
    """Log the wall-clock time spent in the block."""
    start = time.perf_counter()
    try:
        yield
    finally:
        logger.log(level, f"{label} took {time.perf_counter() - start:.2f}s")
