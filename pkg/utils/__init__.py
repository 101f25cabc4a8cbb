"""Logging helpers."""

from .logger import get_logger, setup_logger, timed

__all__ = ["setup_logger", "get_logger", "timed"]
