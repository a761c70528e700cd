"""
This module defines functions which are primarily for internal quality
of life utility logic.

Ideally these functions should be made as pure as possible.
"""

import sys
from typing import Sequence

import deal
from loguru import logger


@deal.pre(
    lambda text: all(ord(c) < 128 for c in text),
    message="Dimensions must be given as ascii",
)
def parse_dims(text: str) -> tuple[int, ...]:
    """
    Parse an ``x``-joined dimension string such as ``4x9x16``.

    Raises
    ------
    ValueError:
        A part is not a positive integer.
    """
    parts = text.strip().lower().split("x")
    try:
        dims = tuple(int(part) for part in parts)
    except ValueError:
        raise ValueError(f"Could not parse dimensions from {text!r}")
    if any(n < 1 for n in dims):
        raise ValueError(f"Dimensions must be positive, got {text!r}")
    return dims


def format_dims(dims: Sequence[int]) -> str:
    return "x".join(str(n) for n in dims)


def format_float(value: float) -> str:
    """17 significant digits, enough to round-trip any double."""
    return f"{value:.17g}"


def configure_logging(level: str = "WARNING"):
    """Send loguru output to stderr at ``level``."""
    logger.remove()
    logger.add(sys.stderr, level=level.upper())


def make_warning_logger(logging_level: str):
    func = getattr(logger, logging_level, logger.debug)

    def warning_logger(
        message, category, filename, lineno, file=None, line=None
    ):
        func(f"{category}: {message} {filename}:{lineno}")

    return warning_logger
