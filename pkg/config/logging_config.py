"""
Logging configuration using Loguru.
"""
from loguru import logger
import sys

from config.settings import settings


def setup_logging(level: str = None):
    """Configure logging. Reports own stdout, so every sink is stderr or a file."""

    logger.remove()

    level = level or settings.log_level
    if settings.log_format == "json":
        logger.add(
            sys.stderr,
            format="{time} | {level} | {message}",
            level=level,
            serialize=True,
            backtrace=True,
            diagnose=False,
        )
    else:
        logger.add(
            sys.stderr,
            format="<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan>:<cyan>{function}</cyan> - <level>{message}</level>",
            level=level,
            colorize=True,
            backtrace=True,
            diagnose=False,
        )

    if settings.log_file:
        logger.add(
            settings.log_file,
            rotation="10 MB",
            retention=5,
            level=level,
            serialize=(settings.log_format == "json"),
        )

    logger.debug("Logging configured")
    return logger
