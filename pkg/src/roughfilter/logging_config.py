"""Logging configuration for roughfilter."""
import logging
import logging.handlers
import os
from datetime import datetime
from typing import Optional, Union


def setup_logging(log_level: str = "INFO", log_dir: Optional[Union[str, os.PathLike]] = None) -> None:
    """Set up console logging and, when a directory is given, a rotating log file.

    Args:
        log_level: The logging level to use (default: INFO)
        log_dir: Directory for the rotating log file; console only when None
    """
    log_format = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )

    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, log_level.upper()))

    # Repeated CLI invocations in one process must not stack handlers
    for handler in list(root_logger.handlers):
        if getattr(handler, "_roughfilter", False):
            root_logger.removeHandler(handler)
            handler.close()

    console_handler = logging.StreamHandler()
    console_handler.setFormatter(log_format)
    console_handler._roughfilter = True
    root_logger.addHandler(console_handler)

    if log_dir is not None:
        os.makedirs(log_dir, exist_ok=True)
        log_file = os.path.join(log_dir, f"roughfilter_{datetime.now().strftime('%Y%m%d')}.log")
        file_handler = logging.handlers.RotatingFileHandler(
            log_file,
            maxBytes=10485760,  # 10MB
            backupCount=5
        )
        file_handler.setFormatter(log_format)
        file_handler._roughfilter = True
        root_logger.addHandler(file_handler)
