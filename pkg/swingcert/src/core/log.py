import logging
import sys

LOG_FORMAT = "%(levelname)s [%(name)s] %(message)s"


def configure_logging(level: str = "WARNING") -> None:
    """
    Route records to stderr; stdout carries reports and CSV only.
    """
    root = logging.getLogger("swingcert")
    root.setLevel(level.upper())
    if not any(getattr(h, "_swingcert", False) for h in root.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._swingcert = True
        root.addHandler(handler)
