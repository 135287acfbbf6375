"""
Runtime profile

Resolves the worker thread count, configures logging and reports the
numeric environment once per CLI invocation.
"""

import logging
import os
import sys
from typing import Dict, Any

from wienervar.core.config import settings

logger = logging.getLogger(__name__)


def get_thread_count() -> int:
    """
    Number of worker threads for blockwise Monte Carlo.

    WIENERVAR_THREADS wins when set; otherwise all cores. Numeric results do
    not depend on this value.
    """
    if settings.THREADS is not None and settings.THREADS > 0:
        return settings.THREADS
    return os.cpu_count() or 1


def configure_logging(level: str = None) -> None:
    """Send log records to stderr at the configured level."""
    logging.basicConfig(
        level=getattr(logging, (level or settings.LOG_LEVEL).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def get_runtime_info() -> Dict[str, Any]:
    import numpy
    import scipy
    from wienervar import __version__

    return {
        "wienervar": __version__,
        "python": sys.version.split()[0],
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "threads": get_thread_count(),
    }


def log_runtime_info() -> Dict[str, Any]:
    """Log the runtime profile for debugging."""
    info = get_runtime_info()
    logger.info("Runtime profile: %s", ", ".join(f"{k}={v}" for k, v in info.items()))
    return info
