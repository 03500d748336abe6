import logging
import time
from typing import Dict, Optional

logger = logging.getLogger(__name__)


class StageTimer:
    """
    Context manager that times one pipeline stage.
    Usage:
        timings = {}
        with StageTimer("certificate", timings):
            run_certificate()
    """

    def __init__(self, stage: str, sink: Optional[Dict[str, float]] = None):
        self.stage = stage
        self.sink = sink
        self.elapsed_ms = 0.0
        self._start = 0.0

    def __enter__(self):
        logger.debug("[Stage] %s started", self.stage)
        self._start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        self.elapsed_ms = (time.perf_counter() - self._start) * 1e3
        if self.sink is not None:
            self.sink[self.stage] = self.elapsed_ms
        if exc_type is None:
            logger.debug("[Stage] %s finished in %.3f ms", self.stage, self.elapsed_ms)
        else:
            logger.debug("[Stage] %s failed after %.3f ms: %s", self.stage, self.elapsed_ms, exc_value)
        return False
