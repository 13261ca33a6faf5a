import logging
import time


class PeriodicFilter:
    """
    Periodic Filter to keep long time loops from flooding the console.
    Add this filter to a logger and progress messages will only be
    printed periodically.

    The logger will always print logging levels of WARNING or higher,
    unless given a different bypass level

    Example::

        logger = logging.getLogger("flow")
        logger.addFilter(PeriodicFilter(2.0))

        for k in range(nsteps):
            # printed at most once every two seconds
            logger.info("step %d of %d", k, nsteps)

    """

    def __init__(self, period: float, bypass_level: int = logging.WARN) -> None:
        """
        :param period: Wait period (in seconds) between logs
        :param bypass_level: Lowest logging level that the filter should not catch
        """

        self._period = period
        self._loggingLoop = True
        self._last_log = -period
        self._bypass_level = bypass_level

    def filter(self, record: logging.LogRecord) -> bool:
        """Performs filtering action for logger"""
        if record.levelno >= self._bypass_level:
            return True
        self._refresh_logger()
        return self._loggingLoop

    def _refresh_logger(self) -> None:
        """Determine if the log wait period has passed"""
        now = time.monotonic()
        self._loggingLoop = False
        if now - self._last_log > self._period:
            self._loggingLoop = True
            self._last_log = now


def progress_logger(name: str, period: float = 2.0) -> logging.Logger:
    """
    Returns the ``<name>.progress`` child logger with a :class:`PeriodicFilter`
    attached (once).
    """
    log = logging.getLogger(f"{name}.progress")
    if not any(isinstance(f, PeriodicFilter) for f in log.filters):
        log.addFilter(PeriodicFilter(period))
    return log
