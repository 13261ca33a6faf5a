import logging
import time

logger = logging.getLogger("simple_watchdog")

__all__ = ["SimpleWatchdog"]


class SimpleWatchdog:
    """A wall clock budget for one laboratory run.

    When the budget is exceeded, the epochs recorded so far are logged so
    that one can see which stage consumed the time. Nothing is interrupted;
    callers check :meth:`isExpired` between stages and stop there.

    The watchdog is initialized disabled, so the user needs to call enable() before use.

    .. warning:: This watchdog is not threadsafe

    """

    # Used for timeout print rate-limiting
    kMinPrintPeriod = 1000000  # us

    def __init__(self, timeout: float):
        """Watchdog constructor.

        :param timeout: The budget in seconds; ``inf`` never expires
        """
        self._get_time = time.monotonic_ns

        self._startTime = 0  # us
        self._timeout = timeout * 1e6  # us
        self._expirationTime = 0  # us
        self._lastEpochsPrintTime = 0  # us
        self._epochs: list[tuple[str, int]] = []
        self._enabled = False

    def _now(self) -> int:
        return self._get_time() // 1000

    def getTime(self) -> float:
        """Returns the time in seconds since the watchdog was last fed."""
        return (self._now() - self._startTime) / 1e6

    def getTimeout(self) -> float:
        """Returns the budget in seconds."""
        return self._timeout / 1e6

    def isExpired(self) -> bool:
        """Returns true if the watchdog is enabled and its budget is used up."""
        return self._enabled and self._now() > self._expirationTime

    def addEpoch(self, epochName: str) -> None:
        """
        Adds time since last epoch to the list printed by printEpochs().

        :param epochName: The name to associate with the epoch.
        """
        self._epochs.append((epochName, self._now()))

    def epochs(self) -> list[tuple[str, float]]:
        """``(name, seconds)`` per recorded epoch, in order."""
        out = []
        prev = self._startTime
        for key, value in self._epochs:
            out.append((key, (value - prev) / 1e6))
            prev = value
        return out

    def printEpochs(self) -> None:
        logger.info(
            "Epochs:\n%s",
            "\n".join(f"\t{key}: {seconds:.6f}" for key, seconds in self.epochs()),
        )

    def printIfExpired(self) -> None:
        """Prints list of epochs added so far and their times."""
        now = self._now()
        if (
            self.isExpired()
            and now - self._lastEpochsPrintTime > self.kMinPrintPeriod
        ):
            self._lastEpochsPrintTime = now
            logger.warning("Run budget exceeded after %.6fs", (now - self._startTime) / 1e6)
            self.printEpochs()

    def reset(self) -> None:
        """Resets the watchdog timer.

        This also enables the timer if it was previously disabled.
        """
        self.enable()

    def enable(self) -> None:
        """Enables the watchdog timer."""
        self._epochs.clear()
        self._enabled = True
        self._startTime = self._now()
        self._expirationTime = self._startTime + self._timeout

    def disable(self) -> None:
        """Disables the watchdog timer."""
        self._enabled = False
