import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

logger = logging.getLogger("parallel")

T = TypeVar("T")
R = TypeVar("R")

_threads = 1


def set_threads(n: int) -> None:
    """Sets the worker count used by :func:`ordered_map`."""
    global _threads
    if n < 1:
        raise ValueError(f"thread count must be positive, got {n}")
    _threads = int(n)
    logger.debug("using %d worker threads", _threads)


def get_threads() -> int:
    return _threads


def ordered_map(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """
    Maps ``fn`` over ``items`` and returns results in input order.

    Results never depend on the worker count: every reduction over them
    happens afterwards in the caller, in list order.
    """
    items = list(items)
    if _threads == 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=_threads) as pool:
        return list(pool.map(fn, items))
