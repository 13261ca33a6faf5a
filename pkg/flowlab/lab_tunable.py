import functools
import inspect
import logging
import typing
from collections.abc import Mapping
from typing import Any, Callable, Generic, Optional, TypeVar, overload

logger = logging.getLogger("scenario")

T = TypeVar("T")
V = TypeVar("V")

#: Types a tunable default may have; they are the JSON scalar and container types.
_SCENARIO_TYPES = (bool, int, float, str, list, dict, type(None))

_MISSING = object()


class tunable(Generic[V]):
    """
    A check parameter read from the scenario.

    The following example reads ``/estimates/harnack/samples`` from the
    merged scenario document when the laboratory sets the check up::

        class HarnackCheck:

            samples = tunable(50, key="estimates.harnack.samples")

            def execute(self):
                n = self.samples

    Without ``key``, the value is looked up as ``<section>.<name>``, where
    the section defaults to the check's name in the laboratory.

    .. note:: When testing a check outside a laboratory, use
              :func:`setup_tunables` to bind it to a scenario dictionary.
    """

    __slots__ = ("_default", "_key", "_name", "__orig_class__")

    def __init__(self, default: V, *, key: Optional[str] = None) -> None:
        if not isinstance(default, _SCENARIO_TYPES):
            raise TypeError(
                f"tunable default must be a scenario value, got {type(default).__name__}"
            )
        self._default = default
        self._key = key
        self._name: Optional[str] = None

    def __set_name__(self, owner: type, name: str) -> None:
        self._name = name

    @property
    def default(self) -> V:
        return self._default

    def key_for(self, section: str) -> str:
        return self._key if self._key is not None else f"{section}.{self._name}"

    @overload
    def __get__(self, instance: None, owner=None) -> "tunable[V]": ...

    @overload
    def __get__(self, instance, owner=None) -> V: ...

    def __get__(self, instance, owner=None):
        if instance is not None:
            try:
                return instance._tunables[self]
            except (AttributeError, KeyError):
                raise AttributeError(
                    f"tunable {self._name} of {type(instance).__name__} is not bound; "
                    "call setup_tunables first"
                ) from None
        return self

    def __set__(self, instance, value: V) -> None:
        instance._tunables[self] = value


def lookup(document: Mapping, key: str, default: Any = _MISSING) -> Any:
    """Resolves a dotted key like ``estimates.harnack.samples``."""
    node: Any = document
    for part in key.split("."):
        if isinstance(node, Mapping) and part in node:
            node = node[part]
        else:
            if default is _MISSING:
                raise KeyError(key)
            return default
    return node


def _coerce(value: Any, default: Any, key: str) -> Any:
    if default is None or value is None:
        return value
    if isinstance(default, float) and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if isinstance(default, bool) != isinstance(value, bool) or not isinstance(value, type(default)):
        raise TypeError(
            f"scenario value {key} = {value!r} has type {type(value).__name__}, "
            f"expected {type(default).__name__}"
        )
    return value


def setup_tunables(component, cname: str, scenario: Mapping, section: Optional[str] = None) -> None:
    """
    Binds the tunables on an object to values of the scenario.

    :param component: check object
    :param cname: name of the check
    :param scenario: merged scenario document
    :param section: key prefix for tunables without an explicit key;
                    defaults to ``cname``
    """
    cls = component.__class__
    section = cname if section is None else section

    tunables: dict[tunable, Any] = {}

    for n in dir(cls):
        if n.startswith("_"):
            continue

        prop = getattr(cls, n)
        if not isinstance(prop, tunable):
            continue

        key = prop.key_for(section)
        value = _coerce(lookup(scenario, key, prop.default), prop.default, key)
        tunables[prop] = value
        logger.debug("%s.%s <- %s = %r", cname, n, key, value)

    component._tunables = tunables


@overload
def feedback(f: Callable[[T], V]) -> Callable[[T], V]: ...


@overload
def feedback(*, key: str) -> Callable[[Callable[[T], V]], Callable[[T], V]]: ...


def feedback(f=None, *, key: Optional[str] = None) -> Callable:
    """
    Marks a getter whose return value the laboratory records after the
    check has executed.

    ``key`` defaults to the method name with a leading ``get_`` removed.
    Array-like values become columns of ``series/<check>.csv``; scalars go
    into the check's entry of ``report.json``.

    .. warning:: The function should only act as a getter, and must not
                 take any arguments (other than self).

    Example::

        class VolumeCheck:

            @feedback
            def get_residual(self) -> np.ndarray:
                return self.series.values

    Here the column is named ``residual``.
    """
    if f is None:
        return functools.partial(feedback, key=key)

    if not callable(f):
        raise TypeError(f"Illegal use of feedback decorator on non-callable {f!r}")
    sig = inspect.signature(f)
    name = f.__name__

    if len(sig.parameters) != 1:
        raise ValueError(
            f"{name} may not take arguments other than 'self' (must be a simple getter method)"
        )

    f._lab_feedback = True
    f._lab_feedback_key = key

    return f


def collect_feedbacks(component, cname: str) -> list[tuple[str, Callable[[], Any]]]:
    """
    Finds all methods decorated with :func:`feedback` on an object and
    returns ``(key, method)`` pairs sorted by key.
    """
    feedbacks = []

    for name, method in inspect.getmembers(component, inspect.ismethod):
        if getattr(method, "_lab_feedback", False):
            key = method._lab_feedback_key
            if key is None:
                key = name[4:] if name.startswith("get_") else name
            feedbacks.append((key, method))

    keys = [k for k, _ in feedbacks]
    dupes = sorted({k for k in keys if keys.count(k) > 1})
    if dupes:
        raise ValueError(f"check {cname} has duplicate feedback keys {dupes}")
    return sorted(feedbacks, key=lambda kv: kv[0])
