import logging
import typing
from typing import Any, NamedTuple, Optional

logger = logging.getLogger(__name__)


class LabInjectError(ValueError):
    pass


class Request(NamedTuple):
    type: type
    #: ``Optional[...]`` annotations accept a missing run product
    optional: bool = False


def _unwrap(annotation) -> tuple[Any, bool]:
    args = typing.get_args(annotation)
    if typing.get_origin(annotation) is typing.Union and type(None) in args:
        rest = [a for a in args if a is not type(None)]
        if len(rest) == 1:
            return rest[0], True
    return annotation, False


def get_injection_requests(
    type_hints: dict[str, type], cname: str, component: Optional[Any] = None
) -> dict[str, Request]:
    """
    Given a dict of type hints, filter it to the requested injection types.

    :param type_hints: The type hints to inspect.
    :param cname: The check name.
    :param component: The check if it has been instantiated.
    """
    requests = {}

    for n, annotation in type_hints.items():
        # private names are never injected
        if n.startswith("_"):
            if component is None:
                raise LabInjectError(f"Cannot inject into check {cname} __init__ param {n}")
            continue

        # already set on the instance (tunables, constants)
        if component is not None and hasattr(component, n):
            continue

        inject_type, optional = _unwrap(annotation)
        # generic aliases inject by their origin: dict[str, X] -> dict
        inject_type = typing.get_origin(inject_type) or inject_type

        if not isinstance(inject_type, type):
            message = f"Check {cname} has a non-type annotation {n}: {annotation!r}"
            if component is not None:
                message += (
                    "\nLone non-injection variable annotations are disallowed."
                    " Did you mean to assign a static variable?"
                )
            raise TypeError(message)

        requests[n] = Request(inject_type, optional)

    return requests


def find_injections(
    requests: dict[str, Request], injectables: dict[str, Any], cname: str
) -> dict[str, Any]:
    """
    Get a dict of the run products to inject into a given check.

    Products are looked up by name, then by ``<check name>_<name>``.

    :param requests: as returned by :func:`get_injection_requests`
    :param injectables: the run products of the laboratory
    :param cname: the name of the check
    """
    to_inject = {}

    for n, (inject_type, optional) in requests.items():
        injectable = injectables.get(n)
        if injectable is None:
            injectable = injectables.get(f"{cname}_{n}")

        if injectable is None:
            if optional:
                to_inject[n] = None
                continue
            raise LabInjectError(
                f"Check {cname} needs {n} ({inject_type.__name__}), "
                "which this laboratory does not produce"
            )

        if not isinstance(injectable, inject_type):
            raise LabInjectError(
                f"Check {cname} variable {n} does not match the laboratory's product "
                f"(got {type(injectable).__name__}, expected {inject_type.__name__})"
            )

        to_inject[n] = injectable
        logger.debug("-> %s.%s = %s", cname, n, type(injectable).__name__)

    return to_inject
