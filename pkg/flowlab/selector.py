import logging
import os
from glob import glob
from typing import Optional

from . import scenario as scenario_mod
from .scenario import Scenario, ScenarioError

logger = logging.getLogger("scenario")

#: Directory of the scenarios shipped with the package
BUNDLED_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "scenarios")


class ScenarioSelector:
    """
    This object loads all scenario documents in a directory and lets the
    caller pick one by name.

    Scenario documents may carry the following keys besides the physics:

    - ``name`` - The name to select the scenario by
    - ``description`` - One line shown by ``grflow-lab list-scenarios``
    - ``default`` - If true, this scenario runs when none is named

    Every document is parsed and validated while loading, so a broken
    scenario is reported before anything runs.

    .. note:: Add ``flowlab.scenario_tests`` to your unit tests to check
              the bundled scenarios::

                  from flowlab.scenario_tests import *
    """

    def __init__(self, directory: str = BUNDLED_DIR) -> None:
        """
        :param directory: Directory to load ``*.json`` scenarios from
        """
        self.directory = directory
        self.scenarios: dict[str, Scenario] = {}

        logger.debug("Loading scenarios from %s", directory)

        if not os.path.isdir(directory):
            logger.warning("Cannot load scenarios from '%s': not a directory", directory)

        for filename in sorted(glob(os.path.join(directory, "*.json"))):
            sc = scenario_mod.load(filename)
            if sc.name in self.scenarios:
                raise RuntimeError(
                    f"Duplicate scenario name {sc.name} in {filename} "
                    f"(also in {self.scenarios[sc.name].source})"
                )
            self.scenarios[sc.name] = sc

        default_names = [k for k, v in sorted(self.scenarios.items()) if v.is_default]

        for k in sorted(self.scenarios):
            logger.debug(" -> %s%s", k, " [Default]" if k in default_names else "")

        if len(self.scenarios) == 0:
            logger.warning("-- no scenarios were loaded!")

        if len(default_names) > 1:
            raise RuntimeError(
                "More than one scenario was specified as default! (scenarios: {})".format(
                    ", ".join(default_names)
                )
            )
        self.default_name: Optional[str] = default_names[0] if default_names else None

    def names(self) -> list[str]:
        return sorted(self.scenarios)

    def get(self, name: str) -> Scenario:
        try:
            return self.scenarios[name]
        except KeyError:
            raise ScenarioError(
                f"no bundled scenario named {name!r}; choose one of {', '.join(self.names())}"
            ) from None

    @property
    def default(self) -> Scenario:
        if self.default_name is None:
            raise ScenarioError("no scenario is marked as default")
        return self.scenarios[self.default_name]

    def resolve(self, config: Optional[str]) -> Scenario:
        """
        A scenario from a file path or a bundled name; the default scenario
        when ``config`` is None.
        """
        if config is None:
            return self.default
        if os.path.exists(config) or config.endswith(".json"):
            return scenario_mod.load(config)
        return self.get(config)

    def describe(self) -> list[str]:
        """One line per scenario for listing."""
        width = max((len(n) for n in self.scenarios), default=0)
        return [
            f"{name:<{width}}  {'*' if name == self.default_name else ' '} "
            f"{self.scenarios[name].document['description']}".rstrip()
            for name in self.names()
        ]
