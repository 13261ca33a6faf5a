"""
Scenario documents: loading, default merging, validation and the objects
they describe.

A scenario is a single JSON document. Every physical default lives in the
``default`` keywords of ``schema.json`` and is merged into the document
before validation, so the merged document is the complete description of
a run.
"""

import copy
import hashlib
import json
import logging
import math
import os
from collections.abc import Mapping
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Optional, Sequence

import jsonschema

from grflow.estimates import LiYauParams, ParameterError
from grflow.flow import FlowState, StepControl
from grflow.frequency import FrequencyParams, HFunction, WindowError
from grflow.geometry import GridSpec, MetricField, ScalarField
from grflow.geometry.families import H_FAMILIES, METRIC_FAMILIES, SCALAR_FAMILIES
from grflow.homogeneous import MilnorState, bismut_flat_k
from grflow.misc import jsonio

logger = logging.getLogger("scenario")

__all__ = ["ScenarioError", "Scenario", "load_schema", "parse", "load"]

SCHEMA_PATH = os.path.join(os.path.dirname(__file__), "schema.json")


class ScenarioError(ValueError):
    """
    An invalid scenario.

    :param path: JSON path of the offending value, e.g. ``estimates.liyau.0.alpha``
    :param line: line of that value in the source document, when known
    """

    def __init__(self, message: str, path: Sequence = (), line: Optional[int] = None, source: str = "") -> None:
        self.path = tuple(path)
        self.line = line
        self.source = source
        where = ".".join(map(str, self.path)) or "<document>"
        prefix = f"{source}:{line}: " if line is not None else (f"{source}: " if source else "")
        super().__init__(f"{prefix}{where}: {message}")


def load_schema() -> dict:
    with open(SCHEMA_PATH, encoding="utf-8") as fp:
        return json.load(fp)


def _extend_with_default(validator_class):
    validate_properties = validator_class.VALIDATORS["properties"]

    def set_defaults(validator, properties, instance, schema):
        if isinstance(instance, dict):
            for name, subschema in properties.items():
                if "default" in subschema:
                    instance.setdefault(name, copy.deepcopy(subschema["default"]))
        yield from validate_properties(validator, properties, instance, schema)

    return jsonschema.validators.extend(validator_class, {"properties": set_defaults})


_DefaultingValidator = _extend_with_default(jsonschema.Draft7Validator)


def _line_of(text: Optional[str], path: Sequence) -> Optional[int]:
    """Best effort: the line where the last key of ``path`` appears in ``text``."""
    if not text:
        return None
    pos = 0
    found = None
    for part in path:
        if isinstance(part, int):
            continue
        at = text.find(f'"{part}"', pos)
        if at < 0:
            break
        pos = at + 1
        found = at
    if found is None:
        return 1
    return text.count("\n", 0, found) + 1


def _fail(message: str, path: Sequence, text: Optional[str], source: str) -> ScenarioError:
    return ScenarioError(message, path, _line_of(text, path), source)


def parse(document: Mapping, text: Optional[str] = None, source: str = "") -> "Scenario":
    """
    Merges the schema defaults into ``document``, validates it and checks
    the constraints the schema cannot express.

    :param text: the JSON source, used to report line numbers
    :raises ScenarioError: on the first problem found
    """
    doc = copy.deepcopy(dict(document))
    validator = _DefaultingValidator(load_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        e = errors[0]
        raise _fail(e.message, list(e.absolute_path), text, source)
    scenario = Scenario(doc, source)
    scenario.check(text)
    return scenario


def load(path: str) -> "Scenario":
    """Reads and parses a scenario file."""
    with open(path, encoding="utf-8") as fp:
        text = fp.read()
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(e.msg, (), e.lineno, path) from e
    if not isinstance(document, dict):
        raise ScenarioError("a scenario must be a JSON object", (), 1, path)
    return parse(document, text, path)


@dataclass(frozen=True, eq=False)
class Scenario:
    """A validated scenario with every default filled in."""

    document: dict
    source: str = ""

    @property
    def name(self) -> str:
        return self.document["name"]

    @property
    def backend(self) -> str:
        return self.document["backend"]

    @property
    def seed(self) -> int:
        return self.document["seed"]

    @property
    def is_default(self) -> bool:
        return self.document["default"]

    @cached_property
    def digest(self) -> str:
        """sha256 of the canonical merged document."""
        return hashlib.sha256(jsonio.dumps(self.document, indent=0).encode()).hexdigest()

    def __getitem__(self, key: str) -> Any:
        return self.document[key]

    # construction of the described objects

    def grid(self) -> GridSpec:
        geo = self.document["geometry"]
        return GridSpec.cube(geo["dim"], geo["points"], geo["side"], geo["order"])

    def _family_params(self, section: Mapping, family: str) -> dict:
        params = dict(section["params"])
        if family == "random-smooth":
            params.setdefault("seed", self.seed)
        return params

    def initial_metric(self, grid: Optional[GridSpec] = None) -> MetricField:
        grid = grid or self.grid()
        spec = self.document["geometry"]["metric"]
        family = spec["family"]
        return METRIC_FAMILIES[family](grid, **self._family_params(spec, family))

    def initial_state(self, grid: Optional[GridSpec] = None) -> FlowState:
        grid = grid or self.grid()
        spec = self.document["geometry"]["h_form"]
        H = H_FAMILIES[spec["family"]](grid, **spec["params"])
        return FlowState(self.initial_metric(grid), H, 0.0)

    def heat_initial(self, grid: GridSpec) -> ScalarField:
        spec = self.document["heat"]["initial"]
        return SCALAR_FAMILIES[spec["family"]](grid, **spec["params"])

    def step_control(self) -> StepControl:
        c = self.document["control"]
        return StepControl(cfl=c["cfl"], cadence=c["cadence"], max_steps=c["max_steps"])

    @property
    def horizon(self) -> float:
        return self.document["control"]["horizon"]

    @property
    def budget_constant(self) -> float:
        return self.document["control"]["budget_constant"]

    def liyau_params(self) -> list[LiYauParams]:
        return [LiYauParams(**p) for p in self.document["estimates"]["liyau"]]

    def h_function(self) -> HFunction:
        return HFunction(**self.document["frequency"]["h"])

    def frequency_params(self, t_prime: float) -> FrequencyParams:
        """
        The frequency window; an open end defaults to ``t0 = t'/4`` and
        ``t1 = t'``, where ``t'`` is the terminal time of the measure.
        """
        w = self.document["frequency"]["window"]
        t0 = w["t0"] if w["t0"] is not None else 0.25 * t_prime
        t1 = w["t1"] if w["t1"] is not None else t_prime
        return FrequencyParams(self.h_function(), t0, t1)

    def milnor_state(self) -> MilnorState:
        hom = self.document["homogeneous"]
        a, b, c = hom["metric"]
        s = MilnorState.preset(hom["group"], a, b, c)
        if hom["k"] == "bismut-flat":
            k = bismut_flat_k(s)
            if k is None:
                raise ScenarioError(
                    f"group {hom['group']} with metric {hom['metric']} has no stationary H",
                    ("homogeneous", "k"),
                    source=self.source,
                )
            return MilnorState.preset(hom["group"], a, b, c, k=k)
        return MilnorState.preset(hom["group"], a, b, c, k=float(hom["k"]))

    # validation beyond the schema

    def check(self, text: Optional[str] = None) -> None:
        """
        :raises ScenarioError: if a constraint across fields fails
        """
        doc = self.document

        def fail(message, *path):
            raise _fail(message, path, text, self.source)

        for i, p in enumerate(doc["estimates"]["liyau"]):
            try:
                LiYauParams(**p)
            except ParameterError as e:
                fail(str(e), "estimates", "liyau", i, "alpha")
        if not doc["estimates"]["lemma"]["alpha"] > 1:
            fail("alpha must be greater than 1", "estimates", "lemma", "alpha")

        if self.backend == "homogeneous":
            self.milnor_state()
            return

        geo = doc["geometry"]
        if geo["dim"] == 2 and geo["h_form"]["family"] != "none":
            fail("a 3-form needs dim = 3; use h_form family 'none' in 2 dimensions",
                 "geometry", "h_form", "family")
        try:
            self.initial_state()
        except TypeError as e:
            fail(f"bad family parameters: {e}", "geometry")
        except ValueError as e:
            fail(str(e), "geometry")
        try:
            self.heat_initial(self.grid())
        except TypeError as e:
            fail(f"bad family parameters: {e}", "heat", "initial", "params")

        horizon = self.horizon
        tp = doc["heat"]["terminal_time"]
        if tp is not None and not 0 < tp < horizon:
            fail(f"terminal time must lie strictly inside (0, {horizon})", "heat", "terminal_time")

        freq = doc["frequency"]
        if freq["enabled"]:
            t_prime = tp if tp is not None else horizon * (1 - 1 / doc["control"]["cadence"])
            try:
                p = self.frequency_params(t_prime)
            except (WindowError, ParameterError) as e:
                fail(str(e), "frequency", "window")
            if p.t1 > t_prime * (1 + 1e-9):
                fail(f"window end {p.t1} lies beyond the terminal time {t_prime}",
                     "frequency", "window", "t1")
            if not math.isfinite(p.t0):
                fail("window start must be finite", "frequency", "window", "t0")

    # variants

    def with_overrides(self, **values) -> "Scenario":
        """
        A re-validated copy with top-level or dotted keys replaced, e.g.
        ``with_overrides(seed=3)`` or ``with_overrides(**{"geometry.points": 32})``.
        """
        doc = copy.deepcopy(self.document)
        for key, value in values.items():
            node = doc
            parts = key.split(".")
            for part in parts[:-1]:
                node = node[part]
            node[parts[-1]] = value
        return parse(doc, source=self.source)

    def refined(self, level: int) -> "Scenario":
        """
        Grid spacing and snapshot spacing both divided by ``2**level``. The
        terminal kernel width, given in grid cells, is scaled up to keep the
        kernel the same on the torus.
        """
        if level < 0:
            raise ValueError(f"refinement level must be nonnegative, got {level}")
        if level == 0:
            return self
        factor = 2**level
        return self.with_overrides(
            **{
                "geometry.points": self.document["geometry"]["points"] * factor,
                "control.cadence": self.document["control"]["cadence"] * factor,
                "heat.terminal_width": self.document["heat"]["terminal_width"] * factor,
            }
        )
