"""
The run driver: computes the products of a scenario (trajectory, heat
solution, conjugate kernel, ...) and executes the checks declared on the
laboratory class against them.
"""

import inspect
import logging
import typing
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from grflow.estimates import EstimateReport, GeodesicError, Verdict, worst_verdict
from grflow.flow import SingularityError, StepBudgetError, curvature_bounds, evolve
from grflow.frequency import EigenSolverError, FrequencySeries
from grflow.heat import SolverInstabilityError, solve_conjugate, solve_heat, weighted_measure
from grflow.homogeneous import CollapseError, evolve_ode, homogeneous_bounds

from . import checks
from .inject import find_injections, get_injection_requests
from .lab_tunable import collect_feedbacks, setup_tunables, tunable
from .scenario import Scenario
from .watchdog import SimpleWatchdog

__all__ = [
    "RunTimeoutError",
    "NUMERICAL_FAILURES",
    "EXIT_PASS",
    "EXIT_VIOLATED",
    "EXIT_FAILURE",
    "RunReport",
    "Laboratory",
    "GridLaboratory",
    "HomogeneousLaboratory",
    "laboratory_for",
]


class RunTimeoutError(RuntimeError):
    """The ``control.timeout`` budget ran out; the run stopped after ``stage``."""

    def __init__(self, stage: str, elapsed: float, timeout: float):
        self.stage = stage
        self.elapsed = float(elapsed)
        self.timeout = float(timeout)
        super().__init__(f"time budget of {self.timeout:g}s used up after {stage} ({self.elapsed:.3f}s)")


#: Failures that stop a run, as opposed to failed inequalities
NUMERICAL_FAILURES = (
    SingularityError,
    StepBudgetError,
    SolverInstabilityError,
    CollapseError,
    EigenSolverError,
    GeodesicError,
    RunTimeoutError,
)

EXIT_PASS = 0
EXIT_VIOLATED = 2
EXIT_FAILURE = 3


@dataclass(frozen=True, eq=False)
class RunReport:
    """
    Everything a run produced. The overall verdict is the worst verdict of
    the member reports; a numerical failure is recorded in ``failure``.
    """

    scenario: str
    digest: str
    backend: str
    metadata: dict
    reports: tuple
    feedback: dict = field(default_factory=dict)
    frequency: Optional[FrequencySeries] = None
    failure: Optional[dict] = None

    @property
    def verdict(self) -> Verdict:
        return worst_verdict([r.verdict for r in self.reports])

    @property
    def exit_code(self) -> int:
        if self.failure is not None:
            return EXIT_FAILURE
        if self.verdict == Verdict.VIOLATED:
            return EXIT_VIOLATED
        return EXIT_PASS

    def as_dict(self) -> dict:
        scalars = {
            cname: {k: v for k, v in values.items() if not _is_series(v)}
            for cname, values in self.feedback.items()
        }
        return {
            "scenario": self.scenario,
            "digest": self.digest,
            "backend": self.backend,
            "metadata": self.metadata,
            "verdict": str(self.verdict),
            "exit_code": self.exit_code,
            "failure": self.failure,
            "checks": [r.as_dict() for r in self.reports],
            "feedback": {c: v for c, v in scalars.items() if v},
        }


def _is_series(value: Any) -> bool:
    if isinstance(value, np.ndarray):
        return True
    return isinstance(value, dict) and bool(value) and all(
        isinstance(v, np.ndarray) for v in value.values()
    )


class Laboratory:
    """
    Base class for laboratories. Subclasses implement :meth:`createObjects`,
    which computes the run products and stores them as attributes, and
    declare their checks as class annotations::

        class GridLaboratory(Laboratory):

            flow_identities: FlowIdentities
            liyau: LiYauCheck

            def createObjects(self):
                self.traj = evolve(...)

    Each check is created, gets a logger named after it, has its tunables
    bound to the scenario and the products it annotates injected. The
    checks then execute in declaration order.
    """

    #: Wall-clock seconds after which the run stops between stages
    timeout = tunable(3600.0, key="control.timeout")

    def __init__(self, scenario: Scenario) -> None:
        self.scenario = scenario
        self.logger = logging.getLogger("laboratory")
        self._exclude_from_injection = ["logger"]
        self._components: list[tuple[str, Any]] = []
        self._feedbacks: list[tuple[str, str, Any]] = []
        setup_tunables(self, "laboratory", scenario.document)
        self.watchdog = SimpleWatchdog(self.timeout)

    def createObjects(self) -> None:
        """
        Computes the run products. Everything assigned to ``self`` here can
        be requested by a check through an annotation of the same name.
        """
        raise NotImplementedError

    def metadata(self) -> dict:
        """Description of the computed products for ``report.json``."""
        return {}

    def run(self) -> RunReport:
        """
        Creates the products, executes every check and collects the reports.

        Numerical failures and an exhausted time budget stop the run and
        are recorded in the report; reports of checks that finished before
        the failure are kept.
        """
        self.watchdog.reset()
        self.logger.info("running scenario %s (%s)", self.scenario.name, self.scenario.digest[:12])

        reports: list[EstimateReport] = []
        failure = None
        try:
            self.createObjects()
            self._end_stage("createObjects")

            self._create_components()
            for cname, component in self._components:
                component.execute()
                reports.extend(component.reports)
                self._end_stage(cname)
        except NUMERICAL_FAILURES as e:
            self.logger.error("run stopped: %s", e)
            failure = {"error": type(e).__name__, "message": str(e)}

        feedback = self._collect_feedback()
        self.watchdog.disable()
        self.watchdog.printEpochs()

        report = RunReport(
            self.scenario.name,
            self.scenario.digest,
            self.scenario.backend,
            self.metadata(),
            tuple(reports),
            feedback,
            self._frequency_series(),
            failure,
        )
        self.logger.info("scenario %s: %s", self.scenario.name, report.verdict)
        return report

    def _end_stage(self, stage: str) -> None:
        self.watchdog.addEpoch(stage)
        self.watchdog.printIfExpired()
        if self.watchdog.isExpired():
            raise RunTimeoutError(stage, self.watchdog.getTime(), self.watchdog.getTimeout())

    def _frequency_series(self) -> Optional[FrequencySeries]:
        for _, component in self._components:
            series = getattr(component, "series", None)
            if isinstance(series, FrequencySeries):
                return series
        return None

    def _collect_feedback(self) -> dict:
        out: dict[str, dict] = {}
        for cname, key, method in self._feedbacks:
            component = dict(self._components)[cname]
            if not hasattr(component, "reports"):
                # the check never executed
                continue
            out.setdefault(cname, {})[key] = method()
        return out

    def _create_components(self) -> None:
        components = []

        self.logger.info("Creating checks")

        cls = type(self)
        injectables = self._collect_injectables()

        for m, ctyp in typing.get_type_hints(cls).items():
            # Ignore private variables
            if m.startswith("_"):
                continue

            # If the variable has been set, skip it
            if hasattr(self, m):
                continue

            if not isinstance(ctyp, type):
                raise TypeError(
                    f"{cls.__name__} has a non-type annotation on {m} ({ctyp!r}); "
                    "lone non-check variable annotations are disallowed"
                )

            component = self._create_component(m, ctyp, injectables)
            components.append((m, component))

        for cname, component in components:
            setup_tunables(component, cname, self.scenario.document)
            self._setup_vars(cname, component, injectables)

        for cname, component in components:
            setup = getattr(component, "setup", None)
            if setup is not None:
                setup()
            self._feedbacks += [(cname, k, f) for k, f in collect_feedbacks(component, cname)]

        self._components = components

    def _collect_injectables(self) -> dict[str, Any]:
        injectables = {}
        cls = type(self)

        for n in dir(self):
            if (
                n.startswith("_")
                or n in self._exclude_from_injection
                or isinstance(getattr(cls, n, None), (property, tunable))
            ):
                continue

            o = getattr(self, n)

            # Don't inject methods
            if inspect.ismethod(o):
                continue

            injectables[n] = o

        return injectables

    def _create_component(self, name: str, ctyp: type, injectables: dict[str, Any]):
        type_hints = typing.get_type_hints(ctyp.__init__)
        type_hints.pop("return", None)
        requests = get_injection_requests(type_hints, name)
        injections = find_injections(requests, injectables, name)

        component = ctyp(**injections)
        setattr(self, name, component)

        if not callable(getattr(component, "execute", None)):
            raise ValueError(f"Check {name} ({component!r}) must have a method named 'execute'")

        component.logger = logging.getLogger(name)

        self.logger.info("-> %s (class: %s)", name, ctyp.__name__)

        return component

    def _setup_vars(self, cname: str, component, injectables: dict[str, Any]) -> None:
        self.logger.debug("Injecting run products into %s", cname)

        type_hints = typing.get_type_hints(type(component))
        requests = get_injection_requests(type_hints, cname, component)
        injections = find_injections(requests, injectables, cname)
        component.__dict__.update(injections)


class GridLaboratory(Laboratory):
    """Generalized Ricci flow on a periodic grid with a heat solution and its conjugate."""

    flow_identities: checks.FlowIdentities
    conjugate: checks.ConjugateChecks
    liyau: checks.LiYauCheck
    hamilton: checks.HamiltonCheck
    lemma: checks.LemmaCheck
    harnack: checks.HarnackCheck
    frequency: checks.FrequencyCheck

    def createObjects(self) -> None:
        sc = self.scenario
        heat = sc["heat"]

        self.grid = sc.grid()
        self.traj = evolve(sc.initial_state(self.grid), sc.horizon, sc.step_control())
        self.watchdog.addEpoch("flow")
        self.bounds = curvature_bounds(self.traj)

        cfl = sc.step_control().cfl
        self.u0 = sc.heat_initial(self.grid)
        self.u = solve_heat(self.traj, self.u0, cfl)
        self.watchdog.addEpoch("heat")

        self.kernel, self.potential = solve_conjugate(
            self.traj, None, heat["terminal_time"], heat["terminal_width"], cfl
        )
        self.measure = weighted_measure(self.kernel)
        self.t_prime = float(self.kernel.times[-1])
        self.watchdog.addEpoch("conjugate")

    def metadata(self) -> dict:
        if not hasattr(self, "traj"):
            return {}
        meta = self.traj.metadata()
        if hasattr(self, "bounds"):
            meta["curvature_bounds"] = self.bounds.as_dict()
        if hasattr(self, "t_prime"):
            meta["terminal_time"] = self.t_prime
        return meta


class HomogeneousLaboratory(Laboratory):
    """The flow reduced to an ODE for left-invariant data on a 3-dimensional group."""

    homogeneous: checks.HomogeneousCheck

    def createObjects(self) -> None:
        hom = self.scenario["homogeneous"]
        self.milnor = self.scenario.milnor_state()
        self.states = evolve_ode(self.milnor, hom["horizon"], hom["snapshots"], hom["tolerance"])
        self.bounds = homogeneous_bounds(self.states)

    def metadata(self) -> dict:
        if not hasattr(self, "milnor"):
            return {}
        hom = self.scenario["homogeneous"]
        meta = {"initial": self.milnor.as_dict(), "horizon": hom["horizon"], "snapshots": hom["snapshots"]}
        if hasattr(self, "states"):
            meta["final"] = self.states[-1].as_dict()
            meta["curvature_bounds"] = self.bounds.as_dict()
        return meta


def laboratory_for(scenario: Scenario) -> Laboratory:
    """The laboratory matching the scenario's backend."""
    if scenario.backend == "homogeneous":
        return HomogeneousLaboratory(scenario)
    return GridLaboratory(scenario)
