from .laboratory import GridLaboratory, HomogeneousLaboratory, Laboratory, RunReport, laboratory_for
from .lab_tunable import feedback, tunable
from .scenario import Scenario, ScenarioError
from .selector import ScenarioSelector

__all__ = (
    "Laboratory",
    "GridLaboratory",
    "HomogeneousLaboratory",
    "RunReport",
    "laboratory_for",
    "feedback",
    "tunable",
    "Scenario",
    "ScenarioError",
    "ScenarioSelector",
)
