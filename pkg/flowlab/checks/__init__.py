from .flow import FlowIdentities
from .heat import ConjugateChecks
from .estimates import HamiltonCheck, HarnackCheck, LemmaCheck, LiYauCheck
from .frequency import FrequencyCheck
from .homogeneous import HomogeneousCheck

__all__ = [
    "FlowIdentities",
    "ConjugateChecks",
    "LiYauCheck",
    "HamiltonCheck",
    "LemmaCheck",
    "HarnackCheck",
    "FrequencyCheck",
    "HomogeneousCheck",
]
