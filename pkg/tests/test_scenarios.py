from flowlab.scenario_tests import *  # noqa: F401,F403
