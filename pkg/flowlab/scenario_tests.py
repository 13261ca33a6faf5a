"""
Checks that every bundled scenario parses, validates and builds its
initial data. Import into a test module to run them::

    from flowlab.scenario_tests import *
"""

import pytest

from flowlab.selector import ScenarioSelector

_selector = ScenarioSelector()


def test_scenarios_loaded():
    assert _selector.names()
    assert _selector.default_name is not None


@pytest.mark.parametrize("name", _selector.names())
def test_scenario_builds(name):
    sc = _selector.get(name)
    assert sc.name == name
    assert len(sc.digest) == 64
    if sc.backend == "homogeneous":
        s = sc.milnor_state()
        assert min(s.a, s.b, s.c) > 0
    else:
        s0 = sc.initial_state()
        assert s0.g.min_eigenvalue > 0
        assert sc.heat_initial(s0.grid).min() > 0
        assert sc.liyau_params()
        assert sc["estimates"]["harnack"]["pairs"] >= 50
