import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from grflow.estimates import Verdict
from grflow.homogeneous import (
    PRESETS,
    CollapseError,
    MilnorState,
    bismut_flat_k,
    evolve_ode,
    grid_consistency,
    h_squared,
    homogeneous_bounds,
    homogeneous_reports,
    integrate_fixed,
    koszul_ricci,
    milnor_ricci,
    volume_residual,
)


@pytest.mark.parametrize("group", sorted(PRESETS))
@pytest.mark.parametrize("metric", [(1.0, 1.0, 1.0), (0.7, 1.3, 2.1), (3.0, 0.5, 1.0)])
def test_closed_form_ricci_matches_koszul(group, metric):
    s = MilnorState.preset(group, *metric)
    ric = koszul_ricci(s)
    assert_allclose(np.diag(ric), milnor_ricci(s), atol=1e-12)
    assert_allclose(ric - np.diag(np.diag(ric)), 0.0, atol=1e-12)


def test_heisenberg_ricci():
    s = MilnorState.preset("heisenberg")
    assert milnor_ricci(s) == pytest.approx((2.0, -2.0, -2.0))
    assert bismut_flat_k(s) is None


def test_state_validation():
    with pytest.raises(ValueError):
        MilnorState(1.0, 0.0, 1.0, 2.0, 2.0, 2.0)
    with pytest.raises(ValueError):
        MilnorState(1.0, 1.0, 1.0, math.nan, 2.0, 2.0)
    with pytest.raises(ValueError):
        MilnorState.preset("so3")


def test_h_squared():
    s = MilnorState(1.0, 2.0, 4.0, 0.0, 0.0, 0.0, k=2.0)
    assert_allclose(h_squared(s), [4 / 8, 4 / 4, 4 / 2])


def test_round_su2_shrinks_linearly():
    # a = b = c = 1 - 4t without H
    s0 = MilnorState.preset("su2")
    states = evolve_ode(s0, 0.2, snapshots=5)
    for s in states:
        assert s.a == pytest.approx(1 - 4 * s.t, rel=1e-9)
        assert s.a == s.b == s.c
    assert_allclose([s.t for s in states], np.linspace(0, 0.2, 5))
    fixed = integrate_fixed(s0, 0.1, 10)
    assert fixed.a == pytest.approx(0.6, rel=1e-12)


def test_round_su2_collapses():
    with pytest.raises(CollapseError) as excinfo:
        evolve_ode(MilnorState.preset("su2"), 0.3, snapshots=7)
    err = excinfo.value
    assert err.estimate == pytest.approx(0.25, abs=1e-3)
    assert err.t < 0.25
    assert err.states[0].t == 0.0


def test_bismut_flat_fixed_point():
    s0 = MilnorState.preset("su2")
    k = bismut_flat_k(s0)
    assert k == pytest.approx(2 * math.sqrt(2))
    states = evolve_ode(MilnorState.preset("su2", k=k), 0.5, snapshots=9)
    drift = max(float(np.max(np.abs(s.vector() - states[0].vector()))) for s in states)
    assert drift < 1e-10


def test_volume_identity_is_exact():
    s0 = MilnorState(0.8, 1.1, 1.4, 2.0, 2.0, 2.0, k=0.5)
    states = evolve_ode(s0, 0.05, snapshots=5)
    assert volume_residual(states).sup() < 1e-12


def test_grid_consistency():
    s = MilnorState.preset("abelian", 1.2, 0.9, 1.5, k=0.7)
    out = grid_consistency(s)
    assert set(out) == {"h_sq", "trace_h_sq", "rhs"}
    assert max(out.values()) < 1e-12
    out = grid_consistency(MilnorState.preset("su2", k=1.0))
    assert set(out) == {"h_sq", "trace_h_sq"}
    assert max(out.values()) < 1e-12


def test_bounds_of_shrinking_sphere():
    states = evolve_ode(MilnorState.preset("su2"), 0.1, snapshots=3)
    kb = homogeneous_bounds(states)
    assert kb.K1 == 0.0
    assert kb.K3 == 0.0
    # Ric / g = 2 / a(t), so t Ric / g peaks at the last state
    assert kb.K2 == pytest.approx(0.1 * 2 / 0.6)


def test_reports_for_bismut_flat_run():
    s0 = MilnorState.preset("su2", k=bismut_flat_k(MilnorState.preset("su2")))
    result = homogeneous_reports(evolve_ode(s0, 0.5, snapshots=9))
    names = [r.check for r in result.reports]
    assert names == ["homogeneous_volume", "homogeneous_grid_consistency", "homogeneous_fixed_point"]
    assert all(r.verdict is Verdict.PASS for r in result.reports)
    assert result.reports[-1].details["k_star"] == pytest.approx(2 * math.sqrt(2))
    assert list(result.columns()) == ["t", "a", "b", "c", "k", "volume_residual", "drift"]


def test_reports_without_fixed_point():
    result = homogeneous_reports(evolve_ode(MilnorState.preset("heisenberg"), 0.2, snapshots=5))
    assert [r.check for r in result.reports] == ["homogeneous_volume", "homogeneous_grid_consistency"]
    assert all(r.passed for r in result.reports)
    # Ric = (2, -2, -2): a shrinks while b and c grow
    last = result.states[-1]
    assert last.b > 1 and last.c > 1 and last.a < 1
