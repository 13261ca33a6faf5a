import numpy as np
import pytest
from numpy.testing import assert_allclose

from grflow.flow import (
    FlowState,
    SingularityError,
    StepBudgetError,
    StepControl,
    StepSizeError,
    Trajectory,
    cohomology_drift,
    curvature_bounds,
    evolve,
    frozen_trajectory,
    grf_rhs,
    h_norm_series,
    load_trajectory,
    save_trajectory,
    stability_ceiling,
    step,
    volume_evolution_residual,
)
from grflow.flow.integrators import rk4_step, substeps
from grflow.geometry import MetricField, ThreeFormField
from grflow.misc import get_threads, set_threads


def test_rk4_is_exact_for_cubics():
    y = rk4_step(0.0, 0.0, 1.0, lambda t, y: t**3)
    assert y == pytest.approx(0.25, abs=1e-15)
    y = rk4_step(np.array([1.0, 2.0]), 1.0, 0.5, lambda t, y: np.array([t**3, 3 * t**2]))
    assert_allclose(y, [1.0 + (1.5**4 - 1) / 4, 2.0 + 1.5**3 - 1])


def test_substeps():
    assert substeps(1.0, 0.3) == (4, 0.25)
    n, dt = substeps(0.6, 0.2)
    assert n == 3
    assert dt == pytest.approx(0.2)
    assert substeps(0.0, 0.1) == (0, 0.0)


def test_step_control_validation():
    with pytest.raises(ValueError):
        StepControl(cfl=0.0)
    with pytest.raises(ValueError):
        StepControl(cfl=1.5)
    with pytest.raises(ValueError):
        StepControl(cadence=0)


def test_step_rejects_oversized_steps(grid3):
    s = FlowState(MetricField.flat(grid3))
    ceiling = stability_ceiling(s.g)
    assert ceiling == pytest.approx(0.2 * grid3.min_spacing**2)
    with pytest.raises(StepSizeError):
        step(s, 2 * ceiling)
    with pytest.raises(StepSizeError):
        step(s, -ceiling)
    assert step(s, ceiling).t == pytest.approx(ceiling)


def test_fourth_order_ceiling_is_smaller(grid3):
    from grflow.geometry import GridSpec

    g4 = MetricField.flat(GridSpec.cube(3, 8, grid3.sides[0], order=4))
    assert stability_ceiling(g4) == pytest.approx(36 / 49 * stability_ceiling(MetricField.flat(grid3)))


def test_flat_torus_is_stationary(grid3):
    g = MetricField.flat(grid3)
    traj = evolve(FlowState(g), 0.1, StepControl(cadence=4))
    assert len(traj) == 5
    assert_allclose(traj.times, np.linspace(0, 0.1, 5))
    for s in traj:
        assert np.array_equal(s.g.matrix, g.matrix)
        assert s.H is None
    assert traj.max_step <= stability_ceiling(g) * (1 + 1e-9)


def test_zero_h_stays_zero(grid3, bump3):
    H = ThreeFormField.from_values(grid3, np.zeros(grid3.shape))
    traj = evolve(FlowState(bump3, H), 0.02, StepControl(cadence=4))
    assert traj.has_h
    assert all(s.H.is_zero() for s in traj)
    assert h_norm_series(traj).sup() == 0.0


def test_constant_h_on_flat_torus(grid3):
    # g = c(t) I with c^3 = 1 + 3/2 k^2 t, and H does not change
    k = 0.8
    H = ThreeFormField.from_values(grid3, np.full(grid3.shape, k))
    traj = evolve(FlowState(MetricField.flat(grid3), H), 0.2, StepControl(cadence=16))
    eye = np.eye(3)
    for s in traj:
        c = (1 + 1.5 * k * k * s.t) ** (1 / 3)
        assert_allclose(s.g.matrix, c * np.broadcast_to(eye, s.g.matrix.shape), rtol=1e-8, atol=1e-12)
        assert_allclose(s.H.phi, k, rtol=1e-12)
    assert volume_evolution_residual(traj).sup() < 1e-4
    assert cohomology_drift(traj).sup() < 1e-10


def test_identities_along_generalized_flow(small_traj):
    assert len(small_traj) == 17
    assert small_traj.horizon == pytest.approx(0.05)
    assert volume_evolution_residual(small_traj).sup() < 1e-4
    assert cohomology_drift(small_traj).sup() < 1e-10
    norms = h_norm_series(small_traj)
    assert np.all(norms.values > 0)


def test_curvature_bounds(small_traj, grid3):
    kb = curvature_bounds(small_traj)
    assert kb.K1 >= 0 and kb.K2 >= 0 and kb.K3 > 0 and kb.K4 > 0
    assert kb.K == max(kb.K1**2, kb.K2**2)
    flat = curvature_bounds(frozen_trajectory(MetricField.flat(grid3), [0.0, 0.5, 1.0]))
    assert flat.as_dict() == {"K1": 0.0, "K2": 0.0, "K3": 0.0, "K4": 0.0, "K": 0.0}


def test_curvature_bounds_reject_negative():
    from grflow.flow import CurvatureBounds

    with pytest.raises(ValueError):
        CurvatureBounds(K1=-1.0)


def test_volume_residual_needs_three_snapshots(grid3):
    traj = frozen_trajectory(MetricField.flat(grid3), [0.0, 1.0])
    with pytest.raises(ValueError):
        volume_evolution_residual(traj)


def test_trajectory_validation(grid3):
    g = MetricField.flat(grid3)
    with pytest.raises(ValueError):
        Trajectory((FlowState(g, t=0.5),), (), 0.5)
    with pytest.raises(ValueError):
        Trajectory((FlowState(g, t=0.0), FlowState(g, t=0.0)), (), 0.0)
    with pytest.raises(ValueError):
        Trajectory((FlowState(g, t=0.0), FlowState(g, t=1.0)), (), 2.0)
    with pytest.raises(ValueError):
        FlowState(g, t=-1.0)


def test_state_at_snapshots_and_between(small_traj):
    t = small_traj.times[3]
    assert_allclose(small_traj.state_at(t).g.matrix, small_traj[3].g.matrix)
    mid = 0.5 * (small_traj.times[3] + small_traj.times[4])
    g_mid = small_traj.metric_at(mid).matrix
    lo = np.minimum(small_traj[3].g.matrix, small_traj[4].g.matrix)
    hi = np.maximum(small_traj[3].g.matrix, small_traj[4].g.matrix)
    spread = np.abs(hi - lo).max()
    assert np.all(g_mid >= lo - spread) and np.all(g_mid <= hi + spread)
    with pytest.raises(ValueError):
        small_traj.packed_at(1.0)


def test_subsample_keeps_last(small_traj):
    sub = small_traj.subsample(5)
    assert_allclose(sub.times, small_traj.times[[0, 5, 10, 15, 16]])


def test_singularity_error_message():
    e = SingularityError(0.25, (1.0, 2.0), -1e-3)
    assert e.t == 0.25
    assert e.location == (1.0, 2.0)
    assert e.trajectory is None
    assert "t = 0.25" in str(e)


def test_step_budget_keeps_partial_trajectory(grid3):
    # one internal step per snapshot on the flat torus
    with pytest.raises(StepBudgetError) as e:
        evolve(FlowState(MetricField.flat(grid3)), 0.1, StepControl(cadence=4, max_steps=2))
    assert e.value.steps == 2
    assert len(e.value.trajectory) == 3
    assert e.value.trajectory.horizon == pytest.approx(0.05)
    assert e.value.t > 0.05


def test_trajectory_io(small_traj, tmp_path):
    path = tmp_path / "trajectory.json"
    save_trajectory(path, small_traj)
    loaded = load_trajectory(path)
    assert len(loaded) == len(small_traj)
    assert_allclose(loaded.times, small_traj.times, rtol=0, atol=0)
    for a, b in zip(loaded, small_traj):
        assert np.array_equal(a.g.base.upper, b.g.base.upper)
        assert np.array_equal(a.H.phi, b.H.phi)
    assert loaded.step_sizes == small_traj.step_sizes
    assert path.read_bytes() == _saved_again(loaded, tmp_path)


def _saved_again(traj, tmp_path):
    other = tmp_path / "again.json"
    save_trajectory(other, traj)
    return other.read_bytes()


def test_thread_count_does_not_change_results(small_traj):
    before = get_threads()
    try:
        set_threads(1)
        one = curvature_bounds(small_traj)
        set_threads(3)
        three = curvature_bounds(small_traj)
    finally:
        set_threads(before)
    assert one == three


def test_rhs_on_flat_torus(grid3):
    g = MetricField.flat(grid3)
    dg, dH = grf_rhs(FlowState(g))
    assert dH is None
    assert_allclose(dg.matrix, 0.0, atol=1e-12)

    # H = k dx^dy^dz gives H^2 = k^2 I and dd*H = 0
    H = ThreeFormField.from_values(grid3, np.full(grid3.shape, 2.0))
    dg, dH = grf_rhs(FlowState(g, H))
    assert_allclose(dg.matrix, 2.0 * np.broadcast_to(np.eye(3), dg.matrix.shape), atol=1e-12)
    assert_allclose(dH.phi, 0.0, atol=1e-12)
