import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from grflow.flow import frozen_trajectory
from grflow.geometry import MetricField, ScalarField
from grflow.geometry.families import single_mode
from grflow.heat import (
    Direction,
    HorizonError,
    ScalarEvolution,
    duality_series,
    gaussian_terminal,
    mass_series,
    measure_evolution_residual,
    solve_conjugate,
    solve_heat,
    weighted_measure,
)
from grflow.heat.solvers import MASS_TOLERANCE


def test_flat_single_mode_decays_at_discrete_rate(flat_line, flat_heat):
    grid = flat_line.grid
    h = grid.spacing[0]
    mu = (2 * math.sin(h / 2) / h) ** 2
    x = grid.coordinates()[0]
    assert flat_heat.direction is Direction.FORWARD
    assert len(flat_heat) == len(flat_line)
    for k, t in enumerate(flat_line.times):
        exact = 1 + 0.3 * math.exp(-mu * t) * np.sin(x)
        assert_allclose(flat_heat.values[k], exact, atol=1e-8)


def test_heat_maximum_principle(small_traj, small_heat):
    u0 = small_heat.values[0]
    assert small_heat.values.min() >= u0.min() - 1e-6
    assert small_heat.values.max() <= u0.max() + 1e-6


def test_heat_rejects_bad_initial_data(flat_line, grid3):
    with pytest.raises(ValueError):
        solve_heat(flat_line, ScalarField.constant(flat_line.grid, 0.0))
    with pytest.raises(ValueError):
        solve_heat(flat_line, ScalarField.constant(grid3, 1.0))


def test_gaussian_terminal_has_unit_mass(small_traj):
    k = len(small_traj) - 2
    K = gaussian_terminal(small_traj, k)
    g = small_traj[k].g
    mass = np.sum(K.values * g.sqrt_det) * small_traj.grid.cell_volume
    assert mass == pytest.approx(1.0, abs=1e-12)
    assert K.min() > 0


def test_conjugate_kernel_shape(small_traj, small_conjugate):
    kernel, potential, measure = small_conjugate
    kp = len(small_traj) - 2
    assert kernel.direction is Direction.BACKWARD
    assert len(kernel) == kp + 1
    assert len(potential) == kp
    assert len(measure) == kp + 1
    assert np.all(kernel.values > 0)
    assert_allclose(measure.times, small_traj.times[: kp + 1])


def test_conjugate_mass_is_conserved(small_conjugate):
    _, _, measure = small_conjugate
    masses = mass_series(measure)
    assert np.max(np.abs(masses.values - 1)) <= MASS_TOLERANCE


def test_potential_matches_kernel(small_traj, small_conjugate):
    kernel, potential, _ = small_conjugate
    tp = kernel.times[-1]
    k = 2
    lead = 1.5 * math.log(4 * math.pi * (tp - kernel.times[k]))
    assert_allclose(potential.values[k], -np.log(kernel.values[k]) - lead)


def test_measure_evolution_is_small(small_conjugate):
    _, _, measure = small_conjugate
    res = measure_evolution_residual(measure)
    assert np.all(np.isfinite(res.values))
    assert res.sup() < 1e-2 * measure.density.max()


def test_heat_and_conjugate_pairing_is_constant(small_heat, small_conjugate):
    kernel, _, _ = small_conjugate
    pairing = duality_series(small_heat, kernel)
    assert len(pairing.values) == len(kernel)
    assert np.ptp(pairing.values) < 1e-5 * abs(pairing.values[-1])


def test_duality_needs_one_trajectory(flat_heat, small_conjugate):
    kernel, _, _ = small_conjugate
    with pytest.raises(ValueError):
        duality_series(flat_heat, kernel)


def test_conjugate_horizon_errors(small_traj, flat_line):
    with pytest.raises(HorizonError):
        solve_conjugate(small_traj, t_prime=small_traj.horizon)
    with pytest.raises(HorizonError):
        solve_conjugate(small_traj, t_prime=0.0)
    short = frozen_trajectory(MetricField.flat(flat_line.grid), [0.0, 1.0])
    with pytest.raises(HorizonError):
        solve_conjugate(short)


def test_conjugate_snaps_terminal_time(flat_line):
    kernel, _ = solve_conjugate(flat_line, t_prime=0.2501)
    assert kernel.times[-1] == pytest.approx(0.25)


def test_constant_terminal_on_static_torus(flat_line):
    # a constant datum is rescaled to unit mass and never changes
    kernel, _ = solve_conjugate(flat_line, terminal=ScalarField.constant(flat_line.grid, 2.0), t_prime=0.25)
    volume = flat_line.grid.volume
    assert_allclose(kernel.values, 1 / volume, rtol=1e-12)
    mu = weighted_measure(kernel)
    assert_allclose(mass_series(mu).values, 1.0, rtol=1e-12)


def test_evolution_validation(flat_line):
    grid = flat_line.grid
    with pytest.raises(ValueError):
        ScalarEvolution(flat_line, -np.ones((2,) + grid.shape), Direction.FORWARD)
    with pytest.raises(ValueError):
        ScalarEvolution(flat_line, np.ones((40,) + grid.shape), Direction.FORWARD)
    ev = ScalarEvolution(flat_line, -np.ones((2,) + grid.shape), Direction.FORWARD, positive=False)
    assert len(ev) == 2
    with pytest.raises(ValueError):
        ev.time_derivative()


def test_heat_solution_is_reproducible(flat_line):
    u0 = single_mode(flat_line.grid, mean=2.0, amplitude=0.5, frequency=2, axis=1)
    a = solve_heat(flat_line, u0)
    b = solve_heat(flat_line, u0)
    assert np.array_equal(a.values, b.values)
