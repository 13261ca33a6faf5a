import math

import numpy as np
import pytest

from grflow.flow import FlowState, StepControl, evolve, frozen_trajectory
from grflow.geometry import GridSpec, MetricField, ThreeFormField
from grflow.geometry.families import conformal_bump_metric, single_mode
from grflow.heat import solve_conjugate, solve_heat, weighted_measure

TWO_PI = 2 * math.pi


@pytest.fixture(scope="session")
def grid3():
    return GridSpec.cube(3, 8, TWO_PI)


@pytest.fixture(scope="session")
def grid2():
    return GridSpec.cube(2, 16, TWO_PI)


@pytest.fixture(scope="session")
def bump3(grid3):
    return conformal_bump_metric(grid3, amplitude=0.1, frequency=1, axes=(0,))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def flat_line():
    """A static flat torus sampled at 33 times on [0, 0.5]."""
    grid = GridSpec.cube(2, 16, TWO_PI)
    return frozen_trajectory(MetricField.flat(grid), np.linspace(0.0, 0.5, 33))


@pytest.fixture(scope="session")
def flat_heat(flat_line):
    u0 = single_mode(flat_line.grid, mean=1.0, amplitude=0.3, frequency=1)
    return solve_heat(flat_line, u0)


@pytest.fixture(scope="session")
def small_traj(grid3, bump3):
    """Generalized flow of a bumped torus with a varying 3-form, cached per session."""
    H = ThreeFormField(grid3, single_mode(grid3, mean=0.5, amplitude=0.2, frequency=1, axis=1))
    return evolve(FlowState(bump3, H, 0.0), 0.05, StepControl(cadence=16))


@pytest.fixture(scope="session")
def small_heat(small_traj):
    u0 = single_mode(small_traj.grid, mean=1.0, amplitude=0.3, frequency=1, axis=2)
    return solve_heat(small_traj, u0)


@pytest.fixture(scope="session")
def small_conjugate(small_traj):
    kernel, potential = solve_conjugate(small_traj)
    return kernel, potential, weighted_measure(kernel)
