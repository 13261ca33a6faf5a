import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from grflow.estimates import ParameterError, Verdict
from grflow.flow import CurvatureBounds, curvature_bounds
from grflow.frequency import (
    DegenerateFrequencyError,
    FrequencyParams,
    HFunction,
    WindowError,
    compute_series,
    eigenvalue_check,
    eigenvalue_series,
    frequency_constants,
    hamilton_energy_check,
    i_prime_identity,
    integral_harnack_check,
    monotonicity_check,
    weighted_eigenpair,
    window_indices,
)
from grflow.frequency.eigen import _operators
from grflow.geometry import GridSpec, MetricField, ScalarField
from grflow.geometry.families import single_mode


def test_constants_hand_values(grid3):
    u0 = single_mode(grid3, mean=1.0, amplitude=0.3)
    fc = frequency_constants(3, CurvatureBounds(K1=0.1), u0)
    assert fc.C1 == pytest.approx(0.1875)
    assert fc.C2 == pytest.approx(0.72)
    assert fc.C3 == pytest.approx(0.6)
    assert fc.A == pytest.approx(u0.max())
    assert fc.kappa == pytest.approx(u0.min())

    fc = frequency_constants(3, CurvatureBounds(), u0)
    assert (fc.C1, fc.C2, fc.C3) == (0.1875, 0.0, 0.0)
    assert fc.c(0.5) == pytest.approx(2 * fc.log_ratio)


def test_envelope_without_curvature(grid3):
    fc = frequency_constants(3, CurvatureBounds(), single_mode(grid3))
    t = np.array([0.25, 1.0])
    assert_allclose(fc.envelope(t), 12 / t + math.sqrt(12 * 0.1875))


def test_degenerate_initial_data(grid3):
    with pytest.raises(DegenerateFrequencyError):
        frequency_constants(3, CurvatureBounds(), ScalarField.constant(grid3, 2.0))
    with pytest.raises(DegenerateFrequencyError):
        frequency_constants(3, CurvatureBounds(), single_mode(grid3, mean=0.0, amplitude=1.0))


def test_h_families():
    t = np.array([0.0, 0.5, 1.0])
    const = HFunction("constant", -2.0)
    assert_allclose(const(t), -2.0)
    assert_allclose(const.log_derivative(t), 0.0)

    lin = HFunction("linear", 1.0, 2.0)
    assert_allclose(lin(t), [1.0, 2.0, 3.0])
    assert_allclose(lin.log_derivative(t), [2.0, 1.0, 2.0 / 3.0])

    exp = HFunction("exponential", -1.0, 0.5)
    assert_allclose(exp(t), -np.exp(0.5 * t))
    assert_allclose(exp.log_derivative(t), 0.5)

    assert const.sign_on(0.1, 1.0) == -1
    assert lin.sign_on(0.1, 1.0) == 1
    assert HFunction("linear", -1.0, 2.0).sign_on(0.1, 1.0) == 0

    with pytest.raises(ParameterError):
        HFunction("cubic")
    with pytest.raises(ParameterError):
        HFunction("constant", float("inf"))


def test_frequency_params_validation():
    with pytest.raises(WindowError):
        FrequencyParams(HFunction(), 0.5, 0.5)
    with pytest.raises(WindowError):
        FrequencyParams(HFunction(), 0.0, 0.5)
    with pytest.raises(ParameterError):
        FrequencyParams(HFunction("linear", -1.0, 10.0), 0.05, 0.5)
    p = FrequencyParams(HFunction("constant", 1.0), 0.1, 0.5)
    assert p.sign == 1
    assert p.as_dict() == {"h": {"kind": "constant", "p": 1.0, "q": 0.0}, "t0": 0.1, "t1": 0.5}


def test_window_indices():
    times = np.linspace(0.0, 1.0, 11)
    idx = window_indices(times, FrequencyParams(HFunction(), 0.2, 0.5))
    assert list(idx) == [2, 3, 4, 5]
    # ends between snapshots snap inwards
    idx = window_indices(times, FrequencyParams(HFunction(), 0.15, 0.55))
    assert list(idx) == [2, 3, 4, 5]
    with pytest.raises(WindowError):
        window_indices(times, FrequencyParams(HFunction(), 0.5, 1.5))
    with pytest.raises(WindowError):
        window_indices(times, FrequencyParams(HFunction(), 0.21, 0.29))


@pytest.mark.parametrize("points", [16, 24])
def test_flat_weighted_eigenvalue(points):
    L = 2 * math.pi
    grid = GridSpec.cube(2, points, L)
    g = MetricField.flat(grid)
    density = np.full(grid.shape, 1 / grid.volume)
    pair = weighted_eigenpair(g, density)
    h = grid.spacing[0]
    expected = (2 * math.sin(math.pi * h / L) / h) ** 2
    assert pair.value == pytest.approx(expected, rel=1e-8)
    S, M = _operators(g, density)
    assert pair.rayleigh_quotient(S, M) == pytest.approx(pair.value, rel=1e-8)
    mean = np.sum(pair.vector * density) * grid.cell_volume
    assert abs(mean) < 1e-10


@pytest.fixture(scope="module")
def window(small_traj, small_conjugate):
    _, _, measure = small_conjugate
    tp = measure.times[-1]
    return FrequencyParams(HFunction("constant", -1.0), tp / 4, tp)


@pytest.fixture(scope="module")
def freq_series(small_traj, small_heat, small_conjugate, window):
    _, _, measure = small_conjugate
    fc = frequency_constants(3, curvature_bounds(small_traj), small_heat.field(0))
    return compute_series(small_heat, measure, window, fc)


def test_series_layout(freq_series, window):
    s = freq_series
    assert s.times[0] >= window.t0 - 1e-12
    assert s.times[-1] == pytest.approx(window.t1)
    assert s.E[0] == 0.0
    assert np.all(np.diff(s.E) < 0)
    assert_allclose(s.beta, np.exp(s.E))
    assert_allclose(s.U, s.beta * s.D / s.I)
    assert np.all(s.D < 0)
    assert list(s.columns()) == [
        "t", "I", "D", "E", "U", "beta", "h", "hprime_over_h", "grad_sq_mass", "laplace_sq_mass",
    ]
    with pytest.raises(ValueError):
        s.with_eigenvalues(np.ones(len(s) + 1))


def test_i_prime_identity(freq_series, window):
    res = i_prime_identity(freq_series, window)
    assert len(res.values) == len(freq_series) - 2
    assert res.sup() < 1e-4 * np.max(np.abs(freq_series.I))


def test_monotonicity_and_consequences(freq_series, window):
    mono = monotonicity_check(freq_series, window)
    assert mono.check == "frequency_monotonicity"
    assert mono.details["direction"] == "increasing"
    assert mono.passed
    assert integral_harnack_check(freq_series, window).passed
    energy = hamilton_energy_check(freq_series)
    assert energy.verdict is Verdict.PASS


def test_eigenvalue_monotonicity(small_traj, small_conjugate, freq_series, window):
    _, _, measure = small_conjugate
    lam = eigenvalue_series(small_traj, measure, window)
    assert_allclose(lam.times, freq_series.times)
    assert np.all(lam.values > 0)
    s = freq_series.with_eigenvalues(lam.values)
    assert "lambda_M" in s.columns()
    assert eigenvalue_check(s, window).passed
    with pytest.raises(ValueError):
        eigenvalue_check(freq_series, window)


def test_series_needs_shared_trajectory(flat_heat, small_conjugate, window, grid3):
    _, _, measure = small_conjugate
    fc = frequency_constants(3, CurvatureBounds(), single_mode(grid3))
    with pytest.raises(ValueError):
        compute_series(flat_heat, measure, window, fc)
