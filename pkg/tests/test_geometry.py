import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from grflow.geometry import (
    FORM_NORM,
    DegenerateMetricError,
    GridSpec,
    MetricField,
    ScalarField,
    ShapeError,
    SymTensorField,
    ThreeFormField,
    UnsupportedDimensionError,
    christoffel,
    dirichlet_matrix,
    divergence_form,
    hform_ops,
    integrate,
    laplacian,
    relative_eigenvalues,
    ricci,
    scalar_calculus,
    tensor_calculus,
    tracefree_decompose,
)
from grflow.geometry.curvature import trace
from grflow.geometry.families import (
    conformal_bump_metric,
    conformal_factor,
    random_smooth_metric,
    random_smooth_symmetric,
    single_mode,
)
from grflow.geometry.operators import metric_weights


def test_grid_validation():
    with pytest.raises(UnsupportedDimensionError):
        GridSpec.cube(4, 8)
    with pytest.raises(ShapeError):
        GridSpec.cube(3, 4)
    with pytest.raises(ShapeError):
        GridSpec(2, (8, 8, 8), (1.0, 1.0))
    with pytest.raises(ValueError):
        GridSpec.cube(2, 8, order=3)


def test_grid_geometry():
    grid = GridSpec.cube(3, 8, 2.0)
    assert grid.spacing == (0.25, 0.25, 0.25)
    assert grid.cell_volume == pytest.approx(0.25**3)
    assert grid.volume == pytest.approx(8.0)
    assert grid.refined().points == (16, 16, 16)
    assert_allclose(grid.wrap([1.5, -1.5, 0.5]), [-0.5, 0.5, 0.5])


def test_degenerate_metric_reports_location(grid2):
    m = np.broadcast_to(np.eye(2), grid2.shape + (2, 2)).copy()
    m[3, 5] = [[1.0, 0.0], [0.0, -1.0]]
    with pytest.raises(DegenerateMetricError) as excinfo:
        MetricField.from_matrix(grid2, m)
    assert excinfo.value.index == (3, 5)
    assert excinfo.value.eigenvalue == pytest.approx(-1.0)
    assert excinfo.value.coordinates == pytest.approx(grid2.point((3, 5)))


def test_symmetric_storage(grid2, rng):
    m = rng.standard_normal(grid2.shape + (2, 2))
    T = SymTensorField.from_matrix(grid2, m)
    assert_allclose(T.matrix, np.swapaxes(T.matrix, -1, -2))
    assert_allclose(T.matrix, 0.5 * (m + np.swapaxes(m, -1, -2)))


@pytest.mark.parametrize("scale", [1.0, 2.5])
def test_flat_metric_is_flat(grid3, scale):
    g = MetricField.flat(grid3, scale)
    assert np.all(christoffel(g).values == 0)
    ric, R = ricci(g)
    assert np.all(ric.upper == 0)
    assert np.all(R.values == 0)


def test_conformal_scalar_curvature_2d():
    # g = exp(2 phi) delta in 2D has R = -2 exp(-2 phi) Laplacian(phi)
    grid = GridSpec.cube(2, 32, 2 * math.pi)
    g = conformal_bump_metric(grid, amplitude=0.1, frequency=1, axes=(0,), conformal_axes=(0, 1))
    phi = conformal_factor(grid, amplitude=0.1, frequency=1, axes=(0,))
    expected = -2 * np.exp(-2 * phi) * (-phi)
    _, R = ricci(g)
    assert_allclose(R.values, expected, atol=1e-2)


def test_scalar_calculus_flat(grid2):
    g = MetricField.flat(grid2)
    u = single_mode(grid2, mean=1.0, amplitude=0.5, frequency=1)
    sc = scalar_calculus(g, u)
    x = grid2.coordinates()[0]
    assert_allclose(sc.grad_sq.values, (0.5 * np.cos(x)) ** 2, atol=0.02)
    assert_allclose(sc.lap.values, -0.5 * np.sin(x), atol=0.02)


def test_laplacian_flat_mode_is_discrete_eigenvalue(grid2):
    g = MetricField.flat(grid2)
    u = single_mode(grid2, mean=0.0, amplitude=1.0, frequency=1)
    h = grid2.spacing[0]
    mu = (2 * math.sin(h / 2) / h) ** 2
    assert_allclose(laplacian(g, u).values, -mu * u.values, atol=1e-12)


def test_laplacian_annihilates_constants(bump3):
    one = ScalarField.constant(bump3.grid, 1.0)
    assert_allclose(laplacian(bump3, one).values, 0.0, atol=1e-12)


def test_divergence_form_integrates_to_zero(bump3, rng):
    grid = bump3.grid
    v = rng.standard_normal(grid.shape)
    total = np.sum(divergence_form(grid, metric_weights(bump3), v))
    assert abs(total) < 1e-10


def test_dirichlet_matrix_matches_operator(bump3, rng):
    grid = bump3.grid
    W = metric_weights(bump3)
    S = dirichlet_matrix(grid, W)
    assert abs(S - S.T).max() < 1e-12
    v = rng.standard_normal(grid.shape)
    assert_allclose(S @ v.ravel(), -divergence_form(grid, W, v).ravel(), atol=1e-10)
    assert_allclose(S @ np.ones(grid.size), 0.0, atol=1e-12)


def _laplacian_error(n, order):
    # g = exp(2 phi(x)) I in 3d, u = sin x: Lap u = exp(-2 phi) (phi' cos x - sin x)
    grid = GridSpec(3, (n, 8, 8), (2 * math.pi,) * 3, order)
    x = grid.coordinates()[0]
    a = 0.3
    phi = a * np.sin(x)
    g = MetricField.from_matrix(grid, np.exp(2 * phi)[..., None, None] * np.eye(3))
    u = ScalarField(grid, np.sin(x))
    exact = np.exp(-2 * phi) * (a * np.cos(x) ** 2 - np.sin(x))
    return np.abs(laplacian(g, u).values - exact).max()


@pytest.mark.parametrize("order,low,high", [(2, 1.9, 2.3), (4, 3.8, 4.6)])
def test_laplacian_observed_order(order, low, high):
    coarse, fine = _laplacian_error(32, order), _laplacian_error(64, order)
    assert low < math.log2(coarse / fine) < high


def test_fourth_order_operator_is_conservative(rng):
    grid = GridSpec.cube(3, 8, 2 * math.pi, order=4)
    g = conformal_bump_metric(grid, amplitude=0.1, frequency=1, axes=(0, 1))
    W = metric_weights(g)
    S = dirichlet_matrix(grid, W)
    assert abs(S - S.T).max() < 1e-12
    v = rng.standard_normal(grid.shape)
    assert_allclose(S @ v.ravel(), -divergence_form(grid, W, v).ravel(), atol=1e-10)
    assert abs(np.sum(divergence_form(grid, W, v))) < 1e-10


def test_integrate_volume(bump3):
    grid = bump3.grid
    vol = integrate(bump3, np.ones(grid.shape))
    assert vol == pytest.approx(np.sum(bump3.sqrt_det) * grid.cell_volume)
    assert vol > 0


def test_h_form_constant_on_flat(grid3):
    k = 0.7
    g = MetricField.flat(grid3)
    H = ThreeFormField.from_values(grid3, np.full(grid3.shape, k))
    ops = hform_ops(g, H)
    assert_allclose(ops.h_sq.matrix, k * k * np.broadcast_to(np.eye(3), grid3.shape + (3, 3)))
    assert_allclose(ops.norm_h_sq.values, k * k)
    assert_allclose(ops.trace_h_sq.values, 3 * k * k)
    assert_allclose(ops.dd_star.phi, 0.0, atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_trace_h_sq_is_form_norm_times_norm(grid3, seed):
    g = random_smooth_metric(grid3, seed=seed, amplitude=0.4)
    rng = np.random.default_rng(seed)
    H = ThreeFormField.from_values(grid3, rng.standard_normal(grid3.shape))
    ops = hform_ops(g, H)
    assert_allclose(ops.trace_h_sq.values, FORM_NORM * ops.norm_h_sq.values, rtol=1e-12, atol=1e-14)
    assert relative_eigenvalues(g, ops.h_sq).min() > -1e-12


def test_h_form_needs_three_dimensions(grid2):
    with pytest.raises(UnsupportedDimensionError):
        ThreeFormField.from_values(grid2, np.zeros(grid2.shape))


def test_trace_gradient_bound_random_draws(grid3):
    # |grad tr Q|^2 <= n |grad Q|^2 pointwise, for 100 random (g, Q)
    n = grid3.dim
    for seed in range(100):
        rng = np.random.default_rng(seed)
        g = random_smooth_metric(grid3, seed=seed, amplitude=0.5)
        Q = SymTensorField.from_matrix(grid3, random_smooth_symmetric(grid3, rng, amplitude=1.0))
        tc = tensor_calculus(g, Q)
        assert np.all(
            tc.grad_trace_sq.values <= n * tc.norm_sq.values * (1 + 1e-12) + 1e-14
        ), f"violated for seed {seed}"


def test_tracefree_decompose(bump3, rng):
    grid = bump3.grid
    Q = SymTensorField.from_matrix(grid, rng.standard_normal(grid.shape + (3, 3)))
    parts = tracefree_decompose(bump3, Q)
    assert_allclose(trace(bump3, parts.V), 0.0, atol=1e-12)
    assert_allclose(parts.trace_part.matrix + parts.V.matrix, Q.matrix, atol=1e-12)


def test_random_metric_is_seeded(grid3):
    a = random_smooth_metric(grid3, seed=3)
    b = random_smooth_metric(grid3, seed=3)
    c = random_smooth_metric(grid3, seed=4)
    assert np.array_equal(a.matrix, b.matrix)
    assert not np.array_equal(a.matrix, c.matrix)
    with pytest.raises(ValueError):
        random_smooth_metric(grid3, amplitude=1.5)
