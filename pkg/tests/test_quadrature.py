import numpy as np
import pytest

from qbm.quadrature import QuadratureError, QuadSpec, cumulative_integral, integrate_on_mesh


def test_cumulative_integral_of_polynomial_and_oscillation():
    grid = np.linspace(0.0, 5.0, 11)
    res = cumulative_integral(lambda t: np.stack([t**3, np.cos(7 * t)], axis=1), grid)
    np.testing.assert_allclose(res.values[:, 0], grid**4 / 4, rtol=1e-13, atol=1e-14)
    np.testing.assert_allclose(res.values[:, 1], np.sin(7 * grid) / 7, atol=1e-12)
    assert res.values.shape == (11, 2)
    assert res.abserr.shape == (11, 2)
    assert res.values[0].tolist() == [0.0, 0.0]


def test_adaptive_refinement_on_peaked_integrand():
    grid = np.array([0.0, 2.0])
    res = cumulative_integral(lambda t: 1.0 / (1e-4 + (t - 1.0) ** 2), grid)
    exact = 2 * np.arctan(1.0 / 1e-2) / 1e-2
    assert res.values[-1] == pytest.approx(exact, rel=1e-10)
    assert res.mesh.size > 2


def test_mesh_replay_is_identical():
    grid = np.linspace(0.0, 3.0, 7)
    f = lambda t: np.exp(-t) * np.sin(5 * t)  # noqa: E731
    res = cumulative_integral(f, grid)
    again = integrate_on_mesh(f, grid, res.mesh)
    np.testing.assert_array_equal(res.values, again)


def test_mesh_must_contain_grid():
    with pytest.raises(ValueError):
        integrate_on_mesh(np.sin, np.array([0.0, 0.5]), np.array([0.0, 1.0]))


def test_budget_exhaustion_raises():
    spec = QuadSpec(abs_tol=1e-15, rel_tol=1e-15, max_intervals=4)
    with pytest.raises(QuadratureError):
        cumulative_integral(lambda t: np.sin(200 * t), np.array([0.0, 10.0]), spec)


def test_grid_validation():
    with pytest.raises(ValueError):
        cumulative_integral(np.sin, np.array([1.0, 0.0]))
    res = cumulative_integral(np.sin, np.array([2.0]))
    assert res.values.tolist() == [0.0]


def test_quadspec_validation():
    with pytest.raises(ValueError):
        QuadSpec(abs_tol=0)
    with pytest.raises(ValueError):
        QuadSpec(max_intervals=0)
