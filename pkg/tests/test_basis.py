"""Tests for spatial_sieve.stats.basis."""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import numpy as np
import pytest

from spatial_sieve.ext import exceptions
from spatial_sieve.stats import basis


def test_dimension_without_interior_knots():
    assert basis.build_bspline_basis(3, 0).dimension == 4


def test_tensor_dimension_of_application_sieve():
    sieve = basis.tensor_basis([3, 3], [26, 26])
    assert sieve.shape == (30, 30)
    assert sieve.total_dimension == 900


def test_clamped_knot_vector():
    uni = basis.build_bspline_basis(2, 3, (0.0, 1.0))
    np.testing.assert_allclose(uni.knot_vector, [0, 0, 0, .25, .5, .75, 1, 1, 1])


def test_invalid_constructions():
    with pytest.raises(exceptions.InvalidParameters):
        basis.build_bspline_basis(0, 2)
    with pytest.raises(exceptions.InvalidParameters):
        basis.build_bspline_basis(3, -1)
    with pytest.raises(exceptions.InvalidParameters):
        basis.build_bspline_basis(3, 2, (1.0, 1.0))


def test_linear_hat_at_midpoint():
    uni = basis.build_bspline_basis(1, 0)
    np.testing.assert_allclose(basis.eval_univariate(uni, 0.0), [0.5, 0.5])


def test_cubic_interpolates_endpoints():
    uni = basis.build_bspline_basis(3, 0, (0.0, 1.0))
    np.testing.assert_allclose(basis.eval_univariate(uni, 0.0), [1, 0, 0, 0], atol=1e-15)
    np.testing.assert_allclose(basis.eval_univariate(uni, 1.0), [0, 0, 0, 1], atol=1e-15)


def test_quadratic_matches_hand_recursion():
    # knots (0,0,0,.5,1,1,1), t=0.25:
    # B0 = (1-2t)^2, B1 = t/.5 (1-2t) + (1-t) 2t, B2 = t 2t, B3 = 0
    uni = basis.build_bspline_basis(2, 1, (0.0, 1.0))
    np.testing.assert_array_equal(uni.knot_vector, [0, 0, 0, .5, 1, 1, 1])
    np.testing.assert_allclose(basis.eval_univariate(uni, 0.25), [0.25, 0.625, 0.125, 0.0], atol=1e-15)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_partition_of_unity(d, rng):
    sieve = basis.tensor_basis([3] * d, [4] * d)
    points = rng.uniform(-0.5, 0.5, size=(50, d))
    np.testing.assert_allclose(sieve.evaluate(points).sum(axis=1), 1.0, atol=1e-13)
    np.testing.assert_allclose(sieve.evaluate(np.full((1, d), 0.5)).sum(), 1.0, atol=1e-13)


def test_corner_products_at_center():
    sieve = basis.tensor_basis([1, 1], [0, 0])
    np.testing.assert_allclose(basis.eval_tensor(sieve, [0.0, 0.0]), [0.25] * 4)


def test_one_dimensional_tensor_is_univariate(rng):
    uni = basis.build_bspline_basis(3, 5)
    sieve = basis.TensorBasis((uni,))
    t = rng.uniform(-0.5, 0.5, size=20)
    np.testing.assert_allclose(sieve.evaluate(t[:, None]), uni.evaluate(t), atol=1e-15)


def test_flat_index_is_row_major():
    sieve = basis.tensor_basis([1, 1], [1, 2])
    assert sieve.shape == (3, 4)
    assert int(sieve.flat_index(([1], [2]))[0]) == 6
    first, second = sieve.multi_index(11)
    assert (int(first), int(second)) == (2, 3)


def test_sparse_rows_hold_only_the_window(rng):
    sieve = basis.tensor_basis([3, 3], [10, 10])
    rows = sieve.evaluate_sparse(rng.uniform(-0.5, 0.5, size=(30, 2)))
    assert rows.shape == (30, sieve.total_dimension)
    assert np.all(np.diff(rows.indptr) == sieve.support_size)


def test_points_outside_the_cube_are_rejected():
    sieve = basis.tensor_basis([3, 3], [2, 2])
    with pytest.raises(exceptions.DomainError):
        sieve.evaluate([[0.0, 0.6]])


def test_gradient_columns_sum_to_zero(rng):
    sieve = basis.tensor_basis([3, 3], [3, 5])
    grad = sieve.gradient(rng.uniform(-0.5, 0.5, size=(10, 2)))
    np.testing.assert_allclose(grad.sum(axis=1), 0.0, atol=1e-10)


def test_linear_slope_inside_a_span():
    uni = basis.build_bspline_basis(1, 1)
    deriv = uni.derivative([-0.25])[0]
    np.testing.assert_allclose(deriv, [-2.0, 2.0, 0.0])


def test_gradient_matches_finite_differences(rng):
    sieve = basis.tensor_basis([3, 2], [4, 3])
    z = rng.uniform(-0.4, 0.4, size=2)
    grad = basis.eval_tensor_gradient(sieve, z)
    step = 1e-6
    for k in range(2):
        e = np.zeros(2)
        e[k] = step
        numeric = (basis.eval_tensor(sieve, z + e) - basis.eval_tensor(sieve, z - e)) / (2 * step)
        np.testing.assert_allclose(grad[:, k], numeric, rtol=1e-5, atol=1e-7)


def test_dict_round_trip_rebuilds_same_values(rng):
    sieve = basis.tensor_basis([3, 2], [5, 4])
    again = basis.TensorBasis.from_dict(sieve.to_dict())
    points = rng.uniform(-0.5, 0.5, size=(5, 2))
    np.testing.assert_array_equal(sieve.evaluate(points), again.evaluate(points))


@pytest.mark.parametrize(("total", "d", "expected"), [(900, 2, (30, 30)), (100, 1, (100,)), (10, 2, (4, 4)),
                                                      (1000, 3, (10, 10, 10))])
def test_factor_dimension(total, d, expected):
    assert basis.factor_dimension(total, d, 3) == expected


def test_factor_dimension_stays_below_request():
    sizes = basis.factor_dimension(950, 2, 3)
    assert np.prod(sizes) <= 950
    assert max(sizes) - min(sizes) <= 1


def test_cube_grid_row_major_corners():
    grid = basis.cube_grid(2, d=2)
    np.testing.assert_array_equal(grid, [[-0.5, -0.5], [-0.5, 0.5], [0.5, -0.5], [0.5, 0.5]])
    with pytest.raises(exceptions.InvalidParameters):
        basis.cube_grid(1, d=2)


@pytest.mark.parametrize("d", [1, 2])
def test_polynomials_up_to_the_degree_are_reproduced(d, rng):
    sieve = basis.tensor_basis([3] * d, [4] * d)
    points = rng.uniform(-0.5, 0.5, size=(200, d))
    psi = sieve.evaluate(points)
    for powers in np.ndindex(*([4] * d)):
        target = np.prod(points**np.asarray(powers), axis=1)
        coef = np.linalg.lstsq(psi, target, rcond=None)[0]
        assert np.max(np.abs(psi @ coef - target)) < 1e-10


@pytest.mark.parametrize(("degree", "d"), [(3, 1), (3, 2), (2, 3)])
def test_at_most_the_local_window_is_nonzero(degree, d, rng):
    sieve = basis.tensor_basis([degree] * d, [5] * d)
    points = np.vstack([rng.uniform(-0.5, 0.5, size=(40, d)), np.full((1, d), 0.5), np.zeros((1, d))])
    counts = np.count_nonzero(sieve.evaluate(points), axis=1)
    assert counts.max() <= (degree + 1)**d
    assert sieve.support_size == (degree + 1)**d
