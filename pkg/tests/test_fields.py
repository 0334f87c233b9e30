"""Tests for spatial_sieve.stats.fields."""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import json
import math

import numpy as np
import pytest
from scipy import integrate, stats

from spatial_sieve.database import config
from spatial_sieve.ext import exceptions
from spatial_sieve.stats import design, fields

EXPONENTIAL = fields.ExponentialKernel(1.0, 1.0)
GAUSSIAN = fields.GaussianDriver(1.0)


def _line(length: float, n: int, seed: int = 3) -> design.SiteSet:
    return design.draw_sites(design.SamplingDesign((length,)), n, seed=seed)


def test_exponential_kernel_values():
    assert fields.kernel_eval(EXPONENTIAL, [0.0]) == 1.0
    assert fields.kernel_eval(fields.ExponentialKernel(2.0, 0.5), [2.0, 0.0]) == pytest.approx(0.7357588823, abs=1e-10)


def test_carma_kernel_matches_hand_weights():
    # a'(z) = 2z(2z^2 - 5), b(z) = z^2 - 1/4: weights 0.75/6 and 3.75/-12
    kernel = fields.CarmaKernel((-1.0, -2.0), (0.5,))
    np.testing.assert_allclose(kernel.weights, [0.125, -0.3125])
    r = 0.7
    expected = 0.125 * math.exp(-r) - 0.3125 * math.exp(-2 * r)
    assert fields.kernel_eval(kernel, [r]) == pytest.approx(expected, rel=1e-12)
    assert kernel.decay_rate == 1.0


def test_carma_from_coefficients_equals_from_zeros():
    from_coeffs = fields.CarmaKernel.from_b_coeffs((-1.0, -2.0), (-0.5, 1.0))
    np.testing.assert_allclose(from_coeffs.weights, fields.CarmaKernel((-1.0, -2.0), (0.5,)).weights)


@pytest.mark.parametrize("factory", [
    lambda: fields.ExponentialKernel(0.0, 1.0),
    lambda: fields.ExponentialKernel(1.0, -1.0),
    lambda: fields.CarmaKernel((-1.0, 1.0)),
    lambda: fields.CarmaKernel((-1.0, -1.0)),
    lambda: fields.CarmaKernel((-1.0,), (0.5,)),
    lambda: fields.CarmaKernel((-1.0, -2.0), (1.0,)),
    lambda: fields.GaussianDriver(0.0),
    lambda: fields.CompoundPoissonDriver(1.0, fields.JumpKind.TWO_POINT, 0.0),
    lambda: fields.CompoundPoissonDriver(0.0),
    lambda: fields.FieldModel(EXPONENTIAL, GAUSSIAN, truncation_radius=2.0),
])
def test_degenerate_specifications_are_rejected(factory):
    with pytest.raises(exceptions.InvalidParameters):
        factory()


def test_default_discretization():
    model = fields.FieldModel(fields.ExponentialKernel(1.0, 2.0), GAUSSIAN)
    assert model.grid_step == pytest.approx(1 / 16)
    assert model.truncation_radius == pytest.approx(math.log(1e8) / 2)
    assert model.kernel_value(model.truncation_radius * 1.01) == 0.0


def test_model_dict_round_trip():
    model = fields.FieldModel(fields.CarmaKernel((-1.0, -3.0), (0.5,)), fields.CompoundPoissonDriver(4.0, "two_point",
                                                                                                      0.5))
    assert fields.field_model_from_dict(model.to_dict()) == model


def test_covariance_closed_forms(runtime):
    model = fields.FieldModel(EXPONENTIAL, GAUSSIAN, normalize=False)
    assert fields.covariance(model, [0.0], runtime) == pytest.approx(1.0, abs=1e-7)
    assert fields.covariance(model, [0.0, 0.0], runtime) == pytest.approx(math.pi / 2, abs=1e-7)
    # int e^{-|u|} e^{-|u+s|} du = (1 + s) e^{-s}
    assert fields.covariance(model, [1.0], runtime) == pytest.approx(2 / math.e, abs=1e-7)


def test_compound_poisson_covariance_scales_with_rate(runtime):
    model = fields.FieldModel(EXPONENTIAL, fields.CompoundPoissonDriver(3.0, "normal", 2.0), normalize=False)
    assert fields.covariance(model, [0.0], runtime) == pytest.approx(6.0, abs=1e-6)


def test_normalized_covariance(runtime):
    model = fields.FieldModel(fields.CarmaKernel((-1.0, -2.0)), GAUSSIAN)
    assert fields.covariance(model, [0.0, 0.0], runtime) == 1.0
    lagged = fields.covariance(model, [0.6, 0.8], runtime)
    assert 0.0 < lagged < 1.0
    assert fields.covariance(model, [1.0, 0.0], runtime) == pytest.approx(lagged, rel=1e-8)


def test_three_dimensional_covariance_decays(runtime):
    model = fields.FieldModel(EXPONENTIAL, GAUSSIAN)
    near = fields.covariance(model, [0.5, 0.0, 0.0], runtime)
    far = fields.covariance(model, [2.0, 0.0, 0.0], runtime)
    assert 1.0 > near > far > 0.0


def test_field_is_deterministic(runtime):
    model = fields.FieldModel(EXPONENTIAL, GAUSSIAN)
    sites = _line(30.0, 40)
    first = fields.simulate_field(model, sites, 11, runtime=runtime)
    np.testing.assert_array_equal(first, fields.simulate_field(model, sites, 11, runtime=runtime))
    assert not np.array_equal(first, fields.simulate_field(model, sites, 12, runtime=runtime))


@pytest.mark.parametrize("driver", [GAUSSIAN, fields.CompoundPoissonDriver(5.0)])
def test_normalized_field_has_unit_variance(driver, runtime):
    model = fields.FieldModel(EXPONENTIAL, driver)
    values = fields.simulate_field(model, _line(10000.0, 10000), 21, runtime=runtime)
    assert np.var(values) == pytest.approx(1.0, rel=0.1)
    assert abs(values.mean()) < 0.15


def test_budget_guard(tmp_path):
    path = tmp_path / "runtimeconfig.json"
    path.write_text(json.dumps({"simulation": {"cell_budget": 100}}), encoding="utf-8")
    small = config.RuntimeConfig(path)
    with pytest.raises(exceptions.BudgetExceeded):
        fields.simulate_field(fields.FieldModel(EXPONENTIAL, GAUSSIAN), _line(30.0, 10), 1, runtime=small)


def test_trend_data_without_noise(runtime):
    sites = _line(20.0, 50)
    y = fields.simulate_trend_data(5.0, 1e-9, 1e-9, fields.FieldModel(EXPONENTIAL, GAUSSIAN), sites, 4,
                                   runtime=runtime)
    np.testing.assert_allclose(y, 5.0, atol=1e-6)


def test_trend_data_variance_identity(runtime):
    sites = _line(3000.0, 10000, seed=8)

    def m0(z):
        return np.sin(2 * np.pi * z[:, 0])

    y = fields.simulate_trend_data(m0, 0.5, 0.5, fields.FieldModel(EXPONENTIAL, GAUSSIAN), sites, 9, runtime=runtime)
    assert np.var(y - m0(sites.scaled)) == pytest.approx(0.5, rel=0.1)


def test_trend_data_rejects_non_positive_scales(runtime):
    sites = _line(20.0, 10)
    with pytest.raises(exceptions.InvalidParameters):
        fields.simulate_trend_data(0.0, 0.0, 1.0, fields.FieldModel(EXPONENTIAL, GAUSSIAN), sites, 4, runtime=runtime)


def test_covariate_data_tracks_the_covariate(runtime):
    sites = _line(50.0, 200)
    model = fields.FieldModel(EXPONENTIAL, GAUSSIAN)
    y, x = fields.simulate_covariate_data(lambda z, x: x[:, 0], 1e-9, [model, model], sites, 5, runtime=runtime)
    assert x.shape == (200, 2)
    assert not np.allclose(x[:, 0], x[:, 1])
    np.testing.assert_allclose(y, x[:, 0], atol=1e-6)


def test_covariate_noise_has_constant_scale(runtime):
    sites = _line(500.0, 4000)
    y, x = fields.simulate_covariate_data(lambda z, x: x[:, 0], 0.5, [fields.FieldModel(EXPONENTIAL, GAUSSIAN)],
                                          sites,
                                          6,
                                          runtime=runtime)
    assert np.var(y - x[:, 0]) == pytest.approx(0.25, rel=0.1)


def test_covariate_model_needs_a_field(runtime):
    with pytest.raises(exceptions.InvalidParameters):
        fields.simulate_covariate_data(0.0, 1.0, [], _line(10.0, 5), 1, runtime=runtime)


@pytest.mark.slow
def test_lagged_covariance_over_replications(runtime):
    model = fields.FieldModel(EXPONENTIAL, GAUSSIAN)
    raw = np.array([[0.0], [1.0]])
    sites = design.rescale_sites(raw, (40.0,))
    draws = np.array([fields.simulate_field(model, sites, 77, replication=k, runtime=runtime) for k in range(4000)])
    assert np.var(draws[:, 0]) == pytest.approx(1.0, rel=0.1)
    assert np.mean(draws[:, 0] * draws[:, 1]) == pytest.approx(fields.covariance(model, [1.0], runtime), rel=0.1)


@pytest.mark.slow
def test_boundary_sites_match_interior_variance(runtime):
    model = fields.FieldModel(EXPONENTIAL, GAUSSIAN)
    sites = design.rescale_sites([[-10.0], [0.0], [10.0]], (20.0,))
    draws = np.array([fields.simulate_field(model, sites, 5, replication=k, runtime=runtime) for k in range(8000)])
    variances = draws.var(axis=0)
    assert variances[0] == pytest.approx(variances[1], rel=0.1)
    assert variances[2] == pytest.approx(variances[1], rel=0.1)


@pytest.mark.slow
def test_grid_refinement_changes_variance_little(runtime):
    sites = _line(2000.0, 2000)
    coarse = fields.FieldModel(EXPONENTIAL, GAUSSIAN, grid_step=1 / 8, normalize=False)
    fine = fields.FieldModel(EXPONENTIAL, GAUSSIAN, grid_step=1 / 16, normalize=False)
    var_coarse = np.mean([np.var(fields.simulate_field(coarse, sites, 3, replication=k, runtime=runtime))
                          for k in range(50)])
    var_fine = np.mean([np.var(fields.simulate_field(fine, sites, 3, replication=k, runtime=runtime))
                        for k in range(50)])
    assert var_fine == pytest.approx(var_coarse, rel=0.05)


@pytest.mark.slow
def test_symmetric_jumps_give_unskewed_field(runtime):
    model = fields.FieldModel(EXPONENTIAL, fields.CompoundPoissonDriver(0.5, "two_point", 1.0))
    sites = _line(20000.0, 20000)
    values = fields.simulate_field(model, sites, 13, runtime=runtime)
    skew = stats.skew(values)
    # effective sample size taken as length / 10 for the dependence
    assert abs(skew) < 4 * math.sqrt(6 / 2000)


def _plane_overlap(s: float) -> float:
    """int_{R^2} e^{-|u|} e^{-|u + (s, 0)|} du by Cartesian quadrature."""
    value, _ = integrate.dblquad(lambda v, u: math.exp(-math.hypot(u, v) - math.hypot(u + s, v)),
                                 -25.0,
                                 25.0,
                                 -25.0,
                                 25.0,
                                 epsabs=1e-8,
                                 epsrel=1e-8)
    return value


@pytest.mark.parametrize("lag", [0.0, 0.5, 1.0, 2.0])
def test_line_covariance_matches_closed_form(lag, runtime):
    model = fields.FieldModel(EXPONENTIAL, GAUSSIAN, normalize=False)
    assert fields.covariance(model, [lag], runtime) == pytest.approx((1 + lag) * math.exp(-lag), abs=1e-7)


@pytest.mark.parametrize("lag", [0.0, 0.5, 1.0, 2.0])
def test_plane_covariance_matches_cartesian_quadrature(lag, runtime):
    model = fields.FieldModel(EXPONENTIAL, GAUSSIAN, normalize=False)
    assert fields.covariance(model, [lag, 0.0], runtime) == pytest.approx(_plane_overlap(lag), rel=1e-4)


def _cube_sites(d: int, side: float, n: int, seed: int) -> design.SiteSet:
    return design.draw_sites(design.SamplingDesign((side,) * d), n, seed=seed)


def test_plane_field_is_deterministic(runtime):
    model = fields.FieldModel(EXPONENTIAL, GAUSSIAN, grid_step=0.25, truncation_radius=6.0)
    sites = _cube_sites(2, 10.0, 50, 4)
    first = fields.simulate_field(model, sites, 3, runtime=runtime)
    assert first.shape == (50,)
    assert np.all(np.isfinite(first))
    np.testing.assert_array_equal(first, fields.simulate_field(model, sites, 3, runtime=runtime))


def test_rectangular_grid_cells_are_not_shared(runtime):
    # A non-square box exercises the row-major cell index
    model = fields.FieldModel(EXPONENTIAL, GAUSSIAN, grid_step=0.5, truncation_radius=5.0, normalize=False)
    sites = design.rescale_sites([[0.0, 0.0], [0.0, 3.0]], (4.0, 10.0))
    draws = np.array([fields.simulate_field(model, sites, 8, replication=k, runtime=runtime) for k in range(300)])
    assert np.all(np.isfinite(draws))
    assert np.corrcoef(draws.T)[0, 1] < 0.9


@pytest.mark.parametrize(("d", "side", "n"), [(2, 40.0, 400), (3, 16.0, 200)])
def test_field_variance_in_higher_dimensions(d, side, n, runtime):
    model = fields.FieldModel(EXPONENTIAL, GAUSSIAN, grid_step=0.25, truncation_radius=5.0)
    sites = _cube_sites(d, side, n, 6)
    values = np.concatenate([fields.simulate_field(model, sites, 17, replication=k, runtime=runtime) for k in range(8)])
    assert np.var(values) == pytest.approx(1.0, rel=0.15)


@pytest.mark.slow
@pytest.mark.parametrize(("d", "replications"), [(1, 8000), (2, 8000), (3, 3000)])
def test_replicated_covariance_matches_quadrature(d, replications, runtime):
    model = fields.FieldModel(EXPONENTIAL, GAUSSIAN, grid_step=0.25, truncation_radius=5.0)
    lags = [0.0, 0.5, 1.0, 2.0]
    raw = np.zeros((len(lags), d))
    raw[:, 0] = lags
    sites = design.rescale_sites(raw, (6.0,) * d)
    draws = np.array(
        [fields.simulate_field(model, sites, 41, replication=k, runtime=runtime) for k in range(replications)])
    for k in range(len(lags)):
        products = draws[:, 0] * draws[:, k]
        expected = fields.covariance(model, raw[k], runtime)
        slack = max(0.1 * expected, 4 * products.std() / math.sqrt(replications))
        assert abs(products.mean() - expected) <= slack
