"""Tests for spatial_sieve.stats.inference."""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import numpy as np
import pytest

from spatial_sieve.ext import exceptions
from spatial_sieve.stats import basis, design, estimator, inference


@pytest.fixture
def small_trend_fit(rng, runtime):
    sites = design.draw_sites(design.SamplingDesign((6.0, 4.0)), 12, seed=17)
    y = rng.normal(size=sites.n)
    fit = estimator.fit_trend(sites, y, basis.tensor_basis([1, 2], [1, 1]), 0.05, runtime)
    return fit, y


@pytest.fixture
def covariate_fit(line_sites, rng, runtime):
    x = rng.uniform(-1.0, 1.0, size=line_sites.n)
    y = np.sin(x) + rng.normal(scale=0.3, size=line_sites.n) * (1 + x**2)
    fit = estimator.fit_covariate(line_sites, x, y, basis.tensor_basis([2, 2], [2, 2]), penalty=0.01, runtime=runtime)
    return fit, y


def _inverse(fit):
    return np.linalg.inv(fit.gram + fit.penalty * np.eye(fit.basis.total_dimension))


def test_bartlett_values():
    assert inference.bartlett_kernel([0.0, 0.0], [1.0, 1.0]) == 1.0
    assert inference.bartlett_kernel([0.5, 0.0], [1.0, 1.0]) == pytest.approx(0.5)
    assert inference.bartlett_kernel([3.0, 4.0], [5.0, 5.0]) == 0.0
    np.testing.assert_allclose(inference.bartlett_kernel([[1.0], [2.0], [9.0]], [4.0]), [0.75, 0.5, 0.0])


def test_bandwidths_from_fraction():
    hac = inference.HacConfig.from_fraction((100.0, 40.0), 0.1)
    assert hac.bandwidths == pytest.approx((10.0, 4.0))
    assert hac.kernel is inference.HacKernel.BARTLETT
    with pytest.raises(exceptions.InvalidParameters):
        inference.HacConfig((1.0, 0.0))


def test_single_site_closed_form(runtime):
    sites = design.rescale_sites([[0.5, -0.25]], (4.0, 4.0))
    fit = estimator.fit_trend(sites, [2.0], basis.tensor_basis([1, 1], [0, 0]), 0.5, runtime)
    var = inference.hac_long_run_matrix(fit, [2.0], inference.HacConfig((1.0, 1.0)), runtime)
    psi = fit.basis.evaluate(sites.scaled)[0]
    r = 2.0 - psi @ fit.beta
    m_psi = _inverse(fit) @ psi
    np.testing.assert_allclose(var.g_hat, 16.0 * r**2 * np.outer(m_psi, m_psi), rtol=1e-10)
    assert var.pair_count == 0


def test_hac_matches_the_double_sum(small_trend_fit, runtime):
    fit, y = small_trend_fit
    hac = inference.HacConfig((3.0, 2.5))
    var = inference.hac_long_run_matrix(fit, y, hac, runtime)
    psi = fit.basis.evaluate(fit.sites.scaled)
    r = y - psi @ fit.beta
    core = np.zeros((fit.basis.total_dimension,) * 2)
    for i in range(fit.n):
        for j in range(fit.n):
            weight = inference.bartlett_kernel(fit.sites.raw[i] - fit.sites.raw[j], hac.bandwidths)
            core += np.outer(psi[i], psi[j]) * r[i] * r[j] * weight
    inverse = _inverse(fit)
    expected = fit.sites.area / fit.n**2 * inverse @ core @ inverse
    np.testing.assert_allclose(var.g_hat, expected, rtol=1e-10, atol=1e-12 * np.abs(expected).max())
    np.testing.assert_allclose(var.g_hat, var.g_hat.T)


def test_omega_is_the_bilinear_form(small_trend_fit, runtime):
    fit, y = small_trend_fit
    var = inference.hac_long_run_matrix(fit, y, inference.HacConfig((2.0, 2.0)), runtime)
    z1, z2 = [0.1, -0.2], [-0.3, 0.4]
    a = fit.basis.evaluate([z1])[0]
    b = fit.basis.evaluate([z2])[0]
    assert inference.omega_hat(fit, var, z1, z2) == pytest.approx(a @ var.g_hat @ b, rel=1e-12)
    assert inference.omega_hat(fit, var, z1, z2) == pytest.approx(inference.omega_hat(fit, var, z2, z1), rel=1e-10)
    grid = basis.cube_grid(3, d=2)
    expected = [inference.omega_hat(fit, var, z, z) for z in grid]
    np.testing.assert_allclose(inference.pointwise_variance(fit, var, grid), expected, rtol=1e-10)


def test_normal_quantiles():
    assert inference.normal_quantile(0.975) == pytest.approx(1.959963985, abs=1e-9)
    assert inference.normal_quantile(0.75) == pytest.approx(0.6744897502, abs=1e-9)
    with pytest.raises(exceptions.InvalidParameters):
        inference.normal_quantile(1.0)


def test_zero_residuals_collapse_the_band(uniform_sites, runtime):
    y = np.full(uniform_sites.n, -1.5)
    fit = estimator.fit_trend(uniform_sites, y, basis.tensor_basis([3, 3], [2, 2]), 0.0, runtime)
    var = inference.hac_long_run_matrix(fit, y, inference.HacConfig.from_fraction(uniform_sites.scales), runtime)
    band = inference.confidence_band(fit, var, basis.cube_grid(5, d=2), 0.95, runtime)
    np.testing.assert_allclose(band.upper - band.lower, 0.0, atol=1e-6)
    np.testing.assert_allclose(band.estimate, -1.5, atol=1e-10)


def test_trend_band_scales_with_area(small_trend_fit, runtime):
    fit, y = small_trend_fit
    var = inference.hac_long_run_matrix(fit, y, inference.HacConfig((1.0, 1.0)), runtime)
    grid = basis.cube_grid(4, d=2)
    band = inference.confidence_band(fit, var, grid, 0.9, runtime)
    variance = np.clip(inference.pointwise_variance(fit, var, grid), 0.0, None)
    np.testing.assert_allclose(band.se, np.sqrt(variance / fit.sites.area))
    np.testing.assert_allclose(band.upper - band.estimate, inference.normal_quantile(0.95) * band.se)
    np.testing.assert_allclose(band.estimate - band.lower, band.upper - band.estimate)
    assert band.level == 0.9


def test_small_negative_variances_are_clamped(small_trend_fit, runtime):
    fit, _ = small_trend_fit
    size = fit.basis.total_dimension
    var = inference.VarianceEstimate(g_hat=-1e-12 * np.eye(size), model_kind=estimator.ModelKind.TREND)
    band = inference.confidence_band(fit, var, basis.cube_grid(3, d=2), 0.95, runtime)
    assert band.clamped == 9
    np.testing.assert_array_equal(band.se, 0.0)


def test_large_negative_variances_are_fatal(small_trend_fit, runtime):
    fit, _ = small_trend_fit
    var = inference.VarianceEstimate(g_hat=-np.eye(fit.basis.total_dimension), model_kind=estimator.ModelKind.TREND)
    with pytest.raises(exceptions.NegativeVarianceError):
        inference.confidence_band(fit, var, basis.cube_grid(3, d=2), 0.95, runtime)


def test_clamp_tolerance_is_absolute(small_trend_fit, runtime, monkeypatch):
    fit, _ = small_trend_fit
    var = inference.VarianceEstimate(g_hat=np.eye(fit.basis.total_dimension), model_kind=estimator.ModelKind.TREND)
    # tiny next to the largest variance, yet below -1e-8
    monkeypatch.setattr(inference, "pointwise_variance", lambda *_: np.array([1e4, -1e-6]))
    with pytest.raises(exceptions.NegativeVarianceError):
        inference.confidence_band(fit, var, [[0.0, 0.0], [0.25, 0.25]], 0.95, runtime)


def test_covariate_sandwich(covariate_fit):
    fit, y = covariate_fit
    var = inference.covariate_variance(fit, y)
    rows = fit.design.toarray()
    r = y - rows @ fit.beta
    inverse = _inverse(fit)
    expected = inverse @ (rows.T * r**2) @ rows @ inverse / fit.n
    np.testing.assert_allclose(var.g_hat, expected, rtol=1e-9, atol=1e-12 * np.abs(expected).max())
    eigs = np.linalg.eigvalsh(var.g_hat)
    assert eigs.min() >= -1e-10 * eigs.max()


def test_homoscedastic_residuals_give_a_scaled_inverse(runtime):
    # with every residual equal to c the core is c^2 M G M
    sites = design.rescale_sites([[-2.0], [2.0]], (10.0,))
    fit = estimator.fit_covariate(sites, [0.0, 1.0], [1.0, -1.0], basis.tensor_basis([1, 1], [0, 0]), penalty=0.5,
                                  runtime=runtime)
    r = estimator.residuals(fit, [1.0, -1.0])
    assert r[0] == pytest.approx(-r[1])
    var = inference.covariate_variance(fit, [1.0, -1.0])
    inverse = _inverse(fit)
    np.testing.assert_allclose(var.g_hat, r[0]**2 * inverse @ fit.gram @ inverse, rtol=1e-10, atol=1e-14)


def test_covariate_band_uses_sample_size(covariate_fit, runtime):
    fit, y = covariate_fit
    var = inference.covariate_variance(fit, y)
    points = [[0.0, 0.0], [0.2, -0.3]]
    band = inference.confidence_band(fit, var, points, 0.95, runtime)
    expected = [np.sqrt(inference.v_hat(fit, var, p, p) / fit.n) for p in points]
    np.testing.assert_allclose(band.se, expected, rtol=1e-10)


def test_model_kind_mismatch(small_trend_fit, covariate_fit, runtime):
    trend, y_trend = small_trend_fit
    covariate, y_cov = covariate_fit
    with pytest.raises(exceptions.ModelKindMismatch):
        inference.hac_long_run_matrix(covariate, y_cov, inference.HacConfig((1.0,)), runtime)
    with pytest.raises(exceptions.ModelKindMismatch):
        inference.covariate_variance(trend, y_trend)
    var = inference.covariate_variance(covariate, y_cov)
    with pytest.raises(exceptions.ModelKindMismatch):
        inference.omega_hat(trend, var, [0.0, 0.0], [0.0, 0.0])
    with pytest.raises(exceptions.ModelKindMismatch):
        inference.v_hat(trend, var, [0.0, 0.0], [0.0, 0.0])


def test_inference_needs_the_data(small_trend_fit, runtime):
    fit, y = small_trend_fit
    bare = estimator.restore_fit(estimator.fit_to_dict(fit))
    with pytest.raises(exceptions.ArtifactError):
        inference.hac_long_run_matrix(bare, y, inference.HacConfig((1.0, 1.0)), runtime)
