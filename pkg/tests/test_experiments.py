"""Tests for spatial_sieve.stats.experiments."""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import logging

import numpy as np
import pandas as pd
import pytest

from spatial_sieve.ext import exceptions
from spatial_sieve.stats import experiments

RUNG_COLUMNS = ["rung", "area", "n", "j", "mean_sup_error", "se_sup_error", "mean_l2_error", "se_l2_error"]


def _quick(**overrides):
    spec = {"seed": 7, "d": 1, "areas": [40, 80, 160], "replications": 3, "grid_resolution": 25}
    spec.update(overrides)
    return spec


def test_select_j_from_the_l2_rule():
    # 1024 ** (1 / 5) = 4, exactly the cubic minimum in one dimension
    assert experiments.select_J(1024, 1024, 2.0, 1, j_scale=1.0) == 4
    assert experiments.select_J(1e10, 1e10, 2.0, 1, j_scale=1.0) == 100
    assert experiments.select_J(1024, 1024, 2.0, 1) == 16


def test_select_j_clamps_to_the_spline_minimum(caplog):
    with caplog.at_level(logging.WARNING):
        assert experiments.select_J(1000, 1000, 2.5, 2, j_scale=1.0) == 16
    assert "clamping" in caplog.text


def test_select_j_sup_rule_is_log_corrected():
    sup = experiments.select_J(1e6, 10**6, 2.0, 1, mode="sup")
    l2 = experiments.select_J(1e6, 10**6, 2.0, 1, mode="l2")
    assert sup < l2


def test_select_j_grows_with_the_area():
    sizes = [experiments.select_J(a, a, 2.5, 2) for a in np.geomspace(1e3, 1e9, 12)]
    assert sizes == sorted(sizes)
    assert sizes[-1] > 16


def test_select_j_rejects_small_regions():
    with pytest.raises(exceptions.InvalidParameters):
        experiments.select_J(1.0, 10, 2.0, 1)
    with pytest.raises(exceptions.InvalidParameters):
        experiments.select_J(10.0, 1, 2.0, 1, mode="sup")


@pytest.mark.parametrize(("d", "mode"), [(1, "l2"), (1, "sup"), (2, "l2")])
def test_default_ladder_grows_the_sieve(d, mode):
    ladder = experiments.build_ladder([200, 400, 800, 1600, 3200], d, 2.0 if d == 1 else 2.5, mode)
    sizes = [rung.j for rung in ladder]
    assert all(b > a for a, b in zip(sizes, sizes[1:]))


def test_default_study_ladder_grows_the_sieve():
    config = experiments.rate_config_from_dict({"seed": 1, "d": 1})
    assert [rung.j for rung in config.ladder] == [12, 13, 15, 17, 20]


def test_square_ladder():
    ladder = experiments.build_ladder([100, 400], 2, 2.5, kappa=0.5)
    assert [r.scales for r in ladder] == [(10.0, 10.0), (20.0, 20.0)]
    assert [r.n for r in ladder] == [50, 200]
    assert ladder[1].area == pytest.approx(400.0)


def test_config_validation():
    with pytest.raises(exceptions.InvalidParameters):
        experiments.rate_config_from_dict({"d": 1})
    with pytest.raises(exceptions.InvalidParameters):
        experiments.rate_config_from_dict(_quick(areas=[80, 40]))
    with pytest.raises(exceptions.InvalidParameters):
        experiments.coverage_config_from_dict(_quick(targets=[[0.0, 0.0]]))
    with pytest.raises(exceptions.InvalidParameters):
        experiments.coverage_config_from_dict(_quick(level=1.5))


def test_config_round_trip_through_the_explicit_ladder():
    config = experiments.rate_config_from_dict(_quick())
    again = experiments.rate_config_from_dict(config.to_dict())
    assert again.ladder == config.ladder
    assert again.field == config.field


def test_rate_study_report_schema(runtime):
    result = experiments.run_rate_study(experiments.rate_config_from_dict(_quick()), runtime)
    assert result.kind == "rate"
    assert list(result.rungs.columns) == RUNG_COLUMNS
    assert result.rungs.shape[0] == 3
    assert result.replications.shape[0] == 9
    assert {"rung", "replication", "area", "n", "j", "sup_error", "l2_error"} <= set(result.replications.columns)
    assert (result.replications[["sup_error", "l2_error"]] >= 0).all().all()
    assert (result.replications["sup_error"] >= result.replications["l2_error"] - 1e-12).all()
    assert set(result.slopes) == {"sup", "l2"}
    assert set(result.slopes["l2"]) == {"slope", "stderr", "intercept"}
    report = result.to_report()
    assert report["seed"] == 7
    assert report["rng"]
    assert len(report["rungs"]) == 3
    assert any("below 50" in note for note in report["warnings"])


def test_studies_are_reproducible(runtime):
    config = experiments.rate_config_from_dict(_quick(replications=2))
    first = experiments.run_rate_study(config, runtime)
    second = experiments.run_rate_study(config, runtime)
    pd.testing.assert_frame_equal(first.replications, second.replications)


def test_worker_count_does_not_change_results(runtime):
    config = experiments.rate_config_from_dict(_quick(replications=2))
    serial = experiments.run_rate_study(config, runtime, workers=1)
    parallel = experiments.run_rate_study(config, runtime, workers=2)
    pd.testing.assert_frame_equal(serial.replications, parallel.replications)


def test_noiseless_data_in_the_span(runtime):
    spec = _quick(truth="constant", truth_params={"value": 2.0}, eta=1e-12, sigma_eps=1e-12, ridge_coefficient=0.0)
    result = experiments.run_rate_study(experiments.rate_config_from_dict(spec), runtime)
    assert result.replications["sup_error"].max() < 1e-8


def test_zero_noise_coverage_is_exact(runtime):
    spec = _quick(truth="constant",
                  eta=1e-12,
                  sigma_eps=1e-12,
                  ridge_coefficient=0.0,
                  targets=[[0.0], [0.5]],
                  replications=2)
    result = experiments.run_coverage_study(experiments.coverage_config_from_dict(spec), runtime)
    assert (result.coverage["coverage"] == 1.0).all()
    assert result.coverage["mean_width"].max() < 1e-6


def test_coverage_study_tables(runtime):
    spec = _quick(targets=[[-0.25], [0.0], [0.5]], replications=10, areas=[60, 120])
    result = experiments.run_coverage_study(experiments.coverage_config_from_dict(spec), runtime)
    assert list(result.coverage.columns) == ["rung", "target", "point", "coverage", "mc_se", "mean_width"]
    assert result.coverage.shape[0] == 6
    assert result.coverage["coverage"].between(0.0, 1.0).all()
    assert (result.coverage["mean_width"] > 0).all()
    assert result.replications["covered"].map(len).eq(3).all()
    assert any("10 replications" in note for note in result.warnings)
    assert "coverage" in result.to_report()


def test_coverage_needs_a_coverage_config(runtime):
    with pytest.raises(exceptions.InvalidParameters):
        experiments.run_coverage_study(experiments.rate_config_from_dict(_quick()), runtime)


def test_covariate_study_runs(runtime):
    spec = _quick(areas=[100, 200], replications=2, covariates={"fields": [{}], "h": 0.5})
    config = experiments.rate_config_from_dict(spec)
    assert config.dims == 2
    result = experiments.run_rate_study(config, runtime)
    assert np.isfinite(result.rungs["mean_l2_error"]).all()


def test_failed_replication_names_its_place(runtime):
    spec = {
        "seed": 3,
        "d": 1,
        "ladder": [{
            "scales": [20.0],
            "n": 5,
            "j": 16
        }],
        "replications": 2,
        "ridge_coefficient": 0.0,
        "grid_resolution": 10,
    }
    with pytest.raises(exceptions.StudyError) as info:
        experiments.run_rate_study(experiments.rate_config_from_dict(spec), runtime)
    assert (info.value.rung, info.value.replication) == (0, 0)
    assert "SingularGramError" in str(info.value)


@pytest.mark.slow
def test_l2_rate_matches_the_optimal_exponent(runtime):
    spec = {"seed": 2024, "d": 1, "smoothness": 2.0, "areas": [200, 400, 800, 1600, 3200], "replications": 200}
    result = experiments.run_rate_study(experiments.rate_config_from_dict(spec), runtime, workers=4)
    assert result.slopes["l2"]["slope"] == pytest.approx(-0.4, abs=0.15)


@pytest.mark.slow
def test_sup_rate_matches_the_optimal_exponent(runtime):
    spec = {
        "seed": 2025,
        "d": 1,
        "smoothness": 2.0,
        "mode": "sup",
        "areas": [200, 400, 800, 1600, 3200],
        "replications": 200
    }
    result = experiments.run_rate_study(experiments.rate_config_from_dict(spec), runtime, workers=4)
    assert result.slopes["sup"]["slope"] == pytest.approx(-0.4, abs=0.2)


@pytest.mark.slow
def test_pointwise_coverage_near_nominal(runtime):
    spec = {
        "seed": 11,
        "d": 1,
        "areas": [2000],
        "replications": 500,
        "eta": 1e-6,
        "targets": [[-0.25], [0.0], [0.25], [0.5]],
    }
    result = experiments.run_coverage_study(experiments.coverage_config_from_dict(spec), runtime, workers=4)
    assert result.coverage["coverage"].between(0.90, 0.985).all()


@pytest.mark.slow
def test_covariate_error_falls_with_n(runtime):
    spec = {"seed": 5, "d": 1, "areas": [500, 2000, 8000], "replications": 50, "covariates": {"fields": [{}]}}
    result = experiments.run_rate_study(experiments.rate_config_from_dict(spec), runtime, workers=4)
    errors = result.rungs["mean_l2_error"].to_numpy()
    assert np.all(np.diff(errors) < 0)


@pytest.mark.slow
def test_covariate_coverage_near_nominal(runtime):
    spec = {
        "seed": 17,
        "d": 1,
        "areas": [2000],
        "replications": 500,
        "j_scale": 6.0,
        "covariates": {
            "fields": [{}],
            "h": 1.0
        },
        "targets": [[0.0, 0.0], [0.25, 0.5], [-0.25, -0.5]],
    }
    result = experiments.run_coverage_study(experiments.coverage_config_from_dict(spec), runtime, workers=4)
    assert result.coverage.shape[0] == 3
    assert result.coverage["coverage"].between(0.90, 0.985).all()
