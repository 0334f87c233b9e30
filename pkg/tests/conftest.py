"""Shared fixtures for the spatial_sieve test suite."""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import json
import pathlib

import numpy as np
import pytest

from spatial_sieve.database import config
from spatial_sieve.stats import design


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run long Monte Carlo checks")


def pytest_collection_modifyitems(config, items):  # pylint: disable=redefined-outer-name
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def runtime(tmp_path: pathlib.Path) -> config.RuntimeConfig:
    """Built-in numerics, independent of any runtimeconfig.json on disk."""
    path = tmp_path / "runtimeconfig.json"
    path.write_text(json.dumps({}), encoding="utf-8")
    return config.RuntimeConfig(path)


@pytest.fixture
def defaults(tmp_path: pathlib.Path) -> config.MiniConfig:
    """The shipped command line defaults."""
    path = tmp_path / "config.json"
    path.write_text(json.dumps({
        "degree": 3,
        "J": 900,
        "ridge_coefficient": 0.5,
        "bandwidth_frac": 0.1,
        "level": 0.95,
        "grid": 100,
        "margin": 0.05,
        "out_format": "csv",
    }),
                    encoding="utf-8")
    return config.MiniConfig(path)


@pytest.fixture
def uniform_sites() -> design.SiteSet:
    """400 uniform sites over a 20 x 20 region."""
    return design.draw_sites(design.SamplingDesign((20.0, 20.0)), 400, seed=1234)


@pytest.fixture
def line_sites() -> design.SiteSet:
    """300 uniform sites on a segment of length 60."""
    return design.draw_sites(design.SamplingDesign((60.0,)), 300, seed=99)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)
