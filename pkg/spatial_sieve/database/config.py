"""Module for .json file management.

This module is used to manage the .json files used by spatial_sieve.
Those are: config.json, runtimeconfig.json and study configuration files.
The config.json file stores the user-facing defaults of the command line.
The runtimeconfig.json file stores advanced numerical parameters, it is
not meant to be edited by less experienced users. Wrong values in this file
may make simulations run out of memory or quadrature report failures.

Typical usage example:
    ```py
    from spatial_sieve.database import config
    defaults = config.MiniConfig()
    print(defaults.getitem("degree"))
    ```
"""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import json
import logging
import pathlib
from typing import Any

from spatial_sieve.database import const
from spatial_sieve.ext import exceptions

_RUNTIME_DEFAULTS: dict[str, Any] = {
    "simulation": {
        "cell_budget": 50_000_000,
        "site_chunk": 256
    },
    "quadrature": {
        "epsabs": 1e-8,
        "error_ceiling": 1e-6
    },
    "linalg": {
        "gram_chunk": 4096,
        "pivot_threshold": 1e-12
    },
    "inference": {
        "clamp_tolerance": 1e-8,
        "pair_chunk": 2_000_000
    },
    "studies": {
        "coverage_floor": 1e-9,
        "workers": 1
    },
}


class MiniConfig:
    """Class for config.json management

    This class is used to manage the config.json file.
    It stores the defaults that command line flags fall back to.
    It does not allow for modification of the config.json file.
    If the file is missing we use the shipped example_config.json.
    """

    def __init__(self, path: pathlib.Path | None = None) -> None:
        self._file = path or pathlib.Path(const.PROG_DIR, "config.json")
        try:
            with open(self._file, encoding="utf-8") as config_f:
                self._config: dict = json.load(config_f)
        except FileNotFoundError:
            logging.info("No config.json found, using example defaults.")
            self._file = pathlib.Path(const.PROG_DIR, "example_config.json")
            try:
                with open(self._file, encoding="utf-8") as config_f:
                    self._config = json.load(config_f)
            except FileNotFoundError:
                logging.warning("No example_config.json found either, using built-in defaults.")
                self._config = {}

    def __dict__(self) -> dict:
        return self._config

    def getitem(self, key: str, opt: Any = None) -> Any:
        """Returns the value of a key in the config.json file

        Args:
          key: The key to get the value of
          opt: The default value to return if the key is not found

        Returns:
          Any: The value of the key in the config.json file
            or the default value if the key is not found.
        """
        return self._config.get(key, opt)


class RuntimeConfig:
    """Advanced low-level numerical parameters

    This class is used to manage the runtimeconfig.json file.
    Values missing from the file fall back to built-in defaults.

    Parameters:
        cell_budget: Maximum number of driver cells a simulation may allocate
        site_chunk: Sites evaluated per block during field simulation
        quad_epsabs: Absolute tolerance requested from adaptive quadrature
        quad_error_ceiling: Largest quadrature error estimate we accept
        gram_chunk: Rows per partial Gram matrix
        pivot_threshold: Relative Cholesky pivot floor for unpenalized fits
        clamp_tolerance: Negative variances above minus this are clamped
        pair_chunk: Candidate site pairs handled per HAC block
        coverage_floor: Absolute slack when checking interval coverage
        workers: Processes used for Monte Carlo replications
    """

    def __init__(self, path: pathlib.Path | None = None) -> None:
        self._file = path or pathlib.Path(const.PROG_DIR, "runtimeconfig.json")
        try:
            with open(self._file, encoding="utf-8") as config_f:
                self._config: dict = json.load(config_f)
        except FileNotFoundError:
            logging.warning("runtimeconfig.json not found, using built-in defaults.")
            self._config = {}

    def __dict__(self) -> dict:
        return self._config

    def _get(self, section: str, key: str) -> Any:
        return self._config.get(section, {}).get(key, _RUNTIME_DEFAULTS[section][key])

    @property
    def cell_budget(self) -> int:
        """Returns the maximum number of simulation cells

        Returns:
            int: The cell budget
        """
        return int(self._get("simulation", "cell_budget"))

    @property
    def site_chunk(self) -> int:
        """Returns the number of sites evaluated per simulation block"""
        return int(self._get("simulation", "site_chunk"))

    @property
    def quad_epsabs(self) -> float:
        """Returns the absolute quadrature tolerance"""
        return float(self._get("quadrature", "epsabs"))

    @property
    def quad_error_ceiling(self) -> float:
        """Returns the largest acceptable quadrature error estimate"""
        return float(self._get("quadrature", "error_ceiling"))

    @property
    def gram_chunk(self) -> int:
        """Returns the number of rows per partial Gram matrix"""
        return int(self._get("linalg", "gram_chunk"))

    @property
    def pivot_threshold(self) -> float:
        """Returns the relative pivot floor for unpenalized fits"""
        return float(self._get("linalg", "pivot_threshold"))

    @property
    def clamp_tolerance(self) -> float:
        """Returns the negative variance clamp tolerance"""
        return float(self._get("inference", "clamp_tolerance"))

    @property
    def pair_chunk(self) -> int:
        """Returns the number of candidate pairs per HAC block"""
        return int(self._get("inference", "pair_chunk"))

    @property
    def coverage_floor(self) -> float:
        """Returns the absolute slack of the coverage check"""
        return float(self._get("studies", "coverage_floor"))

    @property
    def workers(self) -> int:
        """Returns the number of replication worker processes"""
        return max(1, int(self._get("studies", "workers")))


def load_study_config(path: pathlib.Path | str | None, overrides: dict[str, Any] | None = None) -> dict[str, Any]:
    """Loads a study configuration file and applies flag overrides.

    The file is optional. Overrides whose value is None are ignored,
    every other override replaces the file value.

    Args:
        path: The JSON file to read, or None.
        overrides: Values from the command line.

    Returns:
        dict: The merged configuration.

    Raises:
        `spatial_sieve.ext.exceptions.InvalidParameters`: If the file
            cannot be parsed or is not a JSON object.
    """
    merged: dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as config_f:
                merged = json.load(config_f)
        except (OSError, json.JSONDecodeError) as exc:
            raise exceptions.InvalidParameters(f"Cannot read study config {path}: {exc}") from exc
        if not isinstance(merged, dict):
            raise exceptions.InvalidParameters(f"Study config {path} must hold a JSON object")
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value
    return merged
