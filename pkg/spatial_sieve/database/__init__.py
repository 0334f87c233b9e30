"""Persistence and configuration package for spatial_sieve.

This package contains the constants, the configuration files, the
on-disk artifacts (datasets, fits, surfaces, metadata sidecars) and the
optional SQLAlchemy result ledger for Monte Carlo studies.
Get configuration values from the config module.
And get constants from the const module.

Typical usage example:
    ```py
    from spatial_sieve.database import artifacts
    from spatial_sieve.database import config
    from spatial_sieve.database import const
    from spatial_sieve.database import layer
    from spatial_sieve.database import models
    ...
    ```
"""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors
