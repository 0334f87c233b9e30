"""Support extensions used throughout spatial_sieve.

Those are various non-numerical helpers used by every other package.
Currently, this package contains the following modules:
    - spatial_sieve.ext.checks
    - spatial_sieve.ext.exceptions
    - spatial_sieve.ext.parsing
    - spatial_sieve.ext.streams

Typical usage example:
    ```py
    from spatial_sieve.ext import checks
    from spatial_sieve.ext import exceptions
    from spatial_sieve.ext import streams
    ...
    ```
"""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors
