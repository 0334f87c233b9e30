"""Validation checks shared by the numerical modules.

A set of small checks that raise the spatial_sieve exceptions.
They return the validated value as a float64 numpy array (or float),
so they can be used inline when unpacking arguments.

Typical usage example:
    ```py
    from spatial_sieve.ext import checks

    def fit(y):
        y = checks.finite_vector(y, "y")
        ...
    ```
"""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import numpy as np
from numpy import typing as npt

from spatial_sieve.ext import exceptions

CUBE_SLACK = 1e-12
"""Tolerance for points that leave the unit cube by rounding only."""


def positive(value: float, name: str) -> float:
    """Checks that a scalar is finite and strictly positive.

    Args:
        value: The value to check.
        name: The parameter name used in the error message.

    Returns:
        `float`: The value.

    Raises:
        `spatial_sieve.ext.exceptions.InvalidParameters`: If the check fails.
    """
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise exceptions.InvalidParameters(f"{name} must be positive, got {value!r}")
    return value


def non_negative(value: float, name: str) -> float:
    """Checks that a scalar is finite and not negative."""
    value = float(value)
    if not np.isfinite(value) or value < 0:
        raise exceptions.InvalidParameters(f"{name} must be non-negative, got {value!r}")
    return value


def finite_vector(values: npt.ArrayLike, name: str, length: int | None = None) -> np.ndarray:
    """Checks that the input is a finite one-dimensional array.

    Args:
        values: The values to check.
        name: The name used in error messages.
        length: The required length, if any.

    Returns:
        `numpy.ndarray`: A float64 copy of the input.

    Raises:
        `spatial_sieve.ext.exceptions.InputError`: On NaN, infinities,
            wrong shape or wrong length.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise exceptions.InputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise exceptions.InputError(f"{name} has length {arr.shape[0]}, expected {length}")
    bad = np.flatnonzero(~np.isfinite(arr))
    if bad.size:
        raise exceptions.InputError(f"{name} holds non-finite values at indices {bad[:10].tolist()}")
    return arr


def finite_matrix(values: npt.ArrayLike, name: str, columns: int | None = None) -> np.ndarray:
    """Checks that the input is a finite two-dimensional array.

    One-dimensional input is read as a single column.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise exceptions.InputError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if columns is not None and arr.shape[1] != columns:
        raise exceptions.InputError(f"{name} has {arr.shape[1]} columns, expected {columns}")
    if not np.all(np.isfinite(arr)):
        raise exceptions.InputError(f"{name} holds non-finite values")
    return arr


def points_in_box(points: npt.ArrayLike, lower: npt.ArrayLike, upper: npt.ArrayLike, name: str) -> np.ndarray:
    """Checks that every row of `points` lies in the closed box.

    Rows that leave the box by at most `CUBE_SLACK` are clipped back.

    Returns:
        `numpy.ndarray`: The (possibly clipped) points as an (m, d) array.

    Raises:
        `spatial_sieve.ext.exceptions.DomainError`: If a point is outside.
    """
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    arr = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if arr.shape[1] != lower.shape[0]:
        raise exceptions.DomainError(f"{name} must have {lower.shape[0]} coordinates, got {arr.shape[1]}")
    outside = np.any((arr < lower - CUBE_SLACK) | (arr > upper + CUBE_SLACK) | ~np.isfinite(arr), axis=1)
    if np.any(outside):
        rows = np.flatnonzero(outside)
        raise exceptions.DomainError(f"{name} has {rows.size} point(s) outside the domain, first at row {rows[0]}")
    return np.clip(arr, lower, upper)


def probability(level: float, name: str) -> float:
    """Checks that a level lies in the open unit interval."""
    level = float(level)
    if not 0.0 < level < 1.0:
        raise exceptions.InvalidParameters(f"{name} must lie in (0, 1), got {level!r}")
    return level
