"""Catalogue of regression functions used by simulations and studies.

Everything here is a module-level function or a `functools.partial` of
one, so the callables pickle cleanly into worker processes.
"""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import functools
from typing import Any, Callable

import numpy as np

from spatial_sieve.ext import exceptions


def sine_trend(z: np.ndarray) -> np.ndarray:
    """m0(z) = sin(2 pi z_1) (1 + 0.5 z_d)."""
    z = np.atleast_2d(z)
    return np.sin(2 * np.pi * z[:, 0]) * (1.0 + 0.5 * z[:, -1])


def constant(z: np.ndarray, value: float = 1.0) -> np.ndarray:
    """A constant surface."""
    return np.full(np.atleast_2d(z).shape[0], float(value))


def polynomial(z: np.ndarray, coefficients: tuple[tuple[float, ...], ...] = ((0.0, 1.0),)) -> np.ndarray:
    """Product of per-dimension polynomials, ascending coefficients.

    A single coefficient tuple is reused for every dimension.
    """
    z = np.atleast_2d(z)
    out = np.ones(z.shape[0])
    for k in range(z.shape[1]):
        out *= np.polynomial.polynomial.polyval(z[:, k], coefficients[k if len(coefficients) > 1 else 0])
    return out


def sine_plus_square(z: np.ndarray, x: np.ndarray) -> np.ndarray:
    """m0(z, x) = sin(2 pi z_1) + x_1^2."""
    return np.sin(2 * np.pi * np.atleast_2d(z)[:, 0]) + np.atleast_2d(x)[:, 0]**2


def joint_constant(z: np.ndarray, x: np.ndarray, value: float = 1.0) -> np.ndarray:
    """A constant function of (z, x)."""
    del x
    return constant(z, value)


_TRENDS: dict[str, Callable[..., np.ndarray]] = {
    "sine": sine_trend,
    "constant": constant,
    "polynomial": polynomial,
}
_COVARIATE_TRUTHS: dict[str, Callable[..., np.ndarray]] = {
    "sine_plus_square": sine_plus_square,
    "constant": joint_constant,
}
TREND_NAMES = sorted(set(_TRENDS) | set(_COVARIATE_TRUTHS))
"""Every name accepted by `trend` or `covariate_truth`."""


def trend(name: str, **params: Any) -> Callable[[np.ndarray], np.ndarray]:
    """Looks up a trend by name, binding its parameters.

    Raises:
        `spatial_sieve.ext.exceptions.InvalidParameters`: If the name is
            unknown.
    """
    try:
        func = _TRENDS[name]
    except KeyError as exc:
        raise exceptions.InvalidParameters(f"Unknown trend {name!r}, choose from {sorted(_TRENDS)}") from exc
    if "coefficients" in params:
        params["coefficients"] = tuple(tuple(c) for c in params["coefficients"])
    return functools.partial(func, **params) if params else func


def covariate_truth(name: str, **params: Any) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Looks up a covariate-model regression function by name."""
    try:
        func = _COVARIATE_TRUTHS[name]
    except KeyError as exc:
        raise exceptions.InvalidParameters(
            f"Unknown covariate truth {name!r}, choose from {sorted(_COVARIATE_TRUTHS)}") from exc
    return functools.partial(func, **params) if params else func
