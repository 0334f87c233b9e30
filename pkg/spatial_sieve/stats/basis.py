"""Univariate B-spline bases and their tensor products.

This module builds clamped, uniformly knotted B-spline bases on closed
intervals and the tensor-product sieve over the unit cube that both
regression models use. Evaluation follows the Cox-de Boor recursion on
the window of nonzero functions only, vectorized over points, so every
call costs O(degree**2) per point and dimension.

Flat basis indices are 0-based and row-major: the last dimension varies
fastest, matching `numpy.ravel_multi_index`.

Typical usage example:
    ```py
    from spatial_sieve.stats import basis
    sieve = basis.basis_for_dimension(900, d=2, degree=3)
    psi = sieve.evaluate(points)          # (m, 900)
    grad = sieve.gradient(points)         # (m, 900, 2)
    ```
"""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import dataclasses
import functools
import logging
import math
from typing import Any, Sequence

import numpy as np
from numpy import typing as npt
from scipy import sparse

from spatial_sieve.ext import checks, exceptions

UNIT_INTERVAL = (-0.5, 0.5)
"""The default interval, one side of the rescaled region R0."""


def _local_values(knots: np.ndarray, spans: np.ndarray, t: np.ndarray, degree: int) -> np.ndarray:
    """All nonzero B-splines of `degree` at `t`, one row per point.

    Row r holds B_{spans[r]-degree .. spans[r], degree}(t[r]).
    """
    m = t.shape[0]
    values = np.zeros((m, degree + 1))
    values[:, 0] = 1.0
    left = np.zeros((m, degree + 1))
    right = np.zeros((m, degree + 1))
    for j in range(1, degree + 1):
        left[:, j] = t - knots[spans + 1 - j]
        right[:, j] = knots[spans + j] - t
        saved = np.zeros(m)
        for r in range(j):
            temp = values[:, r] / (right[:, r + 1] + left[:, j - r])
            values[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        values[:, j] = saved
    return values


@dataclasses.dataclass(frozen=True)
class UnivariateSplineBasis:
    """A clamped B-spline basis on a closed interval.

    Attributes:
        degree: The spline degree, at least 1.
        interior_knots: Strictly increasing knots inside the interval.
        interval: The closed interval (lower, upper).
    """

    degree: int
    interior_knots: tuple[float, ...]
    interval: tuple[float, float] = UNIT_INTERVAL

    def __post_init__(self) -> None:
        if int(self.degree) != self.degree or self.degree < 1:
            raise exceptions.InvalidParameters(f"Spline degree must be an integer >= 1, got {self.degree!r}")
        lower, upper = (float(v) for v in self.interval)
        if not (np.isfinite(lower) and np.isfinite(upper)) or upper <= lower:
            raise exceptions.InvalidParameters(f"Degenerate interval {self.interval!r}")
        knots = np.asarray(self.interior_knots, dtype=np.float64)
        if knots.size and (np.any(knots <= lower) or np.any(knots >= upper) or np.any(np.diff(knots) <= 0)):
            raise exceptions.InvalidParameters("Interior knots must be strictly increasing and inside the interval")
        object.__setattr__(self, "interval", (lower, upper))
        object.__setattr__(self, "interior_knots", tuple(float(k) for k in knots))

    @functools.cached_property
    def knot_vector(self) -> np.ndarray:
        """The clamped knot sequence, boundary knots repeated degree+1 times."""
        lower, upper = self.interval
        return np.concatenate([
            np.full(self.degree + 1, lower),
            np.asarray(self.interior_knots, dtype=np.float64),
            np.full(self.degree + 1, upper),
        ])

    @property
    def dimension(self) -> int:
        """Number of basis functions, interior knots + degree + 1."""
        return len(self.interior_knots) + self.degree + 1

    def _prepare(self, t: npt.ArrayLike) -> tuple[np.ndarray, np.ndarray]:
        arr = np.atleast_1d(np.asarray(t, dtype=np.float64)).ravel()
        lower, upper = self.interval
        arr = checks.points_in_box(arr[:, None], [lower], [upper], "t")[:, 0]
        # right endpoint falls into the last span, the limit from the left
        spans = np.searchsorted(self.knot_vector, arr, side="right") - 1
        spans = np.clip(spans, self.degree, self.dimension - 1)
        return arr, spans

    def local(self, t: npt.ArrayLike) -> tuple[np.ndarray, np.ndarray]:
        """Nonzero window of basis values.

        Args:
            t: Evaluation points inside the interval.

        Returns:
            tuple: ``(first, values)`` where ``values[r, k]`` is basis
                function ``first[r] + k`` at ``t[r]``.

        Raises:
            `spatial_sieve.ext.exceptions.DomainError`: If a point is
                outside the interval.
        """
        arr, spans = self._prepare(t)
        return spans - self.degree, _local_values(self.knot_vector, spans, arr, self.degree)

    def local_derivative(self, t: npt.ArrayLike) -> tuple[np.ndarray, np.ndarray]:
        """Nonzero window of first derivatives, same layout as `local`."""
        arr, spans = self._prepare(t)
        knots = self.knot_vector
        p = self.degree
        lower_order = _local_values(knots, spans, arr, p - 1)
        deriv = np.zeros((arr.shape[0], p + 1))
        for k in range(p + 1):
            first = spans - p + k
            if k >= 1:
                deriv[:, k] += lower_order[:, k - 1] / (knots[first + p] - knots[first])
            if k <= p - 1:
                deriv[:, k] -= lower_order[:, k] / (knots[first + p + 1] - knots[first + 1])
        return spans - p, p * deriv

    def _scatter(self, first: np.ndarray, window: np.ndarray) -> np.ndarray:
        full = np.zeros((first.shape[0], self.dimension))
        cols = first[:, None] + np.arange(self.degree + 1)[None, :]
        np.put_along_axis(full, cols, window, axis=1)
        return full

    def evaluate(self, t: npt.ArrayLike) -> np.ndarray:
        """All basis values at each point, shape (m, dimension)."""
        return self._scatter(*self.local(t))

    def derivative(self, t: npt.ArrayLike) -> np.ndarray:
        """All first derivatives at each point, shape (m, dimension)."""
        return self._scatter(*self.local_derivative(t))


def build_bspline_basis(degree: int,
                        interior_knot_count: int,
                        interval: Sequence[float] = UNIT_INTERVAL) -> UnivariateSplineBasis:
    """Builds a clamped basis with equally spaced interior knots.

    Args:
        degree: The spline degree, at least 1.
        interior_knot_count: Number of interior knots, at least 0.
        interval: The closed interval.

    Returns:
        `UnivariateSplineBasis`: A basis with interior_knot_count + degree + 1
            functions.

    Raises:
        `spatial_sieve.ext.exceptions.InvalidParameters`: On degree 0, a
            negative knot count or a degenerate interval.
    """
    if int(interior_knot_count) != interior_knot_count or interior_knot_count < 0:
        raise exceptions.InvalidParameters(f"Interior knot count must be >= 0, got {interior_knot_count!r}")
    lower, upper = (float(v) for v in interval)
    if not upper > lower:
        raise exceptions.InvalidParameters(f"Degenerate interval {tuple(interval)!r}")
    knots = np.linspace(lower, upper, int(interior_knot_count) + 2)[1:-1]
    return UnivariateSplineBasis(degree=int(degree), interior_knots=tuple(knots), interval=(lower, upper))


def eval_univariate(basis: UnivariateSplineBasis, t: float) -> np.ndarray:
    """Evaluates every function of a univariate basis at one point."""
    return basis.evaluate([t])[0]


@dataclasses.dataclass(frozen=True)
class TensorBasis:
    """Tensor-product B-spline sieve over a box.

    Attributes:
        per_dim: One univariate basis per coordinate.
    """

    per_dim: tuple[UnivariateSplineBasis, ...]

    def __post_init__(self) -> None:
        if not self.per_dim:
            raise exceptions.InvalidParameters("A tensor basis needs at least one dimension")
        object.__setattr__(self, "per_dim", tuple(self.per_dim))

    @property
    def d(self) -> int:
        """Number of coordinates."""
        return len(self.per_dim)

    @property
    def shape(self) -> tuple[int, ...]:
        """Per-dimension basis sizes."""
        return tuple(b.dimension for b in self.per_dim)

    @property
    def total_dimension(self) -> int:
        """J, the product of the per-dimension sizes."""
        return math.prod(self.shape)

    @property
    def lower(self) -> np.ndarray:
        """Lower corner of the domain box."""
        return np.array([b.interval[0] for b in self.per_dim])

    @property
    def upper(self) -> np.ndarray:
        """Upper corner of the domain box."""
        return np.array([b.interval[1] for b in self.per_dim])

    @property
    def support_size(self) -> int:
        """Most nonzero entries a single evaluation can have."""
        return math.prod(b.degree + 1 for b in self.per_dim)

    def multi_index(self, flat: npt.ArrayLike) -> tuple[np.ndarray, ...]:
        """Maps flat indices to per-dimension indices."""
        return np.unravel_index(np.asarray(flat), self.shape)

    def flat_index(self, multi: Sequence[npt.ArrayLike]) -> np.ndarray:
        """Maps per-dimension indices to flat indices."""
        return np.ravel_multi_index(tuple(np.asarray(m) for m in multi), self.shape)

    def _points(self, points: npt.ArrayLike) -> np.ndarray:
        arr = np.asarray(points, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[None, :] if self.d > 1 or arr.size == 1 else arr[:, None]
        return checks.points_in_box(arr, self.lower, self.upper, "points")

    def _combine(self, windows: Sequence[tuple[np.ndarray, np.ndarray]]) -> sparse.csr_matrix:
        first, values = windows[0]
        m = values.shape[0]
        cols = first[:, None] + np.arange(values.shape[1])[None, :]
        for k in range(1, self.d):
            first_k, values_k = windows[k]
            width = values_k.shape[1]
            values = (values[:, :, None] * values_k[:, None, :]).reshape(m, -1)
            cols = (cols[:, :, None] * self.shape[k] + first_k[:, None, None] +
                    np.arange(width)[None, None, :]).reshape(m, -1)
        width = values.shape[1]
        indptr = np.arange(0, m * width + 1, width)
        return sparse.csr_matrix((values.ravel(), cols.ravel(), indptr), shape=(m, self.total_dimension))

    def evaluate_sparse(self, points: npt.ArrayLike) -> sparse.csr_matrix:
        """Basis values as a CSR matrix holding only the local windows.

        Args:
            points: An (m, d) array of points in the domain box.

        Returns:
            `scipy.sparse.csr_matrix`: The (m, J) matrix of values.

        Raises:
            `spatial_sieve.ext.exceptions.DomainError`: If a point is
                outside the box.
        """
        arr = self._points(points)
        return self._combine([b.local(arr[:, k]) for k, b in enumerate(self.per_dim)])

    def evaluate(self, points: npt.ArrayLike) -> np.ndarray:
        """Dense basis values psi_J(z), shape (m, J)."""
        return self.evaluate_sparse(points).toarray()

    def gradient(self, points: npt.ArrayLike) -> np.ndarray:
        """Dense gradient of psi_J, shape (m, J, d).

        Column k is the derivative recurrence in dimension k times plain
        values in every other dimension.
        """
        arr = self._points(points)
        plain = [b.local(arr[:, k]) for k, b in enumerate(self.per_dim)]
        grad = np.zeros((arr.shape[0], self.total_dimension, self.d))
        for k, b in enumerate(self.per_dim):
            windows = list(plain)
            windows[k] = b.local_derivative(arr[:, k])
            grad[:, :, k] = self._combine(windows).toarray()
        return grad

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready specification of the basis."""
        return {
            "degrees": [b.degree for b in self.per_dim],
            "interior_knot_counts": [len(b.interior_knots) for b in self.per_dim],
            "intervals": [list(b.interval) for b in self.per_dim],
        }

    @classmethod
    def from_dict(cls, spec: dict[str, Any]) -> "TensorBasis":
        """Rebuilds a basis from `to_dict` output.

        Raises:
            `spatial_sieve.ext.exceptions.InvalidParameters`: If the
                specification is inconsistent.
        """
        try:
            degrees = list(spec["degrees"])
            counts = list(spec["interior_knot_counts"])
            intervals = spec.get("intervals") or [list(UNIT_INTERVAL)] * len(degrees)
        except (KeyError, TypeError) as exc:
            raise exceptions.InvalidParameters(f"Malformed basis specification: {exc}") from exc
        if not len(degrees) == len(counts) == len(intervals):
            raise exceptions.InvalidParameters("Basis specification lists differ in length")
        return cls(tuple(build_bspline_basis(p, c, iv) for p, c, iv in zip(degrees, counts, intervals)))


def tensor_basis(degrees: Sequence[int], interior_knot_counts: Sequence[int]) -> TensorBasis:
    """Builds a tensor basis over the unit cube from per-dimension sizes."""
    return TensorBasis(tuple(build_bspline_basis(p, c) for p, c in zip(degrees, interior_knot_counts)))


def eval_tensor(basis: TensorBasis, z: npt.ArrayLike) -> np.ndarray:
    """Evaluates psi_J at one point of the cube."""
    return basis.evaluate(np.asarray(z, dtype=np.float64).reshape(1, -1))[0]


def eval_tensor_gradient(basis: TensorBasis, z: npt.ArrayLike) -> np.ndarray:
    """Evaluates the J x d gradient of psi_J at one point of the cube."""
    return basis.gradient(np.asarray(z, dtype=np.float64).reshape(1, -1))[0]


def factor_dimension(total: int, d: int, degree: int | Sequence[int] = 3) -> tuple[int, ...]:
    """Splits a requested J into near-equal per-dimension sizes.

    The product never exceeds `total` unless the smallest admissible
    sizes (degree + 1 per dimension) already do, in which case the
    minimum is returned and a warning logged.

    Args:
        total: The requested total dimension J.
        d: Number of dimensions.
        degree: Spline degree, one for all dimensions or one per dimension.

    Returns:
        tuple: Per-dimension sizes.
    """
    if d < 1:
        raise exceptions.InvalidParameters(f"Dimension must be >= 1, got {d}")
    degrees = [int(degree)] * d if np.isscalar(degree) else [int(p) for p in degree]  # type: ignore[union-attr]
    minimum = [p + 1 for p in degrees]
    if math.prod(minimum) >= total:
        if math.prod(minimum) > total:
            logging.warning("Requested J=%s is below the minimal spline dimension %s, clamping.", total,
                            math.prod(minimum))
        return tuple(minimum)
    base = max(1, int(math.floor(total**(1.0 / d))))
    while (base + 1)**d <= total:
        base += 1
    while base**d > total:
        base -= 1
    sizes = [max(base, low) for low in minimum]
    while math.prod(sizes) > total:
        k = max((k for k in range(d) if sizes[k] > minimum[k]), key=lambda k: sizes[k])
        sizes[k] -= 1
    for k in range(d):
        if math.prod(sizes) // sizes[k] * (sizes[k] + 1) <= total:
            sizes[k] += 1
    return tuple(sizes)


def basis_for_dimension(total: int, d: int, degree: int = 3) -> TensorBasis:
    """Builds the cube tensor basis whose size is closest to J from below."""
    sizes = factor_dimension(total, d, degree)
    return tensor_basis([degree] * d, [size - degree - 1 for size in sizes])


def cube_grid(resolution: int | Sequence[int], d: int | None = None) -> np.ndarray:
    """Row-major grid over the unit cube, endpoints included.

    Args:
        resolution: Points per dimension, one value or one per dimension.
        d: Number of dimensions when `resolution` is a single value.

    Returns:
        `numpy.ndarray`: An (m, d) array, last coordinate varying fastest.
    """
    if np.isscalar(resolution):
        if d is None:
            raise exceptions.InvalidParameters("cube_grid needs d when resolution is a single value")
        sizes = [int(resolution)] * d  # type: ignore[arg-type]
    else:
        sizes = [int(r) for r in resolution]  # type: ignore[union-attr]
    if any(size < 2 for size in sizes):
        raise exceptions.InvalidParameters(f"Grid resolution must be >= 2 per dimension, got {sizes}")
    axes = [np.linspace(UNIT_INTERVAL[0], UNIT_INTERVAL[1], size) for size in sizes]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([axis.ravel() for axis in mesh])
