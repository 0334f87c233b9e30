"""Stochastic sampling designs and site rescaling.

Sites are i.i.d. draws from A_n^{-1} g(./A_n) on the expanding rectangle
R_n = prod_j [-A_{n,j}/2, A_{n,j}/2], where g is a density on the unit
cube R0 bounded away from zero and infinity. Observed sites are mapped
back into R0 by componentwise division (after an optional centering) and
that rescaled version is what every estimator consumes.

Typical usage example:
    ```py
    from spatial_sieve.stats import design
    plan = design.SamplingDesign(scales=(102.0, 74.0))
    sites = design.draw_sites(plan, n=5975, seed=7)
    ```
"""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import dataclasses
import enum
import functools
import math
from typing import Any, Sequence

import numpy as np
from numpy import typing as npt
from numpy.polynomial import polynomial as poly

from spatial_sieve.ext import checks, exceptions, streams

_HALF = 0.5


class DensityKind(str, enum.Enum):
    """The catalogue of unit-cube site densities."""

    UNIFORM = "uniform"
    POLYNOMIAL = "polynomial"


@dataclasses.dataclass(frozen=True)
class SiteDensity:
    """Density g of the rescaled sites on the unit cube.

    A polynomial density is a product of marginals, each proportional to a
    polynomial that stays positive on [-1/2, 1/2]. Such a density has a
    computable supremum, which the rejection sampler needs.

    Attributes:
        kind: Uniform or polynomial.
        marginals: Ascending coefficients of each marginal polynomial.
            A single marginal is used for every dimension.
    """

    kind: DensityKind = DensityKind.UNIFORM
    marginals: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", DensityKind(self.kind))
        object.__setattr__(self, "marginals", tuple(tuple(float(c) for c in m) for m in self.marginals))
        if self.kind is DensityKind.POLYNOMIAL:
            if not self.marginals:
                raise exceptions.InvalidParameters("A polynomial density needs at least one marginal")
            for coeffs in self.marginals:
                low, _ = _extremes(coeffs)
                if low <= 0:
                    raise exceptions.InvalidParameters(
                        f"Marginal {coeffs} is not bounded away from zero on the cube (min {low:.3g})")

    def marginal(self, k: int) -> tuple[np.ndarray, float]:
        """Normalized coefficients and supremum of marginal `k`."""
        return _normalized(self.marginals[k if len(self.marginals) > 1 else 0])

    def pdf(self, points: npt.ArrayLike) -> np.ndarray:
        """Evaluates g at points of the cube, shape (m,)."""
        arr = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if self.kind is DensityKind.UNIFORM:
            return np.ones(arr.shape[0])
        out = np.ones(arr.shape[0])
        for k in range(arr.shape[1]):
            coeffs, _ = self.marginal(k)
            out *= poly.polyval(arr[:, k], coeffs)
        return out

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready description."""
        return {"kind": self.kind.value, "marginals": [list(m) for m in self.marginals]}


@functools.lru_cache(maxsize=64)
def _extremes(coeffs: tuple[float, ...]) -> tuple[float, float]:
    """Minimum and maximum of a polynomial on [-1/2, 1/2]."""
    candidates = [-_HALF, _HALF]
    if len(coeffs) > 2:
        roots = poly.polyroots(poly.polyder(coeffs))
        candidates += [r.real for r in roots if abs(r.imag) < 1e-12 and -_HALF < r.real < _HALF]
    values = poly.polyval(np.array(candidates), coeffs)
    return float(values.min()), float(values.max())


@functools.lru_cache(maxsize=64)
def _normalized(coeffs: tuple[float, ...]) -> tuple[np.ndarray, float]:
    integral = poly.polyint(coeffs)
    mass = poly.polyval(_HALF, integral) - poly.polyval(-_HALF, integral)
    normalized = np.asarray(coeffs) / mass
    return normalized, _extremes(tuple(normalized))[1]


@dataclasses.dataclass(frozen=True)
class SamplingDesign:
    """Sampling region and site density.

    Attributes:
        scales: The region scales A_{n,j}, one per dimension.
        density: The unit-cube density g.
    """

    scales: tuple[float, ...]
    density: SiteDensity = SiteDensity()

    def __post_init__(self) -> None:
        scales = tuple(checks.positive(a, "region scale") for a in self.scales)
        if not scales:
            raise exceptions.InvalidParameters("A sampling design needs at least one dimension")
        object.__setattr__(self, "scales", scales)
        count = len(self.density.marginals)
        if self.density.kind is DensityKind.POLYNOMIAL and count not in (1, len(scales)):
            raise exceptions.InvalidParameters(f"Density has {count} marginals for {len(scales)} dimensions")

    @property
    def d(self) -> int:
        """Spatial dimension."""
        return len(self.scales)

    @property
    def area(self) -> float:
        """A_n, the volume of the sampling region."""
        return math.prod(self.scales)

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready description."""
        return {"scales": list(self.scales), "density": self.density.to_dict()}


@dataclasses.dataclass(frozen=True, eq=False)
class SiteSet:
    """Observed sites in raw and rescaled coordinates.

    Attributes:
        raw: An (n, d) array of sites in region units.
        scaled: An (n, d) array of sites in the unit cube.
        scales: The region scales used for rescaling.
        offset: The centering subtracted before rescaling.
    """

    raw: np.ndarray
    scaled: np.ndarray
    scales: np.ndarray
    offset: np.ndarray

    def __post_init__(self) -> None:
        for name in ("raw", "scaled", "scales", "offset"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        """Number of sites."""
        return self.raw.shape[0]

    @property
    def d(self) -> int:
        """Spatial dimension."""
        return self.raw.shape[1]

    @property
    def area(self) -> float:
        """A_n, the volume of the sampling region."""
        return float(np.prod(self.scales))

    def to_raw(self, points: npt.ArrayLike) -> np.ndarray:
        """Maps cube points back to region units."""
        return np.asarray(points, dtype=np.float64) * self.scales + self.offset


def draw_sites(sampling: SamplingDesign, n: int, seed: int, rung: int = 0, replication: int = 0) -> SiteSet:
    """Draws n i.i.d. sites from the design.

    Non-uniform densities are sampled per dimension by rejection from the
    uniform envelope scaled by the marginal supremum.

    Args:
        sampling: The design.
        n: Number of sites, at least 1.
        seed: The 64-bit seed.
        rung: Study rung, selects the stream.
        replication: Study replication, selects the stream.

    Returns:
        `SiteSet`: The sites, centered at the origin.
    """
    if int(n) != n or n < 1:
        raise exceptions.InvalidParameters(f"Number of sites must be >= 1, got {n!r}")
    n = int(n)
    rng = streams.generator(seed, streams.Purpose.SITES, rung, replication)
    if sampling.density.kind is DensityKind.UNIFORM:
        scaled = rng.uniform(-_HALF, _HALF, size=(n, sampling.d))
    else:
        scaled = np.empty((n, sampling.d))
        for k in range(sampling.d):
            coeffs, sup = sampling.density.marginal(k)
            accepted: list[np.ndarray] = []
            count = 0
            while count < n:
                batch = max(64, int(1.2 * (n - count) * sup))
                proposal = rng.uniform(-_HALF, _HALF, size=batch)
                keep = proposal[rng.uniform(0.0, sup, size=batch) < poly.polyval(proposal, coeffs)]
                accepted.append(keep)
                count += keep.size
            scaled[:, k] = np.concatenate(accepted)[:n]
    scales = np.asarray(sampling.scales)
    return SiteSet(raw=scaled * scales, scaled=scaled, scales=scales, offset=np.zeros(sampling.d))


def rescale_sites(raw: npt.ArrayLike, scales: Sequence[float], offset: Sequence[float] | None = None) -> SiteSet:
    """Rescales observed sites into the unit cube.

    Args:
        raw: An (n, d) array of sites.
        scales: The region scales A_{n,j}.
        offset: Centering subtracted first, zeros by default.

    Returns:
        `SiteSet`: The sites with their rescaled version.

    Raises:
        `spatial_sieve.ext.exceptions.RegionError`: If sites fall outside
            the region, listing the offending rows.
    """
    scales_arr = np.array([checks.positive(a, "region scale") for a in scales])
    raw_arr = checks.finite_matrix(raw, "sites", columns=scales_arr.shape[0])
    offset_arr = np.zeros_like(scales_arr) if offset is None else np.asarray(offset, dtype=np.float64)
    scaled = (raw_arr - offset_arr) / scales_arr
    outside = np.any(np.abs(scaled) > _HALF + checks.CUBE_SLACK, axis=1)
    if np.any(outside):
        rows = np.flatnonzero(outside)
        raise exceptions.RegionError(
            f"{rows.size} site(s) outside the sampling region, rows {rows[:20].tolist()}", rows=rows.tolist())
    return SiteSet(raw=raw_arr, scaled=np.clip(scaled, -_HALF, _HALF), scales=scales_arr, offset=offset_arr)


def infer_region(raw: npt.ArrayLike, margin_fraction: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Infers region scales from the sites themselves.

    Sites are centered at their componentwise midrange so the cube bound
    is tight, then A_j = (1 + margin) * 2 * max_i |raw_ij - center_j|.

    Args:
        raw: An (n, d) array of sites, n >= 2.
        margin_fraction: Relative margin, >= 0.

    Returns:
        tuple: ``(scales, offset)``.

    Raises:
        `spatial_sieve.ext.exceptions.InputError`: If fewer than two sites
            are given or all sites coincide in some dimension.
    """
    raw_arr = checks.finite_matrix(raw, "sites")
    margin = checks.non_negative(margin_fraction, "margin fraction")
    if raw_arr.shape[0] < 2:
        raise exceptions.InputError("Region inference needs at least two sites")
    offset = (raw_arr.max(axis=0) + raw_arr.min(axis=0)) / 2
    half = np.max(np.abs(raw_arr - offset), axis=0)
    flat = np.flatnonzero(half == 0)
    if flat.size:
        raise exceptions.InputError(f"All sites coincide in dimension(s) {(flat + 1).tolist()}")
    return (1.0 + margin) * 2.0 * half, offset


def sites_from_raw(raw: npt.ArrayLike,
                   scales: Sequence[float] | None = None,
                   margin_fraction: float | None = None) -> SiteSet:
    """Rescales raw sites with given scales, or infers the region.

    Exactly one of `scales` and `margin_fraction` should be given.
    """
    if scales is not None:
        return rescale_sites(raw, scales)
    if margin_fraction is None:
        raise exceptions.InvalidParameters("Either region scales or a margin fraction is required")
    inferred, offset = infer_region(raw, margin_fraction)
    return rescale_sites(raw, inferred, offset)
