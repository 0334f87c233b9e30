"""Variance estimation and pointwise confidence intervals.

For trend fits the long-run variance core is the kernel-weighted double sum

    G_hat = (A_n / n**2) M [sum_ij psi_i psi_j' r_i r_j K(S_i - S_j)] M

with M = (Psi' Psi / n + penalty * I)^-1 and K the Bartlett kernel, so that
Omega_hat(z1, z2) = psi(z1)' G_hat psi(z2). Only pairs inside the kernel's
elliptical support contribute and those are found by grid bucketing.

For covariate fits the core is the heteroskedasticity-robust sandwich
H_hat = M (B' diag(r**2) B / n) M and V_hat(p1, p2) = b(p1)' H_hat b(p2).

Intervals are m_hat(z) +- q * sqrt(Omega_hat(z, z) / A_n) for trend fits
and m_hat(z, x) +- q * sqrt(V_hat / n) for covariate fits.
"""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import dataclasses
import enum
import logging
from typing import Any, Sequence

import numpy as np
from numpy import typing as npt
from scipy import sparse, special

from spatial_sieve.database import config
from spatial_sieve.ext import checks, exceptions
from spatial_sieve.stats import estimator, neighbors


class HacKernel(str, enum.Enum):
    """HAC weight functions. Only Bartlett is implemented."""

    BARTLETT = "bartlett"


@dataclasses.dataclass(frozen=True)
class HacConfig:
    """Bandwidths and kernel of the HAC sum.

    Attributes:
        bandwidths: Positive per-dimension bandwidths b_j, region units.
        kernel: The weight function.
    """

    bandwidths: tuple[float, ...]
    kernel: HacKernel = HacKernel.BARTLETT

    def __post_init__(self) -> None:
        object.__setattr__(self, "bandwidths", tuple(checks.positive(b, "bandwidth") for b in self.bandwidths))
        object.__setattr__(self, "kernel", HacKernel(self.kernel))

    @classmethod
    def from_fraction(cls, scales: Sequence[float], fraction: float = 0.1) -> "HacConfig":
        """b_j = fraction * A_{n,j}."""
        checks.positive(fraction, "bandwidth fraction")
        return cls(tuple(fraction * float(a) for a in scales))

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready description."""
        return {"bandwidths": list(self.bandwidths), "kernel": self.kernel.value}


@dataclasses.dataclass(frozen=True, eq=False)
class VarianceEstimate:
    """The J x J core of a variance estimate.

    Attributes:
        g_hat: Symmetric core matrix, G_hat or H_hat.
        model_kind: The model of the fit it belongs to.
        hac: The HAC configuration, None for the covariate sandwich.
        pair_count: Off-diagonal site pairs inside the kernel support.
    """

    g_hat: np.ndarray
    model_kind: estimator.ModelKind
    hac: HacConfig | None = None
    pair_count: int = 0


@dataclasses.dataclass(frozen=True, eq=False)
class ConfidenceBand:
    """Pointwise intervals on a grid.

    Attributes:
        points: The query points.
        estimate: Fitted values.
        se: Standard errors.
        lower: Lower bounds.
        upper: Upper bounds.
        level: Nominal coverage 1 - tau.
        clamped: Points whose small negative variance was set to zero.
    """

    points: np.ndarray
    estimate: np.ndarray
    se: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float
    clamped: int = 0


def bartlett_kernel(w: npt.ArrayLike, bandwidths: npt.ArrayLike) -> float | np.ndarray:
    """K(w) = max(0, 1 - |(w_j / b_j)_j|) for one lag or each row of lags."""
    w_arr = np.asarray(w, dtype=np.float64)
    scaled = w_arr / np.asarray(bandwidths, dtype=np.float64)
    weight = np.maximum(0.0, 1.0 - np.linalg.norm(scaled, axis=-1))
    return float(weight) if w_arr.ndim <= 1 else weight


def _require(fit: estimator.RidgeFit, kind: estimator.ModelKind) -> None:
    if fit.model_kind is not kind:
        raise exceptions.ModelKindMismatch(f"Expected a {kind.value} fit, got a {fit.model_kind.value} fit")
    if not fit.has_data or fit.sites is None:
        raise exceptions.ArtifactError("Inference needs a fit that still holds its data")


def _sandwich(fit: estimator.RidgeFit, core: np.ndarray) -> np.ndarray:
    left = fit.solve(core)
    out = fit.solve(left.T)
    return (out + out.T) / 2


def hac_long_run_matrix(fit: estimator.RidgeFit,
                        y: npt.ArrayLike,
                        hac: HacConfig,
                        runtime: config.RuntimeConfig | None = None) -> VarianceEstimate:
    """Estimates G_J for a trend fit by the Bartlett HAC double sum.

    Args:
        fit: A trend fit holding its data.
        y: The fitting responses.
        hac: Bandwidths in region units and the kernel.
        runtime: Numerical parameters.

    Returns:
        `VarianceEstimate`: The symmetric core G_hat.

    Raises:
        `spatial_sieve.ext.exceptions.ModelKindMismatch`: For covariate fits.
    """
    _require(fit, estimator.ModelKind.TREND)
    runtime = runtime or config.RuntimeConfig()
    if len(hac.bandwidths) != fit.sites.d:
        raise exceptions.InvalidParameters(f"Need {fit.sites.d} bandwidths, got {len(hac.bandwidths)}")
    r = estimator.residuals(fit, y)
    n = fit.n
    left, right, dist = neighbors.close_pairs(fit.sites.raw, hac.bandwidths,
                                              chunk=max(1, runtime.pair_chunk // 3**fit.sites.d))
    if left.size == 0 and n > 1:
        logging.warning("No site pairs within the HAC bandwidths %s, only the diagonal contributes.", hac.bandwidths)
    weights = (1.0 - dist) * r[left] * r[right]
    cross = sparse.coo_matrix(
        (np.concatenate([r * r, weights, weights]), (np.concatenate(
            [np.arange(n), left, right]), np.concatenate([np.arange(n), right, left]))),
        shape=(n, n),
    ).tocsr()
    psi = fit.design
    core = (psi.T @ (cross @ psi)).toarray()
    g_hat = fit.sites.area / n**2 * _sandwich(fit, (core + core.T) / 2)
    return VarianceEstimate(g_hat=g_hat, model_kind=estimator.ModelKind.TREND, hac=hac, pair_count=int(left.size))


def covariate_variance(fit: estimator.RidgeFit, y: npt.ArrayLike) -> VarianceEstimate:
    """Estimates the sandwich core H_hat for a covariate fit.

    Raises:
        `spatial_sieve.ext.exceptions.ModelKindMismatch`: For trend fits.
    """
    _require(fit, estimator.ModelKind.COVARIATE)
    r = estimator.residuals(fit, y)
    rows = fit.design
    core = (rows.T @ sparse.diags(r * r) @ rows).toarray() / fit.n
    return VarianceEstimate(g_hat=_sandwich(fit, (core + core.T) / 2), model_kind=estimator.ModelKind.COVARIATE)


def _bilinear(fit: estimator.RidgeFit, var: VarianceEstimate, first: npt.ArrayLike, second: npt.ArrayLike) -> float:
    a = estimator.design_rows(fit, np.atleast_2d(first)).toarray().ravel()
    b = estimator.design_rows(fit, np.atleast_2d(second)).toarray().ravel()
    return float(a @ var.g_hat @ b)


def _check_pair(fit: estimator.RidgeFit, var: VarianceEstimate, kind: estimator.ModelKind) -> None:
    if fit.model_kind is not kind or var.model_kind is not kind:
        raise exceptions.ModelKindMismatch(
            f"Expected {kind.value} fit and estimate, got {fit.model_kind.value} and {var.model_kind.value}")


def omega_hat(fit: estimator.RidgeFit, var: VarianceEstimate, z1: npt.ArrayLike, z2: npt.ArrayLike) -> float:
    """Omega_hat(z1, z2) = psi(z1)' G_hat psi(z2)."""
    _check_pair(fit, var, estimator.ModelKind.TREND)
    return _bilinear(fit, var, z1, z2)


def v_hat(fit: estimator.RidgeFit, var: VarianceEstimate, p1: npt.ArrayLike, p2: npt.ArrayLike) -> float:
    """V_hat(p1, p2) = b(p1)' H_hat b(p2), points are (z, x) pairs."""
    _check_pair(fit, var, estimator.ModelKind.COVARIATE)
    return _bilinear(fit, var, p1, p2)


def pointwise_variance(fit: estimator.RidgeFit, var: VarianceEstimate, points: npt.ArrayLike) -> np.ndarray:
    """Diagonal of the bilinear form over many points."""
    _check_pair(fit, var, var.model_kind)
    rows = estimator.design_rows(fit, points)
    return np.asarray(rows.multiply(rows @ var.g_hat).sum(axis=1)).ravel()


def normal_quantile(p: float) -> float:
    """Standard normal quantile, scipy's ndtri."""
    return float(special.ndtri(checks.probability(p, "probability")))


def confidence_band(fit: estimator.RidgeFit,
                    var: VarianceEstimate,
                    grid: npt.ArrayLike,
                    level: float,
                    runtime: config.RuntimeConfig | None = None) -> ConfidenceBand:
    """Pointwise normal intervals at every grid point.

    Negative variances no lower than -tol, with tol the configured clamp
    tolerance, are set to zero and counted.

    Args:
        fit: The fit.
        var: Its variance estimate.
        grid: Query points in the fit's domain.
        level: Nominal coverage in (0, 1).
        runtime: Numerical parameters.

    Returns:
        `ConfidenceBand`: The band.

    Raises:
        `spatial_sieve.ext.exceptions.NegativeVarianceError`: If a variance
            is negative beyond the tolerance.
    """
    runtime = runtime or config.RuntimeConfig()
    level = checks.probability(level, "level")
    points = np.asarray(grid, dtype=np.float64)
    variance = pointwise_variance(fit, var, points)
    tol = runtime.clamp_tolerance
    if np.any(variance < -tol):
        worst = float(variance.min())
        raise exceptions.NegativeVarianceError(f"Variance estimate {worst:.3g} is negative beyond tolerance {tol:.3g}")
    negative = variance < 0
    clamped = int(negative.sum())
    if clamped:
        logging.warning("Clamped %s slightly negative variance estimate(s) to zero.", clamped)
    variance = np.where(negative, 0.0, variance)
    scale = fit.sites.area if fit.model_kind is estimator.ModelKind.TREND else float(fit.n)
    se = np.sqrt(variance / scale)
    estimate = estimator.predict(fit, points)
    half = normal_quantile(1.0 - (1.0 - level) / 2) * se
    return ConfidenceBand(points=points,
                          estimate=estimate,
                          se=se,
                          lower=estimate - half,
                          upper=estimate + half,
                          level=level,
                          clamped=clamped)
