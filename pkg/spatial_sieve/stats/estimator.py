"""Series ridge estimators of the trend and covariate models.

Both models share one solve path. Given basis rows Psi (n x J) and a
response Y, we form G = Psi' Psi / n and Psi' Y / n, factor G + penalty * I
with a Cholesky decomposition and solve for beta. The covariate model uses
weighted rows b(w)(z, x) = w(x) psi(z, x), where w vanishes outside the
weight region D, and otherwise runs through exactly the same code.

Typical usage example:
    ```py
    from spatial_sieve.stats import basis, estimator
    sieve = basis.basis_for_dimension(900, d=2)
    fit = estimator.fit_trend(sites, y, sieve, penalty=0.5 / sites.n)
    surface = estimator.predict(fit, basis.cube_grid(100, d=2))
    ```
"""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import dataclasses
import enum
import logging
from typing import Any

import numpy as np
from numpy import typing as npt
from scipy import linalg, sparse

from spatial_sieve.database import config
from spatial_sieve.ext import checks, exceptions
from spatial_sieve.stats import basis as sieve
from spatial_sieve.stats import design


class ModelKind(str, enum.Enum):
    """Which regression model a fit belongs to."""

    TREND = "trend"
    COVARIATE = "covariate"


class WeightKind(str, enum.Enum):
    """Covariate weight functions, all zero outside the weight region."""

    INDICATOR = "indicator"
    RATIONAL = "rational"
    """(1 + |x|^2)^(-w) inside the region."""
    EXPONENTIAL = "exponential"
    """exp(-|x|^w) inside the region."""


@dataclasses.dataclass(frozen=True, eq=False)
class RidgeFit:
    """A fitted series ridge estimator.

    Fits restored from an artifact without their data carry no Gram,
    design or factorization and can only predict.

    Attributes:
        basis: Basis over the cube, or over cube x covariate cube.
        beta: The J coefficients.
        gram: Psi' Psi / n, or the weighted analogue.
        moment: Psi' Y / n.
        penalty: The ridge coefficient.
        n: Sample size.
        sites: The sites the fit used.
        model_kind: Trend or covariate.
        weight_region: (p, 2) bounds of D in standardized units.
        covariate_map: (lo, hi) of the affine map x -> (x - lo)/(hi - lo) - 1/2.
        weight_kind: Covariate weight function.
        weight_exponent: Exponent of the smooth weight functions.
        design: Sparse (n, J) rows the fit was computed from.
        factor: Cholesky factor of gram + penalty * I, as from cho_factor.
    """

    basis: sieve.TensorBasis
    beta: np.ndarray
    gram: np.ndarray | None
    moment: np.ndarray | None
    penalty: float
    n: int
    sites: design.SiteSet | None
    model_kind: ModelKind = ModelKind.TREND
    weight_region: np.ndarray | None = None
    covariate_map: tuple[np.ndarray, np.ndarray] | None = None
    weight_kind: WeightKind = WeightKind.INDICATOR
    weight_exponent: float = 1.0
    design: sparse.csr_matrix | None = None
    factor: tuple[np.ndarray, bool] | None = None

    @property
    def p(self) -> int:
        """Number of covariates, zero for trend fits."""
        return 0 if self.covariate_map is None else self.covariate_map[0].shape[0]

    @property
    def has_data(self) -> bool:
        """Whether the fit still holds its Gram and design."""
        return self.design is not None and self.factor is not None

    def solve(self, rhs: npt.ArrayLike) -> np.ndarray:
        """Applies M = (gram + penalty * I)^-1 to a vector or matrix."""
        if self.factor is None:
            raise exceptions.ArtifactError("This fit was restored without data, refit it to run inference")
        return linalg.cho_solve(self.factor, np.asarray(rhs, dtype=np.float64))


@dataclasses.dataclass(frozen=True)
class GramDiagnostics:
    """Empirical conditioning of a fit.

    Eigenvalues below J * machine epsilon * max_eig count as zero, which
    makes condition and lambda_hat infinite.

    Attributes:
        min_eig: Smallest Gram eigenvalue.
        max_eig: Largest Gram eigenvalue.
        condition: max_eig / min_eig.
        zeta_hat: Largest |psi_J(z)| over the probe grid.
        lambda_hat: min_eig ** -0.5.
        penalized_condition: Condition number of gram + penalty * I.
    """

    min_eig: float
    max_eig: float
    condition: float
    zeta_hat: float
    lambda_hat: float
    penalized_condition: float


def solve_normal_equations(gram: npt.ArrayLike, moment: npt.ArrayLike, penalty: float) -> np.ndarray:
    """Solves (gram + penalty * I) beta = moment by Cholesky factorization.

    Raises:
        `spatial_sieve.ext.exceptions.SingularGramError`: If the matrix is
            not positive definite.
    """
    gram = np.asarray(gram, dtype=np.float64)
    factor = _factor(gram, checks.non_negative(penalty, "penalty"), config.RuntimeConfig().pivot_threshold)
    return linalg.cho_solve(factor, np.asarray(moment, dtype=np.float64))


def _factor(gram: np.ndarray, penalty: float, pivot_threshold: float) -> tuple[np.ndarray, bool]:
    size = gram.shape[0]
    try:
        factor = linalg.cho_factor(gram + penalty * np.eye(size), lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise exceptions.SingularGramError(
            f"The Gram matrix is not positive definite with penalty {penalty:g}, use a positive ridge penalty") from exc
    if penalty == 0:
        top = linalg.eigh(gram, eigvals_only=True, subset_by_index=[size - 1, size - 1])[0]
        pivots = np.diag(factor[0])**2
        if pivots.min() < pivot_threshold * top:
            raise exceptions.SingularGramError(
                f"Unpenalized Gram is numerically singular (pivot {pivots.min():.3g}, largest eigenvalue "
                f"{top:.3g}), use a positive ridge penalty")
    return factor


def _gram(rows: sparse.csr_matrix, y: np.ndarray, chunk: int) -> tuple[np.ndarray, np.ndarray]:
    n, size = rows.shape
    gram = np.zeros((size, size))
    for start in range(0, n, chunk):
        block = rows[start:start + chunk]
        gram += (block.T @ block).toarray()
    gram /= n
    return (gram + gram.T) / 2, np.asarray(rows.T @ y).ravel() / n


def _solve_rows(rows: sparse.csr_matrix, y: np.ndarray, penalty: float,
                runtime: config.RuntimeConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray, tuple[np.ndarray, bool]]:
    penalty = checks.non_negative(penalty, "penalty")
    n, size = rows.shape
    if penalty == 0 and size > n:
        raise exceptions.SingularGramError(f"J={size} exceeds n={n}, an unpenalized fit needs J <= n")
    gram, moment = _gram(rows, y, runtime.gram_chunk)
    factor = _factor(gram, penalty, runtime.pivot_threshold)
    beta = linalg.cho_solve(factor, moment)
    logging.debug("Solved a ridge system with J=%s, n=%s, penalty=%g.", size, n, penalty)
    return gram, moment, beta, factor


def fit_trend(sites: design.SiteSet,
              y: npt.ArrayLike,
              basis: sieve.TensorBasis,
              penalty: float,
              runtime: config.RuntimeConfig | None = None) -> RidgeFit:
    """Fits the trend model by series ridge regression.

    Args:
        sites: The sites, rescaled into the cube.
        y: The n responses.
        basis: Tensor basis over the cube.
        penalty: Ridge coefficient, >= 0.
        runtime: Numerical parameters.

    Returns:
        `RidgeFit`: The fit.

    Raises:
        `spatial_sieve.ext.exceptions.InputError`: If y is malformed.
        `spatial_sieve.ext.exceptions.SingularGramError`: If the penalty
            is zero and the Gram is singular or J > n.
    """
    runtime = runtime or config.RuntimeConfig()
    if basis.d != sites.d:
        raise exceptions.InvalidParameters(f"Basis has {basis.d} dimensions, sites have {sites.d}")
    y_arr = checks.finite_vector(y, "y", length=sites.n)
    rows = basis.evaluate_sparse(sites.scaled)
    gram, moment, beta, factor = _solve_rows(rows, y_arr, penalty, runtime)
    return RidgeFit(basis=basis,
                    beta=beta,
                    gram=gram,
                    moment=moment,
                    penalty=float(penalty),
                    n=sites.n,
                    sites=sites,
                    design=rows,
                    factor=factor)


def covariate_map_from_data(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """The observed (min, max) of each covariate column.

    Raises:
        `spatial_sieve.ext.exceptions.InputError`: If a column is constant.
    """
    lo, hi = x.min(axis=0), x.max(axis=0)
    flat = np.flatnonzero(hi <= lo)
    if flat.size:
        raise exceptions.InputError(f"Covariate column(s) {(flat + 1).tolist()} are constant")
    return lo, hi


def standardize(x: npt.ArrayLike, covariate_map: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    """Maps raw covariates into standardized units."""
    lo, hi = covariate_map
    return (np.atleast_2d(np.asarray(x, dtype=np.float64)) - lo) / (hi - lo) - 0.5


def _weights(x_std: np.ndarray, region: np.ndarray, kind: WeightKind, exponent: float) -> np.ndarray:
    inside = np.all((x_std >= region[:, 0] - checks.CUBE_SLACK) & (x_std <= region[:, 1] + checks.CUBE_SLACK), axis=1)
    norm = np.linalg.norm(x_std, axis=1)
    if kind is WeightKind.RATIONAL:
        smooth = (1.0 + norm**2)**(-exponent)
    elif kind is WeightKind.EXPONENTIAL:
        smooth = np.exp(-norm**exponent)
    else:
        smooth = np.ones(x_std.shape[0])
    return np.where(inside, smooth, 0.0)


def _weighted_rows(basis: sieve.TensorBasis, z: np.ndarray, x_std: np.ndarray, region: np.ndarray, kind: WeightKind,
                   exponent: float) -> sparse.csr_matrix:
    if not x_std.shape[1]:
        return basis.evaluate_sparse(z)
    weights = _weights(x_std, region, kind, exponent)
    points = np.column_stack([z, np.clip(x_std, basis.lower[z.shape[1]:], basis.upper[z.shape[1]:])])
    return (sparse.diags(weights) @ basis.evaluate_sparse(points)).tocsr()


def fit_covariate(sites: design.SiteSet,
                  x: npt.ArrayLike,
                  y: npt.ArrayLike,
                  basis: sieve.TensorBasis,
                  weight_region: npt.ArrayLike | None = None,
                  penalty: float = 0.0,
                  covariate_range: tuple[npt.ArrayLike, npt.ArrayLike] | None = None,
                  weight_kind: WeightKind | str = WeightKind.INDICATOR,
                  weight_exponent: float = 1.0,
                  runtime: config.RuntimeConfig | None = None) -> RidgeFit:
    """Fits the covariate model with weighted basis rows.

    Covariates are standardized by the affine map sending the observed
    [min, max] of each column (or `covariate_range`) to [-1/2, 1/2]. Rows
    whose standardized covariates leave D get weight zero, so their basis
    rows vanish.

    Args:
        sites: The sites.
        x: An (n, p) matrix of covariates, p may be 0.
        y: The n responses.
        basis: Tensor basis over d + p dimensions.
        weight_region: (p, 2) bounds of D in standardized units, the
            whole standardized cube by default.
        penalty: Ridge coefficient, >= 0.
        covariate_range: Explicit (lo, hi) for the standardization.
        weight_kind: Weight function inside D.
        weight_exponent: Exponent of the smooth weight functions.
        runtime: Numerical parameters.

    Returns:
        `RidgeFit`: The covariate fit.

    Raises:
        `spatial_sieve.ext.exceptions.InputError`: If every row is
            weighted out or the inputs are malformed.
    """
    runtime = runtime or config.RuntimeConfig()
    x_arr = np.asarray(x, dtype=np.float64)
    if x_arr.ndim == 1:
        x_arr = x_arr[:, None] if x_arr.size else np.zeros((sites.n, 0))
    if x_arr.shape[1]:
        x_arr = checks.finite_matrix(x_arr, "covariates")
    if x_arr.shape[0] != sites.n:
        raise exceptions.InputError(f"covariates have {x_arr.shape[0]} rows, expected {sites.n}")
    p = x_arr.shape[1]
    if basis.d != sites.d + p:
        raise exceptions.InvalidParameters(f"Basis has {basis.d} dimensions, expected {sites.d} + {p}")
    y_arr = checks.finite_vector(y, "y", length=sites.n)
    if covariate_range is None:
        mapping = covariate_map_from_data(x_arr) if p else (np.zeros(0), np.zeros(0))
    else:
        mapping = (np.asarray(covariate_range[0], dtype=np.float64).reshape(p),
                   np.asarray(covariate_range[1], dtype=np.float64).reshape(p))
        if np.any(mapping[1] <= mapping[0]):
            raise exceptions.InvalidParameters("Covariate range must have hi > lo in every column")
    region = np.tile([-0.5, 0.5], (p, 1)) if weight_region is None else np.asarray(weight_region,
                                                                                   dtype=np.float64).reshape(p, 2)
    if np.any(region[:, 1] <= region[:, 0]):
        raise exceptions.InvalidParameters("Weight region must be a nonempty box")
    if np.any(region[:, 0] < basis.lower[sites.d:] - checks.CUBE_SLACK) or \
            np.any(region[:, 1] > basis.upper[sites.d:] + checks.CUBE_SLACK):
        raise exceptions.InvalidParameters("Weight region must lie inside the basis domain")
    kind = WeightKind(weight_kind)
    x_std = standardize(x_arr, mapping) if p else x_arr
    rows = _weighted_rows(basis, sites.scaled, x_std, region, kind, weight_exponent)
    if not np.any(abs(rows).sum(axis=1) > 0):
        raise exceptions.InputError("Every observation falls outside the weight region")
    gram, moment, beta, factor = _solve_rows(rows, y_arr, penalty, runtime)
    return RidgeFit(basis=basis,
                    beta=beta,
                    gram=gram,
                    moment=moment,
                    penalty=float(penalty),
                    n=sites.n,
                    sites=sites,
                    model_kind=ModelKind.COVARIATE,
                    weight_region=region,
                    covariate_map=mapping,
                    weight_kind=kind,
                    weight_exponent=float(weight_exponent),
                    design=rows,
                    factor=factor)


def design_rows(fit: RidgeFit, points: npt.ArrayLike) -> sparse.csr_matrix:
    """Basis rows of a fit at query points.

    Trend fits take cube points. Covariate fits take (z, x) points with x
    in standardized units and inside the weight region.

    Raises:
        `spatial_sieve.ext.exceptions.DomainError`: If a point is outside
            the fit's domain.
    """
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, fit.basis.d) if fit.basis.d > 1 or arr.size == 1 else arr[:, None]
    if fit.model_kind is ModelKind.TREND or fit.p == 0:
        return fit.basis.evaluate_sparse(arr)
    d = fit.basis.d - fit.p
    x_std = checks.points_in_box(arr[:, d:], fit.weight_region[:, 0], fit.weight_region[:, 1], "covariate points")
    z = checks.points_in_box(arr[:, :d], fit.basis.lower[:d], fit.basis.upper[:d], "points")
    return _weighted_rows(fit.basis, z, x_std, fit.weight_region, fit.weight_kind, fit.weight_exponent)


def predict(fit: RidgeFit, points: npt.ArrayLike) -> np.ndarray:
    """Evaluates the fitted surface at query points, no extrapolation."""
    return np.asarray(design_rows(fit, points) @ fit.beta).ravel()


def residuals(fit: RidgeFit, y: npt.ArrayLike) -> np.ndarray:
    """Y_i minus the fitted value at each site."""
    if fit.design is None:
        raise exceptions.ArtifactError("This fit was restored without data, refit it to compute residuals")
    y_arr = checks.finite_vector(y, "y", length=fit.n)
    return y_arr - np.asarray(fit.design @ fit.beta).ravel()


def gram_diagnostics(fit: RidgeFit, probe_grid: npt.ArrayLike) -> GramDiagnostics:
    """Eigen-extremes of the Gram and the largest basis norm on a grid."""
    if fit.gram is None:
        raise exceptions.ArtifactError("This fit was restored without data, it has no Gram matrix")
    probe = np.asarray(probe_grid, dtype=np.float64)
    if probe.size == 0:
        raise exceptions.InvalidParameters("The probe grid is empty")
    eigs = linalg.eigvalsh(fit.gram)
    low, high = float(eigs[0]), float(eigs[-1])
    floor = eigs.size * np.finfo(np.float64).eps * max(high, 0.0)
    rows = design_rows(fit, probe)
    zeta = float(np.sqrt(np.max(np.asarray(rows.multiply(rows).sum(axis=1)))))
    positive = low > floor
    shifted = low + fit.penalty
    return GramDiagnostics(
        min_eig=low,
        max_eig=high,
        condition=high / low if positive else float("inf"),
        zeta_hat=zeta,
        lambda_hat=low**-0.5 if positive else float("inf"),
        penalized_condition=(high + fit.penalty) / shifted if shifted > floor else float("inf"),
    )


def fit_to_dict(fit: RidgeFit) -> dict[str, Any]:
    """JSON-ready fit description, without the data."""
    spec: dict[str, Any] = {
        "model_kind": fit.model_kind.value,
        "basis": fit.basis.to_dict(),
        "beta": fit.beta.tolist(),
        "penalty": fit.penalty,
        "n": fit.n,
    }
    if fit.sites is not None:
        spec["scales"] = fit.sites.scales.tolist()
        spec["offset"] = fit.sites.offset.tolist()
    if fit.model_kind is ModelKind.COVARIATE:
        spec["covariate_map"] = {"lo": fit.covariate_map[0].tolist(), "hi": fit.covariate_map[1].tolist()}
        spec["weight_region"] = fit.weight_region.tolist()
        spec["weight_kind"] = fit.weight_kind.value
        spec["weight_exponent"] = fit.weight_exponent
    return spec


def restore_fit(spec: dict[str, Any],
                sites: design.SiteSet | None = None,
                y: npt.ArrayLike | None = None,
                x: npt.ArrayLike | None = None,
                runtime: config.RuntimeConfig | None = None) -> RidgeFit:
    """Rebuilds a fit from `fit_to_dict` output.

    Without data the fit can only predict. With data it is refitted and
    the coefficients are checked against the stored ones.

    Raises:
        `spatial_sieve.ext.exceptions.ArtifactError`: If the artifact is
            malformed or does not match the data.
    """
    try:
        basis = sieve.TensorBasis.from_dict(spec["basis"])
        kind = ModelKind(spec.get("model_kind", "trend"))
        beta = np.asarray(spec["beta"], dtype=np.float64)
        penalty = float(spec["penalty"])
        n = int(spec["n"])
        mapping = None
        region = None
        if kind is ModelKind.COVARIATE:
            mapping = (np.asarray(spec["covariate_map"]["lo"], dtype=np.float64),
                       np.asarray(spec["covariate_map"]["hi"], dtype=np.float64))
            region = np.asarray(spec["weight_region"], dtype=np.float64).reshape(-1, 2)
    except (KeyError, TypeError, ValueError, exceptions.InvalidParameters) as exc:
        raise exceptions.ArtifactError(f"Malformed fit artifact: {exc}") from exc
    if beta.shape != (basis.total_dimension,):
        raise exceptions.ArtifactError(f"Artifact holds {beta.size} coefficients for J={basis.total_dimension}")
    if sites is None:
        return RidgeFit(basis=basis,
                        beta=beta,
                        gram=None,
                        moment=None,
                        penalty=penalty,
                        n=n,
                        sites=None,
                        model_kind=kind,
                        weight_region=region,
                        covariate_map=mapping,
                        weight_kind=WeightKind(spec.get("weight_kind", "indicator")),
                        weight_exponent=float(spec.get("weight_exponent", 1.0)))
    if y is None:
        raise exceptions.InvalidParameters("Restoring a fit with sites also needs the responses")
    if kind is ModelKind.TREND:
        fit = fit_trend(sites, y, basis, penalty, runtime)
    else:
        fit = fit_covariate(sites,
                            x if x is not None else np.zeros((sites.n, 0)),
                            y,
                            basis,
                            weight_region=region,
                            penalty=penalty,
                            covariate_range=mapping,
                            weight_kind=spec.get("weight_kind", "indicator"),
                            weight_exponent=float(spec.get("weight_exponent", 1.0)),
                            runtime=runtime)
    if fit.n != n or not np.allclose(fit.beta, beta, rtol=1e-8, atol=1e-10):
        raise exceptions.ArtifactError("The fit artifact does not match the supplied data")
    return fit
