"""Levy-driven moving-average random fields and synthetic data.

A field e(x) = int theta(x - u) L(du) is specified by an isotropic kernel
theta and an infinitely divisible random measure L. We simulate it at
arbitrary sites by truncating theta at a radius R and discretizing L:
Gaussian drivers become independent N(0, sigma0 h^d) cell increments on a
grid of step h, compound Poisson drivers become an explicit point process
with i.i.d. zero-mean jumps. Because the truncated kernel has compact
support the simulated field is exactly R-dependent.

The same module synthesizes responses for the trend model
Y = m0(S/A) + eta(S/A) e(S) + sigma_eps(S/A) eps and the covariate model
Y = m0(S/A, X(S)) + h(S/A, X(S)) eps.

Typical usage example:
    ```py
    from spatial_sieve.stats import fields
    model = fields.FieldModel(fields.ExponentialKernel(1.0, 1.0), fields.GaussianDriver(1.0))
    e = fields.simulate_field(model, sites, seed=11)
    ```
"""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import dataclasses
import enum
import functools
import logging
import math
import warnings
from typing import Any, Callable, Sequence, Union

import numpy as np
from numpy import typing as npt
from numpy.polynomial import polynomial as poly
from scipy import integrate, special
from scipy.spatial import cKDTree

from spatial_sieve.database import config
from spatial_sieve.ext import checks, exceptions, streams
from spatial_sieve.stats import design

TRUNCATION_FLOOR = 1e-8
"""Kernel truncation radius is where the slowest exponential drops below this."""
MIN_EFOLDINGS = 5.0
"""Smallest admissible truncation radius in e-folding lengths."""
CELLS_PER_EFOLDING = 8
"""Default grid resolution of Gaussian drivers."""
_BLOCK_ELEMENTS = 4_000_000

SurfaceFn = Union[float, Callable[[np.ndarray], np.ndarray]]
CovariateFn = Union[float, Callable[[np.ndarray, np.ndarray], np.ndarray]]


@dataclasses.dataclass(frozen=True)
class ExponentialKernel:
    """theta(x) = r0 exp(-r1 |x|).

    Attributes:
        r0: Amplitude, nonzero.
        r1: Decay rate, positive.
    """

    r0: float
    r1: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.r0) or self.r0 == 0:
            raise exceptions.InvalidParameters(f"Exponential kernel needs r0 != 0, got {self.r0!r}")
        checks.positive(self.r1, "r1")

    @property
    def decay_rate(self) -> float:
        """The slowest exponential decay rate."""
        return float(self.r1)

    def radial(self, r: npt.ArrayLike) -> np.ndarray:
        """Kernel value as a function of |x|."""
        return self.r0 * np.exp(-self.r1 * np.asarray(r, dtype=np.float64))

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready description."""
        return {"kind": "exponential", "r0": self.r0, "r1": self.r1}


@dataclasses.dataclass(frozen=True)
class CarmaKernel:
    """Isotropic CARMA(p0, q0) kernel.

    theta(x) = sum_i b(lambda_i) / a'(lambda_i) exp(lambda_i |x|) with
    a(z) = prod_i (z^2 - lambda_i^2) and b(z) = prod_j (z^2 - xi_j^2).

    Attributes:
        lambdas: The p0 distinct negative autoregressive roots.
        b_zeros: The q0 < p0 real zeros xi_j of the moving-average
            polynomial.
    """

    lambdas: tuple[float, ...]
    b_zeros: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        lambdas = tuple(float(v) for v in self.lambdas)
        zeros = tuple(float(v) for v in self.b_zeros)
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "b_zeros", zeros)
        if not lambdas or any(not lam < 0 for lam in lambdas):
            raise exceptions.InvalidParameters("CARMA roots must be negative")
        if len(set(lambdas)) != len(lambdas):
            raise exceptions.InvalidParameters("CARMA roots must be distinct")
        if len(zeros) >= len(lambdas):
            raise exceptions.InvalidParameters(f"CARMA needs q0 < p0, got q0={len(zeros)}, p0={len(lambdas)}")
        for lam in lambdas:
            for xi in zeros:
                if math.isclose(lam * lam, xi * xi, rel_tol=1e-12):
                    raise exceptions.InvalidParameters(f"lambda^2 = xi^2 for lambda={lam}, xi={xi}")

    @classmethod
    def from_b_coeffs(cls, lambdas: Sequence[float], b_coeffs: Sequence[float]) -> "CarmaKernel":
        """Builds the kernel from ascending coefficients of b_*(z).

        Raises:
            `spatial_sieve.ext.exceptions.InvalidParameters`: If b_* has
                complex zeros.
        """
        roots = poly.polyroots(np.asarray(b_coeffs, dtype=np.float64)) if len(b_coeffs) > 1 else np.array([])
        if np.any(np.abs(np.imag(roots)) > 1e-10):
            raise exceptions.InvalidParameters("The moving-average polynomial must have real zeros")
        return cls(tuple(lambdas), tuple(float(r) for r in np.real(roots)))

    @functools.cached_property
    def weights(self) -> np.ndarray:
        """The coefficients b(lambda_i) / a'(lambda_i)."""
        lam = np.asarray(self.lambdas)
        a_poly = poly.polyfromroots(np.concatenate([lam, -lam]))
        b_poly = poly.polyfromroots(np.concatenate([self.b_zeros, np.negative(self.b_zeros)])) \
            if self.b_zeros else np.array([1.0])
        return poly.polyval(lam, b_poly) / poly.polyval(lam, poly.polyder(a_poly))

    @property
    def decay_rate(self) -> float:
        """The slowest exponential decay rate, min |lambda_i|."""
        return float(min(abs(lam) for lam in self.lambdas))

    def radial(self, r: npt.ArrayLike) -> np.ndarray:
        """Kernel value as a function of |x|."""
        r = np.asarray(r, dtype=np.float64)
        return np.sum(self.weights * np.exp(np.multiply.outer(r, np.asarray(self.lambdas))), axis=-1)

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready description."""
        return {"kind": "carma", "lambdas": list(self.lambdas), "b_zeros": list(self.b_zeros)}


KernelSpec = Union[ExponentialKernel, CarmaKernel]


class JumpKind(str, enum.Enum):
    """Zero-mean jump distributions of compound Poisson drivers."""

    NORMAL = "normal"
    TWO_POINT = "two_point"


@dataclasses.dataclass(frozen=True)
class GaussianDriver:
    """Gaussian random measure with triplet (0, sigma0, 0).

    Attributes:
        sigma0: Variance rate per unit volume.
    """

    sigma0: float

    def __post_init__(self) -> None:
        checks.positive(self.sigma0, "sigma0")

    @property
    def variance_rate(self) -> float:
        """Variance of L over a unit volume."""
        return float(self.sigma0)

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready description."""
        return {"kind": "gaussian", "sigma0": self.sigma0}


@dataclasses.dataclass(frozen=True)
class CompoundPoissonDriver:
    """Compound Poisson random measure with zero-mean jumps.

    Attributes:
        rate: Intensity lambda of the jump locations.
        jump: The jump distribution.
        jump_scale: Variance v for normal jumps, size a for +-a jumps.
    """

    rate: float
    jump: JumpKind = JumpKind.NORMAL
    jump_scale: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "jump", JumpKind(self.jump))
        checks.positive(self.rate, "compound Poisson rate")
        checks.positive(self.jump_scale, "jump scale")

    @property
    def jump_variance(self) -> float:
        """E[J^2] of a single jump."""
        return float(self.jump_scale if self.jump is JumpKind.NORMAL else self.jump_scale**2)

    @property
    def variance_rate(self) -> float:
        """Variance of L over a unit volume, lambda E[J^2]."""
        return float(self.rate) * self.jump_variance

    def draw_jumps(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Draws `count` i.i.d. jumps."""
        if self.jump is JumpKind.NORMAL:
            return rng.normal(0.0, math.sqrt(self.jump_scale), size=count)
        return self.jump_scale * rng.choice(np.array([-1.0, 1.0]), size=count)

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready description."""
        return {"kind": "compound_poisson", "rate": self.rate, "jump": self.jump.value, "jump_scale": self.jump_scale}


LevyDriverSpec = Union[GaussianDriver, CompoundPoissonDriver]


@dataclasses.dataclass(frozen=True)
class FieldModel:
    """A simulable stationary Levy-driven moving-average field.

    Attributes:
        kernel: The isotropic kernel theta.
        driver: The random measure L.
        grid_step: Discretization step h, 1/8 of an e-folding by default.
        truncation_radius: Kernel truncation radius R.
        normalize: Rescale so that Var e(x) = 1.
    """

    kernel: KernelSpec
    driver: LevyDriverSpec
    grid_step: float | None = None
    truncation_radius: float | None = None
    normalize: bool = True

    def __post_init__(self) -> None:
        rate = self.kernel.decay_rate
        if self.truncation_radius is None:
            object.__setattr__(self, "truncation_radius", max(MIN_EFOLDINGS, math.log(1 / TRUNCATION_FLOOR)) / rate)
        if self.grid_step is None:
            object.__setattr__(self, "grid_step", 1.0 / (CELLS_PER_EFOLDING * rate))
        checks.positive(self.grid_step, "grid step")
        checks.positive(self.truncation_radius, "truncation radius")
        if self.truncation_radius * rate < MIN_EFOLDINGS * (1 - 1e-12):
            raise exceptions.InvalidParameters(
                f"Truncation radius {self.truncation_radius} is below {MIN_EFOLDINGS} e-folding lengths")

    def kernel_value(self, r: npt.ArrayLike) -> np.ndarray:
        """Truncated kernel as a function of |x|."""
        r = np.asarray(r, dtype=np.float64)
        return np.where(r <= self.truncation_radius, self.kernel.radial(r), 0.0)

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready description."""
        return {
            "kernel": self.kernel.to_dict(),
            "driver": self.driver.to_dict(),
            "grid_step": self.grid_step,
            "truncation_radius": self.truncation_radius,
            "normalize": self.normalize,
        }


def kernel_from_dict(spec: dict[str, Any]) -> KernelSpec:
    """Rebuilds a kernel from its `to_dict` output."""
    kind = spec.get("kind", "exponential")
    if kind == "exponential":
        return ExponentialKernel(float(spec.get("r0", 1.0)), float(spec.get("r1", 1.0)))
    if kind == "carma":
        if "b_coeffs" in spec:
            return CarmaKernel.from_b_coeffs(spec["lambdas"], spec["b_coeffs"])
        return CarmaKernel(tuple(spec["lambdas"]), tuple(spec.get("b_zeros", ())))
    raise exceptions.InvalidParameters(f"Unknown kernel kind {kind!r}")


def driver_from_dict(spec: dict[str, Any]) -> LevyDriverSpec:
    """Rebuilds a driver from its `to_dict` output."""
    kind = spec.get("kind", "gaussian")
    if kind == "gaussian":
        return GaussianDriver(float(spec.get("sigma0", 1.0)))
    if kind == "compound_poisson":
        return CompoundPoissonDriver(float(spec.get("rate", 1.0)), JumpKind(spec.get("jump", "normal")),
                                     float(spec.get("jump_scale", 1.0)))
    raise exceptions.InvalidParameters(f"Unknown driver kind {kind!r}")


def field_model_from_dict(spec: dict[str, Any]) -> FieldModel:
    """Rebuilds a field model from its `to_dict` output."""
    return FieldModel(
        kernel=kernel_from_dict(spec.get("kernel", {})),
        driver=driver_from_dict(spec.get("driver", {})),
        grid_step=spec.get("grid_step"),
        truncation_radius=spec.get("truncation_radius"),
        normalize=bool(spec.get("normalize", True)),
    )


def kernel_eval(spec: KernelSpec, x: npt.ArrayLike) -> float | np.ndarray:
    """Evaluates theta at a point, or at each row of an (m, d) array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim <= 1:
        return float(spec.radial(np.linalg.norm(arr)))
    return spec.radial(np.linalg.norm(arr, axis=1))


def _sphere_area(dim: int) -> float:
    """Surface area of the unit sphere in R^dim."""
    return 2.0 * math.pi**(dim / 2) / special.gamma(dim / 2)


def _quad(func: Callable[[float], float], lower: float, upper: float, points: Sequence[float],
          epsabs: float) -> tuple[float, float, bool]:
    inner = [p for p in points if lower < p < upper]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        value, abserr = integrate.quad(func, lower, upper, points=inner or None, epsabs=epsabs, limit=400)
    return value, abserr, bool(caught)


@functools.lru_cache(maxsize=256)
def _overlap(model: FieldModel, d: int, s: float, epsabs: float, ceiling: float) -> float:
    """int_{|u| <= R} theta(u) theta(u + x) du for |x| = s."""
    radius = float(model.truncation_radius)
    theta = model.kernel.radial
    if d == 1:
        value, abserr, warned = _quad(lambda u: float(theta(abs(u)) * theta(abs(u + s))), -radius, radius, [0.0, -s],
                                      epsabs)
    elif s == 0:
        value, abserr, warned = _quad(lambda r: float(r**(d - 1) * theta(r)**2), 0.0, radius, [], epsabs)
        value *= _sphere_area(d)
        abserr *= _sphere_area(d)
    else:
        ring = _sphere_area(d - 1)

        def angular(r: float) -> float:

            def shifted(phi: float) -> float:
                dist = math.sqrt(max(r * r + s * s + 2 * r * s * math.cos(phi), 0.0))
                return float(math.sin(phi)**(d - 2) * theta(dist))

            val, _ = integrate.quad(shifted, 0.0, math.pi, epsabs=epsabs, limit=200)
            return float(r**(d - 1) * theta(r)) * val

        value, abserr, warned = _quad(angular, 0.0, radius, [s], epsabs)
        value *= ring
        abserr *= ring
    if abserr > ceiling:
        raise exceptions.QuadratureError(f"Covariance quadrature reached only {abserr:.3g} at lag {s}", achieved=abserr)
    if warned:
        logging.warning("Covariance quadrature at lag %s warned, error estimate %.3g accepted.", s, abserr)
    return value


def covariance(model: FieldModel, lag: npt.ArrayLike, runtime: config.RuntimeConfig | None = None) -> float:
    """Covariance sigma_e(lag) = E[e(0) e(lag)] of the truncated field.

    The spatial dimension is the length of `lag`.

    Args:
        model: The field model.
        lag: The lag vector.
        runtime: Numerical parameters, read from runtimeconfig.json if None.

    Returns:
        float: The covariance, divided by sigma_e(0) when normalizing.

    Raises:
        `spatial_sieve.ext.exceptions.QuadratureError`: If quadrature
            cannot reach the configured error ceiling.
    """
    runtime = runtime or config.RuntimeConfig()
    lag_arr = np.atleast_1d(np.asarray(lag, dtype=np.float64))
    d = lag_arr.shape[0]
    s = float(np.linalg.norm(lag_arr))
    tol = (runtime.quad_epsabs, runtime.quad_error_ceiling)
    value = _overlap(model, d, s, *tol)
    if model.normalize:
        return value / _overlap(model, d, 0.0, *tol)
    return model.driver.variance_rate * value


def _field_scale(model: FieldModel, d: int, runtime: config.RuntimeConfig) -> float:
    if not model.normalize:
        return 1.0
    raw = model.driver.variance_rate * _overlap(model, d, 0.0, runtime.quad_epsabs, runtime.quad_error_ceiling)
    return 1.0 / math.sqrt(raw)


def _enlarged_box(model: FieldModel, sites: design.SiteSet) -> tuple[np.ndarray, np.ndarray]:
    radius = float(model.truncation_radius)
    half = sites.scales / 2
    low = np.minimum(sites.offset - half, sites.raw.min(axis=0)) - radius
    high = np.maximum(sites.offset + half, sites.raw.max(axis=0)) + radius
    return low, high


def _gaussian_field(model: FieldModel, sites: design.SiteSet, rng: np.random.Generator,
                    runtime: config.RuntimeConfig) -> np.ndarray:
    h = float(model.grid_step)
    d = sites.d
    low, high = _enlarged_box(model, sites)
    counts = np.ceil((high - low) / h).astype(np.int64)
    cells = int(np.prod(counts))
    if cells > runtime.cell_budget:
        raise exceptions.BudgetExceeded(f"Simulation grid needs {cells} cells, budget is {runtime.cell_budget}")
    increments = rng.normal(0.0, math.sqrt(model.driver.variance_rate * h**d), size=cells)
    reach = int(math.ceil(float(model.truncation_radius) / h))
    stencil = np.stack(np.meshgrid(*[np.arange(-reach, reach + 1)] * d, indexing="ij"), axis=-1).reshape(-1, d)
    chunk = max(1, min(runtime.site_chunk, _BLOCK_ELEMENTS // stencil.shape[0]))
    out = np.empty(sites.n)
    for start in range(0, sites.n, chunk):
        block = sites.raw[start:start + chunk]
        base = np.floor((block - low) / h).astype(np.int64)
        cell = base[:, None, :] + stencil[None, :, :]
        valid = np.all((cell >= 0) & (cell < counts), axis=2)
        cell = np.clip(cell, 0, counts - 1)
        centers = low + (cell + 0.5) * h
        dist = np.linalg.norm(block[:, None, :] - centers, axis=2)
        weight = np.where(valid, model.kernel_value(dist), 0.0)
        flat = np.ravel_multi_index(tuple(np.moveaxis(cell, -1, 0)), tuple(counts))
        out[start:start + chunk] = np.sum(weight * increments[flat], axis=1)
    return out


def _poisson_field(model: FieldModel, sites: design.SiteSet, rng: np.random.Generator,
                   runtime: config.RuntimeConfig) -> np.ndarray:
    driver = model.driver
    low, high = _enlarged_box(model, sites)
    volume = float(np.prod(high - low))
    count = int(rng.poisson(driver.rate * volume))
    if count > runtime.cell_budget:
        raise exceptions.BudgetExceeded(f"Simulation needs {count} jump points, budget is {runtime.cell_budget}")
    points = low + rng.uniform(size=(count, sites.d)) * (high - low)
    jumps = driver.draw_jumps(rng, count)
    out = np.zeros(sites.n)
    if count == 0:
        return out
    tree = cKDTree(points)
    for start in range(0, sites.n, runtime.site_chunk):
        block = sites.raw[start:start + runtime.site_chunk]
        pairs = cKDTree(block).sparse_distance_matrix(tree, float(model.truncation_radius), output_type="ndarray")
        weights = model.kernel_value(pairs["v"]) * jumps[pairs["j"]]
        out[start:start + block.shape[0]] = np.bincount(pairs["i"], weights=weights, minlength=block.shape[0])
    return out


def simulate_field(model: FieldModel,
                   sites: design.SiteSet,
                   seed: int,
                   rung: int = 0,
                   replication: int = 0,
                   purpose: int = streams.Purpose.FIELD,
                   runtime: config.RuntimeConfig | None = None) -> np.ndarray:
    """Simulates e at every site.

    The driver is discretized over the sampling region enlarged by the
    truncation radius on every side, so sites near the boundary see the
    same kernel mass as interior sites.

    Args:
        model: The field model.
        sites: Nonempty sites, in raw region units.
        seed: The 64-bit seed.
        rung: Study rung, selects the stream.
        replication: Study replication, selects the stream.
        purpose: Stream purpose, fields of covariates use their own.
        runtime: Numerical parameters, read from runtimeconfig.json if None.

    Returns:
        `numpy.ndarray`: The field values, shape (n,).

    Raises:
        `spatial_sieve.ext.exceptions.BudgetExceeded`: If the discretized
            driver exceeds the configured cell budget.
    """
    if sites.n < 1:
        raise exceptions.EmptyInput("Cannot simulate a field at zero sites")
    runtime = runtime or config.RuntimeConfig()
    rng = streams.generator(seed, purpose, rung, replication)
    if isinstance(model.driver, GaussianDriver):
        values = _gaussian_field(model, sites, rng, runtime)
    else:
        values = _poisson_field(model, sites, rng, runtime)
    return values * _field_scale(model, sites.d, runtime)


def _surface(fn: SurfaceFn, points: np.ndarray) -> np.ndarray:
    if callable(fn):
        return np.broadcast_to(np.asarray(fn(points), dtype=np.float64), (points.shape[0],)).copy()
    return np.full(points.shape[0], float(fn))


def _joint_surface(fn: CovariateFn, z: np.ndarray, x: np.ndarray) -> np.ndarray:
    if callable(fn):
        return np.broadcast_to(np.asarray(fn(z, x), dtype=np.float64), (z.shape[0],)).copy()
    return np.full(z.shape[0], float(fn))


def simulate_trend_data(m0: SurfaceFn,
                        eta: SurfaceFn,
                        sigma_eps: SurfaceFn,
                        model: FieldModel,
                        sites: design.SiteSet,
                        seed: int,
                        rung: int = 0,
                        replication: int = 0,
                        runtime: config.RuntimeConfig | None = None) -> np.ndarray:
    """Synthesizes Y_i = m0(z_i) + eta(z_i) e(S_i) + sigma_eps(z_i) eps_i.

    Here z_i is the rescaled site and eps_i is i.i.d. standard normal.
    The field and the noise use separate streams split from `seed`.

    Args:
        m0: Trend on the cube, a callable on (m, d) arrays or a constant.
        eta: Field scale, strictly positive on the cube.
        sigma_eps: Noise scale, strictly positive on the cube.
        model: The field model.
        sites: The sites.
        seed: The 64-bit seed.
        rung: Study rung, selects the streams.
        replication: Study replication, selects the streams.
        runtime: Numerical parameters.

    Returns:
        `numpy.ndarray`: The responses, shape (n,).

    Raises:
        `spatial_sieve.ext.exceptions.InvalidParameters`: If eta or
            sigma_eps is not strictly positive at some site.
    """
    z = sites.scaled
    eta_v = _surface(eta, z)
    sigma_v = _surface(sigma_eps, z)
    if np.any(~(eta_v > 0)):
        raise exceptions.InvalidParameters("eta must be strictly positive on the cube")
    if np.any(~(sigma_v > 0)):
        raise exceptions.InvalidParameters("sigma_eps must be strictly positive on the cube")
    field = simulate_field(model, sites, seed, rung, replication, runtime=runtime)
    noise = streams.generator(seed, streams.Purpose.NOISE, rung, replication).standard_normal(sites.n)
    return _surface(m0, z) + eta_v * field + sigma_v * noise


def simulate_covariate_data(m0: CovariateFn,
                            h_var: CovariateFn,
                            x_models: Sequence[FieldModel],
                            sites: design.SiteSet,
                            seed: int,
                            rung: int = 0,
                            replication: int = 0,
                            runtime: config.RuntimeConfig | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Synthesizes covariates and responses of the covariate model.

    Each covariate X_j is an independent field on its own stream;
    Y_i = m0(z_i, X(S_i)) + h(z_i, X(S_i)) eps_i with eps i.i.d. standard
    normal and independent of X and the sites.

    Args:
        m0: Regression function of (z, x), (m, d) and (m, p) arrays.
        h_var: Conditional scale, strictly positive.
        x_models: One field model per covariate, p >= 1.
        sites: The sites.
        seed: The 64-bit seed.
        rung: Study rung, selects the streams.
        replication: Study replication, selects the streams.
        runtime: Numerical parameters.

    Returns:
        tuple: ``(y, x)`` with shapes (n,) and (n, p).
    """
    if len(x_models) < 1:
        raise exceptions.InvalidParameters("The covariate model needs at least one covariate field")
    runtime = runtime or config.RuntimeConfig()
    nested = streams.child_seed(seed, streams.Purpose.COVARIATES, rung, replication)
    x = np.column_stack([
        simulate_field(x_model, sites, nested, replication=j, purpose=streams.Purpose.COVARIATES, runtime=runtime)
        for j, x_model in enumerate(x_models)
    ])
    z = sites.scaled
    scale = _joint_surface(h_var, z, x)
    if np.any(~(scale > 0)):
        raise exceptions.InvalidParameters("h must be strictly positive")
    noise = streams.generator(seed, streams.Purpose.NOISE, rung, replication).standard_normal(sites.n)
    return _joint_surface(m0, z, x) + scale * noise, x
