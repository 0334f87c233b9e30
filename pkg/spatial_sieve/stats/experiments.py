"""Monte Carlo studies of convergence rates and interval coverage.

A study walks a ladder of increasing sampling regions. On every rung and
for every replication it draws sites, simulates data, fits the sieve
estimator and records grid errors, and for coverage studies, whether the
pointwise intervals at the target points cover the truth. Replications
are independent: each one draws from its own Philox streams keyed by
(purpose, rung, replication), so results do not depend on the number of
worker processes.

Typical usage example:
    ```py
    from spatial_sieve.stats import experiments
    config = experiments.rate_config_from_dict({"seed": 3, "areas": [200, 400, 800]})
    result = experiments.run_rate_study(config)
    print(result.to_report()["slopes"])
    ```
"""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import dataclasses
import enum
import logging
import math
import multiprocessing
from typing import Any, Sequence

import numpy as np
import pandas as pd
from scipy import integrate, stats

from spatial_sieve.database import config as cfg
from spatial_sieve.database import const
from spatial_sieve.ext import checks, exceptions, streams
from spatial_sieve.stats import basis as sieve
from spatial_sieve.stats import design, estimator, fields, inference, truths

MIN_REPLICATIONS = 50
"""Below this the binomial coverage band is too wide to be useful."""
ERROR_FLOOR = 1e-12
"""Rung errors below this make the log-log slope meaningless."""
DEFAULT_J_SCALE = 4.0
"""Keeps J growing rung to rung on desk-scale ladders instead of sitting at the cubic minimum."""


class ErrorNorm(str, enum.Enum):
    """Which rate the J rule targets."""

    SUP = "sup"
    L2 = "l2"


@dataclasses.dataclass(frozen=True)
class Rung:
    """One step of the design ladder.

    Attributes:
        scales: Region scales A_{n,j}.
        n: Sample size.
        j: Sieve dimension.
    """

    scales: tuple[float, ...]
    n: int
    j: int

    @property
    def area(self) -> float:
        """A_n."""
        return math.prod(self.scales)


@dataclasses.dataclass(frozen=True)
class PenaltyRule:
    """Ridge penalty coefficient / n."""

    coefficient: float = 0.5

    def __call__(self, n: int) -> float:
        return self.coefficient / n


@dataclasses.dataclass(frozen=True)
class CovariateScenario:
    """Data-generating process of the covariate model.

    Attributes:
        truth: Name of the regression function in `truths`.
        truth_params: Its parameters.
        h: Constant conditional scale of the errors.
        x_models: One field model per covariate.
        covariate_range: Fixed (lo, hi) of the standardization.
        weight_region: (p, 2) bounds of D, standardized units.
    """

    truth: str = "sine_plus_square"
    truth_params: dict[str, Any] = dataclasses.field(default_factory=dict)
    h: float = 1.0
    x_models: tuple[fields.FieldModel, ...] = ()
    covariate_range: tuple[float, float] = (-3.0, 3.0)
    weight_region: tuple[tuple[float, float], ...] = ((-1 / 6, 1 / 6),)

    @property
    def p(self) -> int:
        """Number of covariates."""
        return len(self.x_models)

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready description."""
        return {
            "truth": self.truth,
            "truth_params": dict(self.truth_params),
            "h": self.h,
            "fields": [m.to_dict() for m in self.x_models],
            "range": list(self.covariate_range),
            "weight_region": [list(r) for r in self.weight_region],
        }


@dataclasses.dataclass(frozen=True)
class RateStudyConfig:
    """A convergence-rate study.

    Attributes:
        d: Spatial dimension.
        smoothness: Smoothness r of the truth the J rule assumes.
        mode: Which J rule the ladder was built with.
        ladder: Rungs in strictly increasing A_n.
        replications: Replications per rung.
        seed: The 64-bit study seed.
        truth: Name of the trend in `truths`.
        truth_params: Its parameters.
        field: The field model of the trend model.
        eta: Constant field scale.
        sigma_eps: Constant noise scale.
        penalty: The ridge penalty rule.
        degree: Spline degree.
        density: Site density on the cube.
        grid_resolution: Error grid has resolution**min(dims, 2) points.
        covariates: Covariate-model scenario, trend model when None.
    """

    d: int
    smoothness: float
    mode: ErrorNorm
    ladder: tuple[Rung, ...]
    replications: int
    seed: int
    truth: str = "sine"
    truth_params: dict[str, Any] = dataclasses.field(default_factory=dict)
    field: fields.FieldModel = fields.FieldModel(fields.ExponentialKernel(1.0, 1.0), fields.GaussianDriver(1.0))
    eta: float = 1.0
    sigma_eps: float = 1.0
    penalty: PenaltyRule = PenaltyRule()
    degree: int = 3
    density: design.SiteDensity = design.SiteDensity()
    grid_resolution: int = 200
    covariates: CovariateScenario | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", ErrorNorm(self.mode))
        if not self.ladder:
            raise exceptions.InvalidParameters("A study needs at least one rung")
        areas = [rung.area for rung in self.ladder]
        if any(b <= a for a, b in zip(areas, areas[1:])):
            raise exceptions.InvalidParameters(f"Ladder areas must increase strictly, got {areas}")
        if any(len(rung.scales) != self.d for rung in self.ladder):
            raise exceptions.InvalidParameters(f"Every rung needs {self.d} region scales")
        if self.replications < 1:
            raise exceptions.InvalidParameters(f"Need at least one replication, got {self.replications}")
        checks.positive(self.smoothness, "smoothness")
        checks.positive(self.eta, "eta")
        checks.positive(self.sigma_eps, "sigma_eps")
        if self.grid_resolution < 2:
            raise exceptions.InvalidParameters("The error grid needs at least 2 points per dimension")

    @property
    def dims(self) -> int:
        """Dimension of the fitted function, d plus covariates."""
        return self.d + (self.covariates.p if self.covariates else 0)

    def to_dict(self) -> dict[str, Any]:
        """Full resolved configuration, enough to rerun the study."""
        return {
            "d": self.d,
            "smoothness": self.smoothness,
            "mode": self.mode.value,
            "ladder": [{
                "scales": list(r.scales),
                "n": r.n,
                "j": r.j
            } for r in self.ladder],
            "replications": self.replications,
            "seed": self.seed,
            "truth": self.truth,
            "truth_params": dict(self.truth_params),
            "field": self.field.to_dict(),
            "eta": self.eta,
            "sigma_eps": self.sigma_eps,
            "ridge_coefficient": self.penalty.coefficient,
            "degree": self.degree,
            "density": self.density.to_dict(),
            "grid_resolution": self.grid_resolution,
            "covariates": self.covariates.to_dict() if self.covariates else None,
        }


@dataclasses.dataclass(frozen=True)
class CoverageStudyConfig(RateStudyConfig):
    """A coverage study, a rate study plus intervals at target points.

    Attributes:
        targets: Cube points, or (z, x) points with x in raw units.
        level: Nominal coverage.
        bandwidth_fraction: HAC bandwidths as fractions of A_{n,j}.
    """

    targets: tuple[tuple[float, ...], ...] = ((0.0,),)
    level: float = 0.95
    bandwidth_fraction: float = 0.1

    def __post_init__(self) -> None:
        super().__post_init__()
        checks.probability(self.level, "level")
        checks.positive(self.bandwidth_fraction, "bandwidth fraction")
        if not self.targets or any(len(t) != self.dims for t in self.targets):
            raise exceptions.InvalidParameters(f"Every target point needs {self.dims} coordinates")

    def to_dict(self) -> dict[str, Any]:
        spec = super().to_dict()
        spec.update(targets=[list(t) for t in self.targets],
                    level=self.level,
                    bandwidth_fraction=self.bandwidth_fraction)
        return spec


@dataclasses.dataclass(frozen=True, eq=False)
class StudyResult:
    """Aggregated study output.

    Attributes:
        kind: "rate" or "coverage".
        config: The study configuration.
        replications: One row per (rung, replication).
        rungs: One row per rung with mean errors and Monte Carlo errors.
        coverage: One row per (rung, target) for coverage studies.
        slopes: Log-log slope and its standard error per error norm.
        warnings: Validation warnings raised while running.
    """

    kind: str
    config: RateStudyConfig
    replications: pd.DataFrame
    rungs: pd.DataFrame
    coverage: pd.DataFrame | None
    slopes: dict[str, dict[str, float] | None]
    warnings: tuple[str, ...] = ()

    def to_report(self) -> dict[str, Any]:
        """JSON-ready report with full provenance."""
        report: dict[str, Any] = {
            "kind": self.kind,
            "version": const.VERSION,
            "rng": streams.RNG_NAME,
            "seed": self.config.seed,
            "config": self.config.to_dict(),
            "rungs": self.rungs.to_dict(orient="records"),
            "slopes": self.slopes,
            "warnings": list(self.warnings),
        }
        if self.coverage is not None:
            report["coverage"] = self.coverage.to_dict(orient="records")
        return report


def select_J(area: float,
             n: int,
             smoothness: float,
             d: int,
             mode: ErrorNorm | str = ErrorNorm.L2,
             degree: int = 3,
             j_scale: float = DEFAULT_J_SCALE) -> int:
    """Sieve dimension from the rate-optimal rule.

    J ~ j_scale * (A_n / log n)**(d / (2r + d)) for sup-norm rates and
    j_scale * A_n**(d / (2r + d)) for L2 rates, rounded to the nearest
    tensor dimension with near-equal per-dimension sizes.

    Args:
        area: A_n, > 1.
        n: Sample size, > 1 in sup mode.
        smoothness: r > 0.
        d: Dimension.
        mode: Which rule.
        degree: Spline degree, sets the per-dimension minimum.
        j_scale: Proportionality constant of the rule.

    Returns:
        int: J.
    """
    if not area > 1:
        raise exceptions.InvalidParameters(f"A_n must exceed 1, got {area!r}")
    checks.positive(smoothness, "smoothness")
    checks.positive(j_scale, "J scale")
    mode = ErrorNorm(mode)
    exponent = d / (2 * smoothness + d)
    if mode is ErrorNorm.SUP:
        if n < 2:
            raise exceptions.InvalidParameters("The sup-norm rule needs n >= 2")
        rule = j_scale * (area / math.log(n))**exponent
    else:
        rule = j_scale * area**exponent
    target = max(1, round(rule))
    minimum = (degree + 1)**d
    if target < minimum:
        logging.warning("J rule gives %s, below the minimal spline dimension %s, clamping.", target, minimum)
        return minimum
    base = max(degree + 1, int(math.floor(target**(1.0 / d))))
    candidates = sorted({k**(d - m) * (k + 1)**m for k in (base - 1, base, base + 1) if k >= degree + 1
                         for m in range(d)} | {minimum})
    return min(candidates, key=lambda c: (abs(c - target), c))


def build_ladder(areas: Sequence[float],
                 d: int,
                 smoothness: float,
                 mode: ErrorNorm | str = ErrorNorm.L2,
                 kappa: float = 1.0,
                 degree: int = 3,
                 j_scale: float = DEFAULT_J_SCALE,
                 p: int = 0) -> tuple[Rung, ...]:
    """Square-region ladder with n = kappa * A_n.

    Covariate ladders (p > 0) take J from the L2 rule in n over d + p
    dimensions.
    """
    checks.positive(kappa, "kappa")
    rungs = []
    for area in areas:
        n = max(1, round(kappa * area))
        if p:
            j = select_J(n, n, smoothness, d + p, ErrorNorm.L2, degree, j_scale)
        else:
            j = select_J(area, n, smoothness, d, mode, degree, j_scale)
        rungs.append(Rung(tuple([float(area)**(1.0 / d)] * d), n, j))
    return tuple(rungs)


def _grid(config: RateStudyConfig) -> tuple[np.ndarray, list[np.ndarray]]:
    dims = config.dims
    per_dim = max(2, round(config.grid_resolution**(min(dims, 2) / dims)))
    axes = [np.linspace(-0.5, 0.5, per_dim)] * dims
    if config.covariates:
        axes = axes[:config.d] + [np.linspace(lo, hi, per_dim) for lo, hi in config.covariates.weight_region]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh]), axes


def _l2_error(diff: np.ndarray, weight: np.ndarray, axes: list[np.ndarray]) -> float:
    shape = tuple(a.size for a in axes)
    num = (diff**2 * weight).reshape(shape)
    den = weight.reshape(shape)
    for axis in reversed(axes):
        num = integrate.trapezoid(num, axis, axis=-1)
        den = integrate.trapezoid(den, axis, axis=-1)
    return float(math.sqrt(num / den))


def _raw_covariates(scenario: CovariateScenario, x_std: np.ndarray) -> np.ndarray:
    lo, hi = scenario.covariate_range
    return (x_std + 0.5) * (hi - lo) + lo


def _std_covariates(scenario: CovariateScenario, x_raw: np.ndarray) -> np.ndarray:
    lo, hi = scenario.covariate_range
    return (x_raw - lo) / (hi - lo) - 0.5


def _replicate(task: tuple[RateStudyConfig, int, int, cfg.RuntimeConfig]) -> dict[str, Any]:
    config, rung_index, replication, runtime = task
    try:
        return _replicate_unchecked(config, rung_index, replication, runtime)
    except Exception as exc:  # pylint: disable=broad-exception-caught
        # Custom exception signatures do not survive pickling, ship the text instead.
        return {"failed": f"{type(exc).__name__}: {exc}", "rung": rung_index, "replication": replication}


def _replicate_unchecked(config: RateStudyConfig, rung_index: int, replication: int,
                         runtime: cfg.RuntimeConfig) -> dict[str, Any]:
    rung = config.ladder[rung_index]
    plan = design.SamplingDesign(rung.scales, config.density)
    sites = design.draw_sites(plan, rung.n, config.seed, rung_index, replication)
    grid, axes = _grid(config)
    scenario = config.covariates
    penalty = config.penalty(rung.n)
    if scenario is None:
        m0 = truths.trend(config.truth, **config.truth_params)
        y = fields.simulate_trend_data(m0, config.eta, config.sigma_eps, config.field, sites, config.seed, rung_index,
                                       replication, runtime)
        fit = estimator.fit_trend(sites, y, sieve.basis_for_dimension(rung.j, config.d, config.degree), penalty,
                                  runtime)
        truth_grid = m0(grid)
    else:
        m0 = truths.covariate_truth(scenario.truth, **scenario.truth_params)
        y, x = fields.simulate_covariate_data(m0, scenario.h, scenario.x_models, sites, config.seed, rung_index,
                                              replication, runtime)
        fit = estimator.fit_covariate(sites,
                                      x,
                                      y,
                                      sieve.basis_for_dimension(rung.j, config.dims, config.degree),
                                      weight_region=np.asarray(scenario.weight_region),
                                      penalty=penalty,
                                      covariate_range=([scenario.covariate_range[0]] * scenario.p,
                                                       [scenario.covariate_range[1]] * scenario.p),
                                      runtime=runtime)
        truth_grid = m0(grid[:, :config.d], _raw_covariates(scenario, grid[:, config.d:]))
    diff = estimator.predict(fit, grid) - truth_grid
    record: dict[str, Any] = {
        "rung": rung_index,
        "replication": replication,
        "area": rung.area,
        "n": rung.n,
        "j": fit.basis.total_dimension,
        "sup_error": float(np.max(np.abs(diff))),
        "l2_error": _l2_error(diff, config.density.pdf(grid[:, :config.d]), axes),
    }
    if isinstance(config, CoverageStudyConfig):
        targets = np.asarray(config.targets, dtype=np.float64)
        if scenario is None:
            var = inference.hac_long_run_matrix(
                fit, y, inference.HacConfig.from_fraction(rung.scales, config.bandwidth_fraction), runtime)
            query = targets
            truth_t = m0(targets)
        else:
            var = inference.covariate_variance(fit, y)
            query = np.column_stack([targets[:, :config.d], _std_covariates(scenario, targets[:, config.d:])])
            truth_t = m0(targets[:, :config.d], targets[:, config.d:])
        band = inference.confidence_band(fit, var, query, config.level, runtime)
        half = (band.upper - band.lower) / 2
        record["covered"] = (np.abs(band.estimate - truth_t) <= half + runtime.coverage_floor).tolist()
        record["width"] = (band.upper - band.lower).tolist()
        record["clamped"] = band.clamped
    return record


def _mc_se(values: pd.Series) -> float:
    return float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else float("nan")


def _slope(rungs: pd.DataFrame, column: str) -> dict[str, float] | None:
    means = rungs[column].to_numpy()
    if rungs.shape[0] < 2 or np.any(means < ERROR_FLOOR):
        return None
    fit = stats.linregress(np.log(rungs["area"].to_numpy()), np.log(means))
    return {"slope": float(fit.slope), "stderr": float(fit.stderr), "intercept": float(fit.intercept)}


def _run(config: RateStudyConfig, kind: str, runtime: cfg.RuntimeConfig | None, workers: int | None) -> StudyResult:
    runtime = runtime or cfg.RuntimeConfig()
    workers = workers or runtime.workers
    notes: list[str] = []
    if config.replications < MIN_REPLICATIONS:
        note = (f"{config.replications} replications is below {MIN_REPLICATIONS}, "
                "Monte Carlo bands will be wide")
        logging.warning(note)
        notes.append(note)
    tasks = [(config, r, k, runtime) for r in range(len(config.ladder)) for k in range(config.replications)]
    logging.info("Running a %s study: %s rungs x %s replications on %s worker(s).", kind, len(config.ladder),
                 config.replications, workers)
    if workers > 1:
        with multiprocessing.Pool(processes=workers) as pool:
            records = pool.map(_replicate, tasks, chunksize=max(1, len(tasks) // (4 * workers)))
    else:
        records = [_replicate(task) for task in tasks]
    for record in records:
        if "failed" in record:
            raise exceptions.StudyError(record["failed"], record["rung"], record["replication"])
    table = pd.DataFrame.from_records(records).sort_values(["rung", "replication"], kind="stable")
    table = table.reset_index(drop=True)
    grouped = table.groupby("rung", sort=True)
    rungs = pd.DataFrame({
        "rung": sorted(table["rung"].unique()),
        "area": grouped["area"].first().to_numpy(),
        "n": grouped["n"].first().to_numpy(),
        "j": grouped["j"].first().to_numpy(),
        "mean_sup_error": grouped["sup_error"].mean().to_numpy(),
        "se_sup_error": grouped["sup_error"].agg(_mc_se).to_numpy(),
        "mean_l2_error": grouped["l2_error"].mean().to_numpy(),
        "se_l2_error": grouped["l2_error"].agg(_mc_se).to_numpy(),
    })
    slopes = {"sup": _slope(rungs, "mean_sup_error"), "l2": _slope(rungs, "mean_l2_error")}
    coverage = None
    if kind == "coverage":
        rows = []
        for rung_index, group in grouped:
            hits = np.asarray(group["covered"].tolist(), dtype=np.float64)
            widths = np.asarray(group["width"].tolist(), dtype=np.float64)
            for t, target in enumerate(config.targets):
                rate = float(hits[:, t].mean())
                rows.append({
                    "rung": int(rung_index),
                    "target": t,
                    "point": list(target),
                    "coverage": rate,
                    "mc_se": math.sqrt(rate * (1 - rate) / hits.shape[0]),
                    "mean_width": float(widths[:, t].mean()),
                })
        coverage = pd.DataFrame.from_records(rows)
        clamped = int(table["clamped"].sum())
        if clamped:
            notes.append(f"{clamped} variance estimate(s) clamped to zero")
    return StudyResult(kind=kind,
                       config=config,
                       replications=table,
                       rungs=rungs,
                       coverage=coverage,
                       slopes=slopes,
                       warnings=tuple(notes))


def run_rate_study(config: RateStudyConfig,
                   runtime: cfg.RuntimeConfig | None = None,
                   workers: int | None = None) -> StudyResult:
    """Runs a convergence-rate study.

    Raises:
        `spatial_sieve.ext.exceptions.StudyError`: If any replication
            fails, naming the rung and replication.
    """
    return _run(config, "rate", runtime, workers)


def run_coverage_study(config: CoverageStudyConfig,
                       runtime: cfg.RuntimeConfig | None = None,
                       workers: int | None = None) -> StudyResult:
    """Runs a coverage study. Boundary target points are allowed."""
    if not isinstance(config, CoverageStudyConfig):
        raise exceptions.InvalidParameters("A coverage study needs target points and a level")
    return _run(config, "coverage", runtime, workers)


def _covariate_scenario(spec: dict[str, Any] | None) -> CovariateScenario | None:
    if not spec:
        return None
    models = tuple(fields.field_model_from_dict(m) for m in spec.get("fields", [{}]))
    region = spec.get("weight_region") or [[-1 / 6, 1 / 6]] * len(models)
    return CovariateScenario(truth=spec.get("truth", "sine_plus_square"),
                             truth_params=dict(spec.get("truth_params", {})),
                             h=float(spec.get("h", 1.0)),
                             x_models=models,
                             covariate_range=tuple(spec.get("range", (-3.0, 3.0))),
                             weight_region=tuple(tuple(r) for r in region))


def _common(spec: dict[str, Any]) -> dict[str, Any]:
    if spec.get("seed") is None:
        raise exceptions.InvalidParameters("Studies need an explicit seed")
    d = int(spec.get("d", 1))
    smoothness = float(spec.get("smoothness", 2.0 if d == 1 else 2.5))
    mode = ErrorNorm(spec.get("mode", "l2"))
    degree = int(spec.get("degree", 3))
    scenario = _covariate_scenario(spec.get("covariates"))
    if spec.get("ladder"):
        ladder = tuple(Rung(tuple(float(a) for a in r["scales"]), int(r["n"]), int(r["j"])) for r in spec["ladder"])
    else:
        ladder = build_ladder(spec.get("areas", [200, 400, 800, 1600, 3200]), d, smoothness, mode,
                              float(spec.get("kappa", 1.0)), degree, float(spec.get("j_scale", DEFAULT_J_SCALE)),
                              scenario.p if scenario else 0)
    density = spec.get("density") or {}
    return {
        "d": d,
        "smoothness": smoothness,
        "mode": mode,
        "ladder": ladder,
        "replications": int(spec.get("replications", 200)),
        "seed": int(spec["seed"]),
        "truth": spec.get("truth", "sine"),
        "truth_params": dict(spec.get("truth_params", {})),
        "field": fields.field_model_from_dict(spec.get("field", {})),
        "eta": float(spec.get("eta", 1.0)),
        "sigma_eps": float(spec.get("sigma_eps", 1.0)),
        "penalty": PenaltyRule(float(spec.get("ridge_coefficient", 0.5))),
        "degree": degree,
        "density": design.SiteDensity(density.get("kind", "uniform"), tuple(density.get("marginals", ()))),
        "grid_resolution": int(spec.get("grid_resolution", 200)),
        "covariates": scenario,
    }


def rate_config_from_dict(spec: dict[str, Any]) -> RateStudyConfig:
    """Builds a rate study from a merged JSON config.

    Ladders come either explicitly (``ladder``: scales, n, j per rung) or
    from ``areas`` with ``kappa``, ``j_scale`` and the J rule of ``mode``.
    """
    return RateStudyConfig(**_common(spec))


def coverage_config_from_dict(spec: dict[str, Any]) -> CoverageStudyConfig:
    """Builds a coverage study from a merged JSON config."""
    common = _common(spec)
    dims = common["d"] + (common["covariates"].p if common["covariates"] else 0)
    targets = spec.get("targets") or [[0.0] * dims]
    return CoverageStudyConfig(**common,
                               targets=tuple(tuple(float(v) for v in t) for t in targets),
                               level=float(spec.get("level", 0.95)),
                               bandwidth_fraction=float(spec.get("bandwidth_fraction", 0.1)))
