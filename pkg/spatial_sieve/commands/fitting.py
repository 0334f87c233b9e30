"""Fitting, prediction and inference commands.

``fit`` reads a dataset, fits the trend model (or the covariate model when
the dataset has x columns) and writes a fit artifact plus residuals.
``predict`` evaluates a fit artifact on a grid. ``infer`` refits from the
artifact and its data and writes estimate, standard error and interval
surfaces. Grids are row-major and written in raw user coordinates.

Typical usage example:
    $ spatial-sieve fit --data sites.csv --region 102,74 --out fit.json
    $ spatial-sieve infer --fit fit.json --data sites.csv --grid 100,74 --out surface.csv
"""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import argparse
import json
import logging
import pathlib
import sys
from typing import Any

import numpy as np

from spatial_sieve import app
from spatial_sieve.database import artifacts
from spatial_sieve.ext import checks, exceptions, parsing
from spatial_sieve.stats import basis as sieve
from spatial_sieve.stats import design, estimator, inference

_PROBE_POINTS = 4096


def _grid_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--grid", help="Grid points per dimension, one value or one per dimension (e.g. 100,74)")
    parser.add_argument("--out-format", choices=("csv", "json"), help="Surface file format")


def _configure_fit(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", required=True, help="Dataset CSV with columns s1..sd, y[, x1..xp]")
    parser.add_argument("--out", required=True, help="Fit artifact to write (JSON)")
    parser.add_argument("--residuals", help="Residual CSV, <out>.residuals.csv by default")
    parser.add_argument("--degree", type=int, help="Spline degree in every dimension")
    size = parser.add_mutually_exclusive_group()
    size.add_argument("--J", dest="J", type=int, help="Requested sieve dimension, split near-equally")
    size.add_argument("--knots-per-dim", help="Interior knot count, one value or one per dimension")
    ridge = parser.add_mutually_exclusive_group()
    ridge.add_argument("--ridge", type=float, help="Absolute ridge penalty")
    ridge.add_argument("--ridge-coefficient", type=float, help="Ridge penalty is this over n")
    region = parser.add_mutually_exclusive_group(required=True)
    region.add_argument("--region", help="Region scales A_j, e.g. 102,74")
    region.add_argument("--infer-region", action="store_true", help="Infer the region from the sites")
    parser.add_argument("--offset", help="Region center with --region, origin by default")
    parser.add_argument("--margin", type=float, help="Margin fraction of --infer-region")
    parser.add_argument("--covariates", type=int, help="Expected number of covariate columns")
    parser.add_argument("--weight-region", help="Weight region D in standardized units, lo:hi per covariate")
    parser.add_argument("--weight-kind",
                        choices=[k.value for k in estimator.WeightKind],
                        default=estimator.WeightKind.INDICATOR.value,
                        help="Covariate weight function inside D")
    parser.add_argument("--weight-exponent", type=float, default=1.0, help="Exponent of smooth weight functions")


def _configure_predict(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--fit", required=True, help="Fit artifact (JSON)")
    parser.add_argument("--out", required=True, help="Surface file to write")
    _grid_flag(parser)


def _configure_infer(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--fit", required=True, help="Fit artifact (JSON)")
    parser.add_argument("--data", required=True, help="The dataset the fit was computed from")
    parser.add_argument("--out", required=True, help="Surface file to write")
    parser.add_argument("--level", type=float, help="Confidence level")
    bandwidth = parser.add_mutually_exclusive_group()
    bandwidth.add_argument("--bandwidth-frac", type=float, help="HAC bandwidths as fractions of A_j")
    bandwidth.add_argument("--bandwidths", help="HAC bandwidths in region units, one per dimension")
    _grid_flag(parser)


def _sites(app_instance: app.SieveApp, args: argparse.Namespace, raw: np.ndarray) -> design.SiteSet:
    if args.region is not None:
        scales = parsing.floats(args.region, "region")
        offset = parsing.floats(args.offset, "offset")
        if len(scales) != raw.shape[1] or (offset is not None and len(offset) != raw.shape[1]):
            raise exceptions.InvalidParameters(f"--region and --offset need {raw.shape[1]} values")
        return design.rescale_sites(raw, scales, offset)
    margin = args.margin if args.margin is not None else app_instance.stat_confg.getitem("margin", 0.05)
    return design.sites_from_raw(raw, margin_fraction=margin)


def _basis(app_instance: app.SieveApp, args: argparse.Namespace, dims: int, n: int) -> sieve.TensorBasis:
    degree = args.degree if args.degree is not None else int(app_instance.stat_confg.getitem("degree", 3))
    if degree < 1:
        raise exceptions.InvalidParameters(f"--degree must be >= 1, got {degree}")
    if args.knots_per_dim is not None:
        counts = parsing.ints(args.knots_per_dim, "knots-per-dim")
        counts = counts * dims if len(counts) == 1 else counts
        if len(counts) != dims:
            raise exceptions.InvalidParameters(f"--knots-per-dim needs 1 or {dims} values")
        return sieve.tensor_basis([degree] * dims, counts)
    total = args.J if args.J is not None else int(app_instance.stat_confg.getitem("J", 900))
    if total < 1:
        raise exceptions.InvalidParameters(f"--J must be >= 1, got {total}")
    if args.J is None and total > n:
        logging.info("Default J=%s exceeds n=%s, the ridge penalty keeps the fit well posed.", total, n)
    return sieve.basis_for_dimension(total, dims, degree)


def _probe_grid(fit: estimator.RidgeFit) -> np.ndarray:
    per_dim = max(2, int(round(_PROBE_POINTS**(1.0 / fit.basis.d))))
    return domain_grid(fit, [per_dim] * fit.basis.d)


def domain_grid(fit: estimator.RidgeFit, resolution: list[int]) -> np.ndarray:
    """Row-major grid over the fit's domain, cube times weight region."""
    d = fit.basis.d - fit.p
    if len(resolution) == 1:
        resolution = resolution * fit.basis.d
    if len(resolution) != fit.basis.d:
        raise exceptions.InvalidParameters(f"--grid needs 1 or {fit.basis.d} values, got {len(resolution)}")
    if any(k < 2 for k in resolution):
        raise exceptions.InvalidParameters(f"Grid resolution must be >= 2 per dimension, got {resolution}")
    axes = [np.linspace(-0.5, 0.5, k) for k in resolution[:d]]
    if fit.p:
        axes += [np.linspace(lo, hi, k) for (lo, hi), k in zip(fit.weight_region, resolution[d:])]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def raw_coordinates(spec: dict[str, Any], fit: estimator.RidgeFit, points: np.ndarray) -> tuple[np.ndarray, list[str]]:
    """Maps domain points back to user units, with column names."""
    if "scales" not in spec:
        raise exceptions.ArtifactError("The fit artifact records no region scales")
    scales = np.asarray(spec["scales"], dtype=np.float64)
    offset = np.asarray(spec.get("offset", np.zeros_like(scales)), dtype=np.float64)
    d = scales.shape[0]
    coords = [points[:, :d] * scales + offset]
    names = [f"s{k + 1}" for k in range(d)]
    if fit.p:
        lo, hi = fit.covariate_map
        coords.append((points[:, d:] + 0.5) * (hi - lo) + lo)
        names += [f"x{k + 1}" for k in range(fit.p)]
    return np.column_stack(coords), names


def _resolution(app_instance: app.SieveApp, args: argparse.Namespace) -> list[int]:
    if args.grid is not None:
        return parsing.ints(args.grid, "grid")
    return [int(app_instance.stat_confg.getitem("grid", 100))]


def _out_format(app_instance: app.SieveApp, args: argparse.Namespace) -> str:
    out_format = args.out_format or app_instance.stat_confg.getitem("out_format", "csv")
    if out_format not in ("csv", "json"):
        raise exceptions.InvalidParameters(f"Unknown output format {out_format!r}")
    return out_format


def _flags(args: argparse.Namespace) -> dict[str, Any]:
    return {k: v for k, v in vars(args).items() if k != "command"}


def cmd_fit(app_instance: app.SieveApp, args: argparse.Namespace) -> None:
    """Fits a dataset and writes the fit artifact and residuals."""
    if args.margin is not None:
        checks.non_negative(args.margin, "margin")
    weight_region = parsing.bounds(args.weight_region, "weight-region")
    data = artifacts.read_dataset(args.data, p=args.covariates)
    sites = _sites(app_instance, args, data.sites)
    p = data.x.shape[1]
    basis = _basis(app_instance, args, sites.d + p, sites.n)
    coefficient = args.ridge_coefficient if args.ridge_coefficient is not None else float(
        app_instance.stat_confg.getitem("ridge_coefficient", 0.5))
    penalty = args.ridge if args.ridge is not None else coefficient / sites.n
    if p:
        fit = estimator.fit_covariate(sites,
                                      data.x,
                                      data.y,
                                      basis,
                                      weight_region=weight_region,
                                      penalty=penalty,
                                      weight_kind=args.weight_kind,
                                      weight_exponent=args.weight_exponent,
                                      runtime=app_instance.runtime)
    else:
        if weight_region is not None:
            raise exceptions.InvalidParameters("--weight-region needs covariate columns in the data")
        fit = estimator.fit_trend(sites, data.y, basis, penalty, app_instance.runtime)
    resid = estimator.residuals(fit, data.y)
    diagnostics = estimator.gram_diagnostics(fit, _probe_grid(fit))
    summary = {
        "model_kind": fit.model_kind.value,
        "n": fit.n,
        "d": sites.d,
        "p": p,
        "J": basis.total_dimension,
        "penalty": penalty,
        "condition": diagnostics.condition,
        "penalized_condition": diagnostics.penalized_condition,
        "min_eig": diagnostics.min_eig,
        "max_eig": diagnostics.max_eig,
        "zeta_hat": diagnostics.zeta_hat,
        "residual_norm": float(np.linalg.norm(resid)),
    }
    resolved = _flags(args) | {
        "degree": basis.per_dim[0].degree,
        "penalty": penalty,
        "scales": sites.scales.tolist(),
        "offset": sites.offset.tolist(),
    }
    meta = artifacts.metadata("fit", resolved) | {"summary": summary}
    residual_path = args.residuals or str(pathlib.Path(args.out).with_suffix("")) + ".residuals.csv"
    fitted = data.y - resid
    columns = {"y": data.y, "fitted": fitted, "residual": resid}
    names = [f"s{k + 1}" for k in range(sites.d)] + [f"x{k + 1}" for k in range(p)]
    artifacts.write_surface(residual_path, np.column_stack([data.sites, data.x]), columns, "csv", names)
    artifacts.write_fit_artifact(args.out, fit, meta)
    logging.info("Fitted J=%s on n=%s sites, condition %.3g.", basis.total_dimension, fit.n, diagnostics.condition)
    sys.stdout.write(json.dumps(summary, default=str) + "\n")


def cmd_predict(app_instance: app.SieveApp, args: argparse.Namespace) -> None:
    """Evaluates a fit artifact on a grid."""
    out_format = _out_format(app_instance, args)
    resolution = _resolution(app_instance, args)
    artifact = artifacts.read_fit_artifact(args.fit)
    fit = estimator.restore_fit(artifact["fit"])
    points = domain_grid(fit, resolution)
    coords, names = raw_coordinates(artifact["fit"], fit, points)
    artifacts.write_surface(args.out, coords, {"estimate": estimator.predict(fit, points)}, out_format, names)
    resolved = _flags(args) | {"grid": resolution, "out_format": out_format}
    artifacts.write_metadata(args.out, artifacts.metadata("predict", resolved) | {"fit": artifact.get("metadata")})


def cmd_infer(app_instance: app.SieveApp, args: argparse.Namespace) -> None:
    """Writes estimate, standard error and interval surfaces."""
    out_format = _out_format(app_instance, args)
    resolution = _resolution(app_instance, args)
    level = checks.probability(
        args.level if args.level is not None else float(app_instance.stat_confg.getitem("level", 0.95)), "level")
    explicit = parsing.floats(args.bandwidths, "bandwidths")
    artifact = artifacts.read_fit_artifact(args.fit)
    spec = artifact["fit"]
    if "scales" not in spec:
        raise exceptions.ArtifactError("The fit artifact records no region scales")
    scales = np.asarray(spec["scales"], dtype=np.float64)
    p = len(spec["covariate_map"]["lo"]) if spec.get("model_kind") == "covariate" else 0
    data = artifacts.read_dataset(args.data, d=scales.shape[0], p=p)
    sites = design.rescale_sites(data.sites, scales, spec.get("offset"))
    fit = estimator.restore_fit(spec, sites, data.y, data.x, runtime=app_instance.runtime)
    hac = None
    if fit.model_kind is estimator.ModelKind.TREND:
        if explicit is not None:
            hac = inference.HacConfig(tuple(explicit))
        else:
            fraction = args.bandwidth_frac if args.bandwidth_frac is not None else float(
                app_instance.stat_confg.getitem("bandwidth_frac", 0.1))
            hac = inference.HacConfig.from_fraction(scales, fraction)
        var = inference.hac_long_run_matrix(fit, data.y, hac, app_instance.runtime)
    else:
        if explicit is not None or args.bandwidth_frac is not None:
            raise exceptions.InvalidParameters("HAC bandwidths apply to trend fits only, covariate fits use a sandwich")
        var = inference.covariate_variance(fit, data.y)
    points = domain_grid(fit, resolution)
    band = inference.confidence_band(fit, var, points, level, app_instance.runtime)
    coords, names = raw_coordinates(spec, fit, points)
    artifacts.write_surface(args.out, coords, {
        "estimate": band.estimate,
        "se": band.se,
        "lower": band.lower,
        "upper": band.upper
    }, out_format, names)
    resolved = _flags(args) | {"grid": resolution, "out_format": out_format, "level": level}
    meta = artifacts.metadata("infer", resolved) | {
        "level": level,
        "bandwidths": list(hac.bandwidths) if hac else None,
        "kernel": hac.kernel.value if hac else None,
        "penalty": fit.penalty,
        "J": fit.basis.total_dimension,
        "clamped": band.clamped,
        "clamped_fraction": band.clamped / max(1, points.shape[0]),
        "pair_count": var.pair_count,
    }
    artifacts.write_metadata(args.out, meta)
    if band.clamped:
        logging.warning("%s of %s grid variances were clamped to zero.", band.clamped, points.shape[0])


def setup(app_instance: app.SieveApp) -> None:
    """Registers fit, predict and infer."""
    _configure_fit(app_instance.add_command("fit", "Fit the series ridge estimator to a dataset"))
    app_instance.set_handler("fit", cmd_fit)
    _configure_predict(app_instance.add_command("predict", "Evaluate a fit artifact on a grid"))
    app_instance.set_handler("predict", cmd_predict)
    _configure_infer(app_instance.add_command("infer", "Pointwise confidence intervals on a grid"))
    app_instance.set_handler("infer", cmd_infer)
