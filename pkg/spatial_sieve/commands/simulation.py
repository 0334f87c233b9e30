"""The simulate command.

Draws sites over a sampling region, simulates a Levy-driven field and
writes a dataset CSV in the same schema ``fit`` reads. The metadata
sidecar records the full model so the file can be regenerated from the
seed alone.

Typical usage example:
    $ spatial-sieve simulate --seed 7 --region 40,40 --n 1600 --out sites.csv
    $ spatial-sieve simulate --seed 7 --region 40 --n 800 --covariates 1 --out sites.csv
"""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import argparse
import logging
from typing import Any

from spatial_sieve import app
from spatial_sieve.database import artifacts, config
from spatial_sieve.ext import exceptions, parsing
from spatial_sieve.stats import design, fields, truths


def _configure(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", required=True, help="Dataset CSV to write")
    parser.add_argument("--seed", type=int, required=True, help="64-bit seed, mandatory")
    parser.add_argument("--config", help="JSON model description, flags override its values")
    parser.add_argument("--region", help="Region scales A_j, e.g. 40,40")
    parser.add_argument("--n", type=int, help="Number of sites")
    parser.add_argument("--trend", help=f"Trend of the trend model, one of {truths.TREND_NAMES}")
    parser.add_argument("--eta", type=float, help="Constant field scale")
    parser.add_argument("--sigma-eps", type=float, help="Constant noise scale")
    parser.add_argument("--kernel", choices=("exponential", "carma"), help="Moving-average kernel")
    parser.add_argument("--r0", type=float, help="Exponential kernel amplitude")
    parser.add_argument("--r1", type=float, help="Exponential kernel decay rate")
    parser.add_argument("--lambdas", help="CARMA autoregressive roots, all negative")
    parser.add_argument("--b-zeros", help="Zeros of the CARMA moving-average polynomial")
    parser.add_argument("--driver", choices=("gaussian", "compound_poisson"), help="Random measure")
    parser.add_argument("--sigma0", type=float, help="Gaussian variance rate")
    parser.add_argument("--rate", type=float, help="Compound Poisson intensity")
    parser.add_argument("--jump", choices=[k.value for k in fields.JumpKind], help="Compound Poisson jump law")
    parser.add_argument("--jump-scale", type=float, help="Jump variance (normal) or size (two_point)")
    parser.add_argument("--covariates", type=int, help="Simulate the covariate model with this many covariates")
    parser.add_argument("--h", type=float, help="Constant error scale of the covariate model")


def _field_spec(spec: dict[str, Any], args: argparse.Namespace) -> dict[str, Any]:
    field = dict(spec.get("field", {}))
    kernel = dict(field.get("kernel", {}))
    driver = dict(field.get("driver", {}))
    if args.kernel is not None and args.kernel != kernel.get("kind"):
        kernel = {"kind": args.kernel}
    for key, value in (("r0", args.r0), ("r1", args.r1), ("lambdas", parsing.floats(args.lambdas, "lambdas")),
                       ("b_zeros", parsing.floats(args.b_zeros, "b-zeros"))):
        if value is not None:
            kernel[key] = value
    if args.driver is not None and args.driver != driver.get("kind"):
        driver = {"kind": args.driver}
    for key, value in (("sigma0", args.sigma0), ("rate", args.rate), ("jump", args.jump),
                       ("jump_scale", args.jump_scale)):
        if value is not None:
            driver[key] = value
    field.update(kernel=kernel, driver=driver)
    return field


def resolve(spec: dict[str, Any], args: argparse.Namespace) -> dict[str, Any]:
    """Merges the model file with the flags into a full model description."""
    scales = parsing.floats(args.region, "region") or spec.get("scales")
    if not scales:
        raise exceptions.InvalidParameters("simulate needs --region or scales in --config")
    n = args.n if args.n is not None else spec.get("n")
    if n is None or int(n) < 1:
        raise exceptions.InvalidParameters(f"simulate needs --n >= 1, got {n}")
    density = spec.get("density") or {}
    resolved = {
        "seed": args.seed,
        "scales": [float(a) for a in scales],
        "n": int(n),
        "density": design.SiteDensity(density.get("kind", "uniform"), tuple(density.get("marginals", ()))).to_dict(),
        "field": fields.field_model_from_dict(_field_spec(spec, args)).to_dict(),
    }
    p = args.covariates if args.covariates is not None else int(spec.get("covariates", 0) or 0)
    if p < 0:
        raise exceptions.InvalidParameters(f"--covariates must be >= 0, got {p}")
    if p:
        resolved.update(model="covariate",
                        covariates=p,
                        truth=args.trend or spec.get("truth", "sine_plus_square"),
                        truth_params=dict(spec.get("truth_params", {})),
                        h=args.h if args.h is not None else float(spec.get("h", 1.0)))
    else:
        resolved.update(model="trend",
                        truth=args.trend or spec.get("truth", "sine"),
                        truth_params=dict(spec.get("truth_params", {})),
                        eta=args.eta if args.eta is not None else float(spec.get("eta", 1.0)),
                        sigma_eps=args.sigma_eps if args.sigma_eps is not None else float(spec.get("sigma_eps", 1.0)))
    return resolved


def cmd_simulate(app_instance: app.SieveApp, args: argparse.Namespace) -> None:
    """Simulates a dataset and writes it with a metadata sidecar."""
    resolved = resolve(config.load_study_config(args.config), args)
    density = resolved["density"]
    sampling = design.SamplingDesign(tuple(resolved["scales"]),
                                     design.SiteDensity(density["kind"], tuple(density["marginals"])))
    sites = design.draw_sites(sampling, resolved["n"], args.seed)
    model = fields.field_model_from_dict(resolved["field"])
    if resolved["model"] == "covariate":
        m0 = truths.covariate_truth(resolved["truth"], **resolved["truth_params"])
        y, x = fields.simulate_covariate_data(m0,
                                              resolved["h"], [model] * resolved["covariates"],
                                              sites,
                                              args.seed,
                                              runtime=app_instance.runtime)
    else:
        m0 = truths.trend(resolved["truth"], **resolved["truth_params"])
        y = fields.simulate_trend_data(m0,
                                       resolved["eta"],
                                       resolved["sigma_eps"],
                                       model,
                                       sites,
                                       args.seed,
                                       runtime=app_instance.runtime)
        x = None
    artifacts.write_dataset(args.out, sites.raw, y, x)
    artifacts.write_metadata(args.out, artifacts.metadata("simulate", resolved, seed=args.seed))
    logging.info("Simulated %s sites of the %s model into %s.", sites.n, resolved["model"], args.out)


def setup(app_instance: app.SieveApp) -> None:
    """Registers simulate."""
    _configure(app_instance.add_command("simulate", "Simulate a dataset from a Levy-driven field"))
    app_instance.set_handler("simulate", cmd_simulate)
