"""Monte Carlo study commands.

``rate-study`` and ``coverage-study`` read an optional JSON study file,
apply the flags on top and write a report plus per-rung, per-replication
and (for coverage) per-target tables into an output directory. With
``--store`` the study is also recorded in a SQLAlchemy result ledger.

Typical usage example:
    $ spatial-sieve rate-study --seed 3 --areas 200,400,800 --out-dir runs/rate
    $ spatial-sieve coverage-study --config cov.json --replications 500 --workers 8 --out-dir runs/cov
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

import pandas as pd

from spatial_sieve import app
from spatial_sieve.database import artifacts, config
from spatial_sieve.ext import checks, exceptions, parsing
from spatial_sieve.stats import experiments


def _configure(parser: argparse.ArgumentParser, coverage: bool) -> None:
    parser.add_argument("--config", help="JSON study file, flags override its values")
    parser.add_argument("--seed", type=int, help="64-bit study seed, mandatory here or in --config")
    parser.add_argument("--replications", type=int, help="Replications per rung")
    parser.add_argument("--areas", help="Ladder of region volumes A_n, e.g. 200,400,800")
    parser.add_argument("--d", type=int, help="Spatial dimension")
    parser.add_argument("--smoothness", type=float, help="Smoothness r assumed by the J rule")
    parser.add_argument("--mode", choices=[m.value for m in experiments.ErrorNorm], help="Which J rule to follow")
    parser.add_argument("--kappa", type=float, help="Sites per unit volume, n = kappa A_n")
    parser.add_argument("--j-scale", type=float, help="Proportionality constant of the J rule")
    parser.add_argument("--workers", type=int, help="Worker processes for replications")
    parser.add_argument("--out-dir", required=True, help="Directory for the report and tables")
    parser.add_argument("--out-format", choices=("csv", "json"), help="Table file format")
    parser.add_argument("--store", help="SQLAlchemy URL of a result ledger, e.g. sqlite:///results.db")
    if coverage:
        parser.add_argument("--targets", help="Target points, e.g. 0,0;0.25,-0.25")
        parser.add_argument("--level", type=float, help="Nominal coverage")
        parser.add_argument("--bandwidth-frac", type=float, help="HAC bandwidths as fractions of A_j")


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    overrides = {
        "seed": args.seed,
        "replications": args.replications,
        "areas": parsing.floats(args.areas, "areas"),
        "d": args.d,
        "smoothness": args.smoothness,
        "mode": args.mode,
        "kappa": args.kappa,
        "j_scale": args.j_scale,
    }
    if overrides["areas"] is not None:
        # A flag ladder replaces any explicit ladder of the file.
        overrides["ladder"] = []
    if hasattr(args, "targets"):
        overrides.update(targets=parsing.points(args.targets, "targets"),
                         level=args.level,
                         bandwidth_fraction=args.bandwidth_frac)
    return overrides


def _expand_lists(frame: pd.DataFrame, columns: tuple[str, ...]) -> pd.DataFrame:
    """Splits list-valued columns into name_1..name_k."""
    frame = frame.copy()
    for column in columns:
        if column not in frame.columns:
            continue
        wide = pd.DataFrame(frame[column].tolist(), index=frame.index)
        wide.columns = [f"{column}_{k + 1}" for k in range(wide.shape[1])]
        frame = pd.concat([frame.drop(columns=column), wide], axis=1)
    return frame


def write_result(out_dir: pathlib.Path, result: experiments.StudyResult, out_format: str) -> dict[str, Any]:
    """Writes the report and tables of a study, returns the report."""
    report = result.to_report()
    suffix = "." + out_format
    artifacts.write_frame(out_dir / f"rungs{suffix}", result.rungs, out_format)
    artifacts.write_frame(out_dir / f"replications{suffix}", _expand_lists(result.replications, ("covered", "width")),
                          out_format)
    if result.coverage is not None:
        artifacts.write_frame(out_dir / f"coverage{suffix}", _expand_lists(result.coverage, ("point",)), out_format)
    artifacts.write_json(out_dir / "report.json", report)
    return report


def _run(app_instance: app.SieveApp, args: argparse.Namespace, kind: str) -> None:
    out_format = args.out_format or app_instance.stat_confg.getitem("out_format", "csv")
    if out_format not in ("csv", "json"):
        raise exceptions.InvalidParameters(f"Unknown output format {out_format!r}")
    if args.workers is not None:
        checks.positive(args.workers, "workers")
    spec = config.load_study_config(args.config, _overrides(args))
    if kind == "coverage":
        study = experiments.coverage_config_from_dict(spec)
        result = experiments.run_coverage_study(study, app_instance.runtime, args.workers)
    else:
        study = experiments.rate_config_from_dict(spec)
        result = experiments.run_rate_study(study, app_instance.runtime, args.workers)
    out_dir = pathlib.Path(args.out_dir)
    report = write_result(out_dir, result, out_format)
    if args.store:
        with app_instance.get_connection(args.store) as ledger:
            study_id = ledger.record_study(result)
            ledger.commit()
        report["study_id"] = study_id
        logging.info("Recorded %s study %s in the result ledger.", kind, study_id)
    summary = {"kind": kind, "out_dir": str(out_dir), "slopes": report["slopes"], "warnings": report["warnings"]}
    if "study_id" in report:
        summary["study_id"] = report["study_id"]
    sys.stdout.write(json.dumps(artifacts.json_safe(summary)) + "\n")


def cmd_rate_study(app_instance: app.SieveApp, args: argparse.Namespace) -> None:
    """Runs a convergence-rate study."""
    _run(app_instance, args, "rate")


def cmd_coverage_study(app_instance: app.SieveApp, args: argparse.Namespace) -> None:
    """Runs a coverage study."""
    _run(app_instance, args, "coverage")


def setup(app_instance: app.SieveApp) -> None:
    """Registers rate-study and coverage-study."""
    _configure(app_instance.add_command("rate-study", "Monte Carlo convergence-rate study"), coverage=False)
    app_instance.set_handler("rate-study", cmd_rate_study)
    _configure(app_instance.add_command("coverage-study", "Monte Carlo coverage study of pointwise intervals"),
               coverage=True)
    app_instance.set_handler("coverage-study", cmd_coverage_study)
