"""Reading and writing datasets, fit artifacts and result files.

Datasets are CSV files with columns ``s1..sd`` (site coordinates), ``y``
and optionally ``x1..xp`` (covariates). Fit artifacts and metadata
sidecars are versioned JSON. Every file is written to a temporary name
first and moved into place, so a file that exists is complete.

Typical usage example:
    ```py
    from spatial_sieve.database import artifacts
    data = artifacts.read_dataset("sites.csv")
    artifacts.write_fit_artifact("fit.json", fit, meta)
    ```
"""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import dataclasses
import datetime
import json
import logging
import math
import os
import pathlib
import re
from typing import Any, Mapping

import numpy as np
import pandas as pd

from spatial_sieve.database import const
from spatial_sieve.ext import exceptions, streams
from spatial_sieve.stats import estimator

_SITE_COLUMN = re.compile(r"^s([1-9][0-9]*)$")
_COVARIATE_COLUMN = re.compile(r"^x([1-9][0-9]*)$")
_PARSER_LINE = re.compile(r"line (\d+)")

PathLike = str | os.PathLike


@dataclasses.dataclass(frozen=True, eq=False)
class Dataset:
    """A parsed dataset.

    Attributes:
        sites: (n, d) raw site coordinates.
        y: (n,) responses.
        x: (n, p) covariates, p may be 0.
    """

    sites: np.ndarray
    y: np.ndarray
    x: np.ndarray

    @property
    def n(self) -> int:
        """Number of observations."""
        return self.y.shape[0]


def _indexed(columns: list[str], pattern: re.Pattern, prefix: str) -> list[str]:
    found = sorted((int(m.group(1)), c) for c in columns if (m := pattern.match(c)))
    if [i for i, _ in found] != list(range(1, len(found) + 1)):
        raise exceptions.SchemaError(f"{prefix} columns must be numbered 1..k without gaps, got "
                                     f"{[c for _, c in found]}")
    return [c for _, c in found]


def read_dataset(path: PathLike, d: int | None = None, p: int | None = None) -> Dataset:
    """Parses a dataset CSV.

    Args:
        path: The CSV file.
        d: Expected number of site columns, inferred when None.
        p: Expected number of covariate columns, inferred when None.

    Returns:
        `Dataset`: The parsed data.

    Raises:
        `spatial_sieve.ext.exceptions.EmptyInput`: If the file holds no rows.
        `spatial_sieve.ext.exceptions.SchemaError`: If the header is wrong
            or a row is malformed, naming the 1-based data row.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError as exc:
        raise exceptions.EmptyInput(f"{path} is empty") from exc
    except pd.errors.ParserError as exc:
        match = _PARSER_LINE.search(str(exc))
        row = int(match.group(1)) - 1 if match else None
        raise exceptions.SchemaError(f"Malformed row {row} in {path}: {exc}", row=row) from exc
    except OSError as exc:
        raise exceptions.InputError(f"Cannot read {path}: {exc}") from exc
    frame.columns = [str(c).strip() for c in frame.columns]
    columns = list(frame.columns)
    site_cols = _indexed(columns, _SITE_COLUMN, "Site")
    covariate_cols = _indexed(columns, _COVARIATE_COLUMN, "Covariate")
    if "y" not in columns:
        raise exceptions.SchemaError(f"{path} has no y column")
    unknown = sorted(set(columns) - set(site_cols) - set(covariate_cols) - {"y"})
    if unknown:
        raise exceptions.SchemaError(f"{path} has unknown column(s) {unknown}")
    if not site_cols:
        raise exceptions.SchemaError(f"{path} has no site columns s1..sd")
    if d is not None and len(site_cols) != d:
        raise exceptions.SchemaError(f"{path} has {len(site_cols)} site columns, expected {d}")
    if p is not None and len(covariate_cols) != p:
        raise exceptions.SchemaError(f"{path} has {len(covariate_cols)} covariate columns, expected {p}")
    if frame.shape[0] == 0:
        raise exceptions.EmptyInput(f"{path} holds no observations")
    ordered = site_cols + ["y"] + covariate_cols
    values = frame[ordered].apply(pd.to_numeric, errors="coerce").to_numpy(dtype=np.float64)
    bad = np.flatnonzero(~np.all(np.isfinite(values), axis=1))
    if bad.size:
        row = int(bad[0]) + 1
        raw = ",".join(frame.iloc[bad[0]][ordered].tolist())
        raise exceptions.SchemaError(f"Malformed row {row} in {path}: {raw!r}", row=row)
    k = len(site_cols)
    logging.info("Read %s observations with d=%s, p=%s from %s.", values.shape[0], k, len(covariate_cols), path)
    return Dataset(sites=values[:, :k], y=values[:, k], x=values[:, k + 1:])


def _atomic(path: PathLike, writer) -> None:
    target = pathlib.Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    temp = target.with_name(target.name + ".partial")
    try:
        writer(temp)
        os.replace(temp, target)
    except OSError as exc:
        temp.unlink(missing_ok=True)
        raise exceptions.ArtifactError(f"Cannot write {target}: {exc}") from exc


def json_safe(value: Any) -> Any:
    """Replaces numpy values and non-finite floats so JSON stays strict."""
    if isinstance(value, dict):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return json_safe(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _dump_json(payload: Any):

    def writer(temp: pathlib.Path) -> None:
        with open(temp, "w", encoding="utf-8") as out_f:
            json.dump(json_safe(payload), out_f, indent=2, allow_nan=False, default=_json_default)
            out_f.write("\n")

    return writer


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, pathlib.Path):
        return str(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def write_frame(path: PathLike, frame: pd.DataFrame, out_format: str = "csv") -> None:
    """Writes a table as CSV with 17 significant digits, or as JSON."""
    if out_format == "csv":
        _atomic(path, lambda temp: frame.to_csv(temp, index=False, float_format=const.FLOAT_FORMAT))
    elif out_format == "json":
        payload = {"columns": list(frame.columns), "rows": frame.to_numpy().tolist()}
        _atomic(path, _dump_json(payload))
    else:
        raise exceptions.InvalidParameters(f"Unknown output format {out_format!r}")


def write_dataset(path: PathLike, sites: np.ndarray, y: np.ndarray, x: np.ndarray | None = None) -> None:
    """Writes a dataset CSV readable by `read_dataset`."""
    frame = pd.DataFrame(sites, columns=[f"s{k + 1}" for k in range(sites.shape[1])])
    frame["y"] = y
    if x is not None:
        for k in range(x.shape[1]):
            frame[f"x{k + 1}"] = x[:, k]
    write_frame(path, frame, "csv")


def write_surface(path: PathLike,
                  coords: np.ndarray,
                  values: Mapping[str, np.ndarray],
                  out_format: str = "csv",
                  coord_names: list[str] | None = None) -> None:
    """Writes grid coordinates and value columns, row-major.

    Coordinates are named s1..sd unless `coord_names` is given.
    """
    frame = pd.DataFrame(coords, columns=coord_names or [f"s{k + 1}" for k in range(coords.shape[1])])
    for name, column in values.items():
        frame[name] = column
    write_frame(path, frame, out_format)


def metadata(command: str, resolved: Mapping[str, Any], seed: int | None = None) -> dict[str, Any]:
    """A metadata block sufficient to reproduce a run."""
    return {
        "version": const.VERSION,
        "schema_version": const.SCHEMA_VERSION,
        "command": command,
        "rng": streams.RNG_NAME,
        "seed": seed,
        "config": dict(resolved),
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }


def sidecar_path(path: PathLike) -> pathlib.Path:
    """Where the metadata of an output file goes."""
    target = pathlib.Path(path)
    return target.with_name(target.name + ".meta.json")


def write_json(path: PathLike, payload: Any) -> None:
    """Writes any JSON document atomically."""
    _atomic(path, _dump_json(payload))


def write_metadata(path: PathLike, meta: Mapping[str, Any]) -> None:
    """Writes the metadata sidecar of an output file."""
    write_json(sidecar_path(path), dict(meta))


def write_fit_artifact(path: PathLike, fit: estimator.RidgeFit, meta: Mapping[str, Any]) -> None:
    """Writes a versioned fit artifact."""
    write_json(path, {"schema_version": const.SCHEMA_VERSION, "fit": estimator.fit_to_dict(fit), "metadata": meta})


def read_fit_artifact(path: PathLike) -> dict[str, Any]:
    """Reads a fit artifact and checks its schema version.

    Returns:
        dict: The artifact, with keys ``fit`` and ``metadata``.

    Raises:
        `spatial_sieve.ext.exceptions.ArtifactError`: If the file is
            unreadable or of another schema version.
    """
    try:
        with open(path, encoding="utf-8") as in_f:
            artifact = json.load(in_f)
    except (OSError, json.JSONDecodeError) as exc:
        raise exceptions.ArtifactError(f"Cannot read fit artifact {path}: {exc}") from exc
    if not isinstance(artifact, dict) or "fit" not in artifact:
        raise exceptions.ArtifactError(f"{path} is not a fit artifact")
    version = artifact.get("schema_version")
    if version != const.SCHEMA_VERSION:
        raise exceptions.ArtifactError(f"{path} has schema version {version}, expected {const.SCHEMA_VERSION}")
    return artifact
