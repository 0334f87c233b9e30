"""Constant variables used throughout spatial_sieve.

We use this file to store static variables that are used throughout the
package. This is to keep the code clean and easy to read.
We also use this file to store the version number and the artifact
schema version.

Typical usage example:
    ```py
    from spatial_sieve.database import const
    print(const.VERSION)
    ```
"""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import logging.handlers
import pathlib

VERSION = "v0.1.0.0"
"""The current version of spatial_sieve as a string.

FORMAT:
v[major].[minor].[release].[build]

MAJOR and MINOR version changes can be compatibility-breaking.
Compatibility-breaking changes are changes to the artifact schema or to
the random stream convention, as both invalidate stored results.
"""
SCHEMA_VERSION = 1
"""Integer version of every JSON artifact we write."""
PROG_DIR = pathlib.Path(__file__).parent.parent.parent.absolute()
"""The absolute path to the root directory of the project."""
LOG_FORMAT = "%(asctime)s:%(levelname)s:%(name)s: %(message)s"
"""The format used by every log handler we install."""
LOG_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
"""The date format used by every log handler we install."""
FLOAT_FORMAT = "%.17g"
"""Float format for CSV output, round-trips every double."""


def make_handler(log_dir: pathlib.Path | None = None) -> logging.Handler:
    """Creates the default rotating file handler.

    The log directory is created if needed.

    Args:
        log_dir: Directory for the log file, defaults to `PROG_DIR`/log.

    Returns:
        `logging.Handler`: The handler, already formatted.
    """
    log_dir = log_dir or pathlib.Path(PROG_DIR, "log")
    log_dir.mkdir(parents=True, exist_ok=True)
    handler = logging.handlers.RotatingFileHandler(
        filename=pathlib.Path(log_dir, "spatial_sieve.log"),
        encoding="utf-8",
        mode="a",
        backupCount=10,
        maxBytes=100000,
    )
    handler.setFormatter(logging.Formatter(LOG_FORMAT, LOG_DATE_FORMAT))
    return handler
