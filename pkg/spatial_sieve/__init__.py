"""spatial-sieve - Series ridge regression for spatial data.

.. include:: ../README.md

**API DOCUMENTATION FOLLOWS:**

This file holds the startup code for the command line.
The numerical work is in `spatial_sieve.stats`, persistence in
`spatial_sieve.database` and the subcommands in `spatial_sieve.commands`.
This file is to be used as a module, not as a script.

Typical usage example:
    For a standard startup, use run.
    For a custom startup, use the code in the example below.
    ```py
    #!/usr/bin/env python3
    import spatial_sieve
    from spatial_sieve import app
    spatial_sieve.setup_logging()
    app_instance = app.SieveApp()
    app_instance.setup()
    app_instance.run(["simulate", "--seed", "7", "--region", "40", "--n", "500", "--out", "sites.csv"])
    ```
"""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import logging
import os
import pathlib
from typing import Sequence

from spatial_sieve import app
from spatial_sieve.database import config, const

_LOGGING_READY = False


def setup_logging(log_dir: pathlib.Path | None = None) -> None:
    """Installs the rotating log file, once per process.

    Setting the environment variable SPATIAL_SIEVE_VERBOSE to true also
    mirrors the log to stderr.

    Args:
        log_dir: Where the log file goes, `PROG_DIR`/log by default.
    """
    global _LOGGING_READY  # pylint: disable=global-statement
    if _LOGGING_READY:
        return
    handler = const.make_handler(log_dir)
    logging.root.setLevel(logging.INFO)
    logging.root.addHandler(handler)

    # Set up sqlalchemy logging
    sql_logger = logging.getLogger("sqlalchemy.engine")
    sql_logger.setLevel(logging.WARNING)
    sql_pool_logger = logging.getLogger("sqlalchemy.pool")
    sql_pool_logger.setLevel(logging.WARNING)

    if os.environ.get("SPATIAL_SIEVE_VERBOSE", "false").lower() == "true":
        stream = logging.StreamHandler()
        stream.setFormatter(logging.Formatter(const.LOG_FORMAT, const.LOG_DATE_FORMAT))
        logging.root.addHandler(stream)
        logging.info("Enabling verbose logging.")
    _LOGGING_READY = True
    logging.info("Logging set up.")


def run(argv: Sequence[str] | None = None, stat_data: config.MiniConfig | None = None) -> int:
    """Sets up logging and the app, then runs one subcommand.

    Args:
        argv: The arguments, sys.argv[1:] when None.
        stat_data: The defaults to use, read from config.json when None.

    Returns:
        int: The process exit code.
    """
    try:
        setup_logging()
    except OSError as exc:
        # A read-only install still works, just without a log file.
        logging.basicConfig(level=logging.WARNING)
        logging.warning("Could not open the log file: %s", exc)
    app_instance = app.SieveApp(confg=stat_data)
    app_instance.setup()
    return app_instance.run(argv)
