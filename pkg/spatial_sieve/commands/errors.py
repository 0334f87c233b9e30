"""An extension that handles command errors globally.

We use this extension to turn every error into an exit code and one
machine-parseable JSON line on stderr, so scripts driving the command
line never have to scrape tracebacks.

Typical usage example:
    ```py
    from spatial_sieve import app
    app_instance = app.SieveApp()
    app_instance.load_extension("spatial_sieve.commands.errors")
    ```
"""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import json
import logging
import sys
from typing import Any, TextIO

from sqlalchemy import exc

from spatial_sieve import app
from spatial_sieve.ext import exceptions


class ErrorHandling:
    """Error handling for spatial_sieve.

    Attributes:
        old_error_handler: The handler we replaced, restored on unload.
    """

    def __init__(self, app_instance: app.SieveApp, stream: TextIO | None = None) -> None:
        self._app = app_instance
        self._stream = stream
        self.old_error_handler = app_instance.on_error
        logging.info("Loaded %s", self.__class__.__name__)

    def load(self) -> None:
        """Installs the handler on the app."""
        self._app.on_error = self.on_command_error
        logging.info("Error handling ready.")

    def unload(self) -> None:
        """Restores the previous handler."""
        self._app.on_error = self.old_error_handler
        logging.info("Error handling unloaded.")

    def on_command_error(self, error: BaseException) -> int:
        """Reports an error and returns the exit code.

        Library errors carry their own exit code and are not logged with
        a traceback. Anything else is unexpected and is.
        """
        payload: dict[str, Any] = {"error": type(error).__name__, "message": str(error)}
        if isinstance(error, exceptions.SieveError):
            code = error.exit_code
            logging.warning("Command failed with %s: %s", type(error).__name__, error)
            for attribute in ("row", "rows", "rung", "replication", "achieved"):
                value = getattr(error, attribute, None)
                if value not in (None, []):
                    payload[attribute] = value[:100] if attribute == "rows" else value
        elif isinstance(error, exc.SQLAlchemyError):
            code = exceptions.ArtifactError.exit_code
            logging.error("An error occurred while accessing the result ledger:", exc_info=error)
        elif isinstance(error, KeyboardInterrupt):
            code = 130
            logging.info("Keyboard interrupt detected. Stopping.")
        else:
            code = 1
            logging.error("An unhandled error occurred while executing a command:", exc_info=error)
        payload["code"] = code
        stream = self._stream or sys.stderr
        stream.write(json.dumps(payload, default=str) + "\n")
        stream.flush()
        return code


def setup(app_instance: app.SieveApp) -> None:
    """Installs the error handler on the app."""
    ErrorHandling(app_instance).load()
