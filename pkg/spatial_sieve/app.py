"""The command host of spatial_sieve.

A module that contains purely the application class - `SieveApp`.
It owns the argument parser, loads every command extension and routes
errors through an installable handler.

Typical usage example:
    ```py
    from spatial_sieve import app
    app_instance = app.SieveApp()
    app_instance.setup()
    exit_code = app_instance.run(["fit", "--data", "sites.csv", ...])
    ```
"""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import argparse
import importlib
import logging
from typing import Callable, Sequence

from spatial_sieve import commands
from spatial_sieve.database import config, const, layer
from spatial_sieve.ext import exceptions

Handler = Callable[["SieveApp", argparse.Namespace], None]
ErrorHandler = Callable[[BaseException], int]


class _Parser(argparse.ArgumentParser):
    """Argument parser that raises instead of exiting on bad flags."""

    def error(self, message: str):
        raise exceptions.InvalidParameters(message)


def _unhandled(error: BaseException) -> int:
    logging.error("Unhandled error:", exc_info=error)
    return 1


class SieveApp:
    """The application instance behind the command line.

    Most of the work is done in the command extensions.
    This class only hosts them.

    Attributes:
        stat_confg: User-facing defaults.
        runtime: Advanced numerical parameters.
        on_error: Maps an exception to an exit code.
    """

    stat_confg: config.MiniConfig
    runtime: config.RuntimeConfig
    on_error: ErrorHandler

    def __init__(self,
                 confg: config.MiniConfig | None = None,
                 runtime: config.RuntimeConfig | None = None) -> None:
        """Initializes the application.

        Args:
            confg: The defaults, read from config.json when None.
            runtime: The numerics, read from runtimeconfig.json when None.
        """
        self.stat_confg = confg or config.MiniConfig()
        self.runtime = runtime or config.RuntimeConfig()
        self.on_error = _unhandled
        self.parser = _Parser(prog="spatial-sieve",
                              description="Series ridge regression for spatial data.")
        self.parser.add_argument("--version", action="version", version=f"spatial-sieve {const.VERSION}")
        self._subparsers = self.parser.add_subparsers(dest="command", metavar="COMMAND")
        self._subparsers.required = True
        self._handlers: dict[str, Handler] = {}
        self.extensions: list[str] = []

    def add_command(self, name: str, help_text: str) -> argparse.ArgumentParser:
        """Registers a subcommand and returns its parser."""
        if name in self._handlers:
            raise exceptions.InvalidParameters(f"Command {name} is already registered")
        self._handlers[name] = None  # type: ignore[assignment]
        return self._subparsers.add_parser(name, help=help_text, description=help_text)

    def set_handler(self, name: str, handler: Handler) -> None:
        """Attaches the function that runs a subcommand."""
        self._handlers[name] = handler

    def load_extension(self, name: str) -> None:
        """Imports a command extension and calls its setup(app)."""
        module = importlib.import_module(name)
        module.setup(self)
        self.extensions.append(name)

    def setup(self) -> None:
        """Loads every command extension."""
        logging.info("spatial_sieve version: %s", const.VERSION)
        for extension in commands.EXTENSIONS:
            self.load_extension(extension)
        logging.info("Finished loading %s command extensions.", len(self.extensions))

    def get_connection(self, url: str) -> layer.ResultLedger:
        """Opens the result ledger at a SQLAlchemy URL."""
        return layer.ResultLedger.connect(url)

    def run(self, argv: Sequence[str] | None = None) -> int:
        """Parses arguments and runs one subcommand.

        Returns:
            int: The exit code, 0 iff every output was written.
        """
        try:
            args = self.parser.parse_args(argv)
            logging.info("Running %s.", args.command)
            self._handlers[args.command](self, args)
        except SystemExit as exc:
            return exc.code if isinstance(exc.code, int) else 0
        except BaseException as exc:  # pylint: disable=broad-exception-caught
            return self.on_error(exc)
        return 0
