"""An import utility for loading all command extensions in this submodule.

This file just makes it easier to load all commands in this submodule.
We can just import this submodule and iterate over the `EXTENSIONS` list.
Each extension exposes ``setup(app)``.

Typical usage example:
    ```py
    from spatial_sieve import app, commands
    app_instance = app.SieveApp()
    for extension in commands.EXTENSIONS:
        app_instance.load_extension(extension)
    ```
"""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import pkgutil

EXTENSIONS = [module.name for module in pkgutil.iter_modules(__path__, f"{__package__}.")]
"""A list of all command extensions in this submodule."""
