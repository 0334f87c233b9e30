#!/usr/bin/env python3
"""A startup file for the spatial_sieve command line

We don't really do anything except invoke the run function.
All the magic happens in `spatial_sieve`.
This file is to be used as a script, not as a module.

Typical usage example:
    $ python3 -m spatial_sieve fit --data sites.csv --infer-region --out fit.json
    OR
    $ poetry run spatial-sieve --help
"""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import sys

import spatial_sieve


def main() -> None:
    """Run one subcommand and exit with its code."""
    sys.exit(spatial_sieve.run(sys.argv[1:]))


if __name__ == "__main__":
    main()
