"""Random streams for reproducible, splittable simulation.

Every random draw in spatial_sieve comes from a `numpy.random.Philox`
generator (a counter-based bit generator with period 2**256). Streams are
derived from a single integer seed through `numpy.random.SeedSequence`
spawn keys, so that independent purposes and replications never share
state and parallel workers need no coordination.

Stream convention: the spawn key is ``(purpose, rung, replication)``.
Purposes are the fixed integers in `Purpose`.

Typical usage example:
    ```py
    from spatial_sieve.ext import streams
    rng = streams.generator(seed, streams.Purpose.FIELD, rung=0, replication=3)
    ```
"""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import enum

import numpy as np

RNG_NAME = "numpy.Philox"
"""The generator name recorded in every metadata block."""


class Purpose(enum.IntEnum):
    """Fixed stream purposes. Never renumber, seeds depend on them."""

    SITES = 0
    FIELD = 1
    NOISE = 2
    COVARIATES = 3


def seed_sequence(seed: int, purpose: int, rung: int = 0, replication: int = 0) -> np.random.SeedSequence:
    """Builds the seed sequence of one stream.

    Args:
        seed: The user-level 64-bit seed.
        purpose: The stream purpose.
        rung: The ladder rung, zero outside studies.
        replication: The replication index, zero outside studies.

    Returns:
        `numpy.random.SeedSequence`: The sequence for that stream.
    """
    return np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF,
                                  spawn_key=(int(purpose), int(rung), int(replication)))


def generator(seed: int, purpose: int, rung: int = 0, replication: int = 0) -> np.random.Generator:
    """Returns a Philox generator for one stream."""
    return np.random.Generator(np.random.Philox(seed_sequence(seed, purpose, rung, replication)))


def child_seed(seed: int, purpose: int, rung: int = 0, replication: int = 0) -> int:
    """Derives a 64-bit integer seed for a nested stream.

    Used when a routine that itself takes a seed is called on behalf of
    a replication, i.e. field simulation inside a study.
    """
    state = seed_sequence(seed, purpose, rung, replication).generate_state(2, dtype=np.uint32)
    return int(state[0]) | (int(state[1]) << 32)
