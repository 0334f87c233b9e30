"""Tests for spatial_sieve.stats.neighbors."""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import numpy as np
import pytest

from spatial_sieve.stats import neighbors


def _brute_force(points, bandwidths):
    scaled = np.asarray(points) / np.asarray(bandwidths)
    diff = scaled[:, None, :] - scaled[None, :, :]
    dist = np.linalg.norm(diff, axis=-1)
    left, right = np.nonzero(np.triu(dist < 1.0, k=1))
    return left, right, dist[left, right]


@pytest.mark.parametrize(("d", "bandwidths"), [(1, (0.7,)), (2, (1.5, 0.8)), (3, (2.0, 2.0, 1.0))])
def test_pairs_match_brute_force(d, bandwidths, rng):
    points = rng.uniform(-5.0, 5.0, size=(150, d))
    left, right, dist = neighbors.close_pairs(points, bandwidths)
    want_left, want_right, want_dist = _brute_force(points, bandwidths)
    np.testing.assert_array_equal(left, want_left)
    np.testing.assert_array_equal(right, want_right)
    np.testing.assert_allclose(dist, want_dist, rtol=1e-12)


def test_small_chunks_give_the_same_pairs(rng):
    points = rng.uniform(0.0, 10.0, size=(120, 2))
    whole = neighbors.GridBuckets(points, (1.0, 1.0)).close_pairs()
    pieces = neighbors.GridBuckets(points, (1.0, 1.0)).close_pairs(chunk=7)
    for a, b in zip(whole, pieces):
        np.testing.assert_array_equal(a, b)


def test_duplicate_points_are_a_pair_at_distance_zero():
    left, right, dist = neighbors.close_pairs([[1.0, 1.0], [1.0, 1.0], [9.0, 9.0]], (0.5, 0.5))
    np.testing.assert_array_equal(left, [0])
    np.testing.assert_array_equal(right, [1])
    np.testing.assert_array_equal(dist, [0.0])


def test_no_pairs_when_sites_are_far_apart():
    left, right, dist = neighbors.close_pairs([[0.0], [10.0], [20.0]], (1.0,))
    assert left.size == right.size == dist.size == 0


def test_pairs_exactly_one_bandwidth_apart_are_excluded():
    left, _, _ = neighbors.close_pairs([[0.0, 0.0], [3.0, 0.0]], (3.0, 1.0))
    assert left.size == 0
