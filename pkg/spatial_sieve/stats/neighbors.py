"""Close-pair search by uniform grid bucketing.

Points are divided by per-dimension bandwidths, so the search radius
becomes 1 in every direction, then hashed into unit cells. Each point is
compared only against points in its own cell and the 3**d - 1 adjacent
cells, which turns the O(n**2) pair scan into a near-linear one when
bandwidths are small against the region.
"""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import itertools

import numpy as np
from numpy import typing as npt

from spatial_sieve.ext import checks, exceptions


class GridBuckets:
    """Points sorted into unit cells of bandwidth-normalized space.

    Args:
        points: An (n, d) array of points.
        bandwidths: Positive per-dimension bandwidths.
    """

    def __init__(self, points: npt.ArrayLike, bandwidths: npt.ArrayLike) -> None:
        self.points = checks.finite_matrix(points, "points")
        self.bandwidths = np.asarray(bandwidths, dtype=np.float64).reshape(-1)
        if self.bandwidths.shape[0] != self.points.shape[1]:
            raise exceptions.InvalidParameters(
                f"Need {self.points.shape[1]} bandwidths, got {self.bandwidths.shape[0]}")
        for b in self.bandwidths:
            checks.positive(b, "bandwidth")
        self.scaled = self.points / self.bandwidths
        low = self.scaled.min(axis=0) if self.points.shape[0] else np.zeros(self.points.shape[1])
        self.cells = np.floor(self.scaled - low).astype(np.int64)
        self.sizes = self.cells.max(axis=0) + 1 if self.points.shape[0] else np.ones(self.points.shape[1], np.int64)
        keys = self._key(self.cells)
        self.order = np.argsort(keys, kind="stable")
        self.sorted_keys = keys[self.order]

    def _key(self, cells: np.ndarray) -> np.ndarray:
        return np.ravel_multi_index(tuple(cells.T), tuple(self.sizes)) if cells.shape[0] else np.zeros(0, np.int64)

    def _candidates(self, rows: np.ndarray, offset: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
        target = self.cells[rows] + np.asarray(offset)
        valid = np.all((target >= 0) & (target < self.sizes), axis=1)
        rows, target = rows[valid], target[valid]
        keys = self._key(target)
        start = np.searchsorted(self.sorted_keys, keys, side="left")
        counts = np.searchsorted(self.sorted_keys, keys, side="right") - start
        total = int(counts.sum())
        left = np.repeat(rows, counts)
        within = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        right = self.order[np.repeat(start, counts) + within]
        return left, right

    def close_pairs(self, chunk: int = 65536) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All pairs i < j with |(s_i - s_j) / b| < 1.

        Args:
            chunk: Points handled per block.

        Returns:
            tuple: ``(i, j, u)`` with u the normalized distance of each pair,
                ordered by i then j.
        """
        n, d = self.points.shape
        lefts: list[np.ndarray] = []
        rights: list[np.ndarray] = []
        dists: list[np.ndarray] = []
        offsets = list(itertools.product((-1, 0, 1), repeat=d))
        for start in range(0, n, max(1, chunk)):
            rows = np.arange(start, min(n, start + chunk))
            for offset in offsets:
                left, right = self._candidates(rows, offset)
                keep = left < right
                left, right = left[keep], right[keep]
                dist = np.linalg.norm(self.scaled[left] - self.scaled[right], axis=1)
                close = dist < 1.0
                lefts.append(left[close])
                rights.append(right[close])
                dists.append(dist[close])
        if not lefts:
            return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0)
        left, right, dist = np.concatenate(lefts), np.concatenate(rights), np.concatenate(dists)
        order = np.lexsort((right, left))
        return left[order], right[order], dist[order]


def close_pairs(points: npt.ArrayLike,
                bandwidths: npt.ArrayLike,
                chunk: int = 65536) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Shortcut for `GridBuckets(points, bandwidths).close_pairs(chunk)`."""
    return GridBuckets(points, bandwidths).close_pairs(chunk)
