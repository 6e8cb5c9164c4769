"""Nearest-neighbour clusters in measurement-based coordinates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dynamics import TrajectorySet


@dataclass(frozen=True)
class ClusterPair:
    anchor_index: int
    train_indices: np.ndarray
    centroid: np.ndarray
    validation_indices: np.ndarray

    @property
    def K(self) -> int:
        return len(self.train_indices)


def select_coordinates(data: TrajectorySet, columns: Sequence[int], zscore: bool = False) -> np.ndarray:
    """Columns ``columns`` of ``[X dX]``, optionally z-scored per column."""
    columns = list(columns)
    if not columns:
        raise ValueError("need at least one clustering coordinate")
    width = 2 * data.n
    for c in columns:
        if not 0 <= c < width:
            raise IndexError(f"coordinate index {c} outside [0, {width})")
    Y = np.hstack([data.X, data.dX])[:, columns]
    if zscore:
        std = Y.std(axis=0)
        std[std == 0] = 1.0
        Y = (Y - Y.mean(axis=0)) / std
    return Y


def nearest(Y: np.ndarray, point: np.ndarray, K: int) -> np.ndarray:
    """Indices of the ``K`` rows of ``Y`` closest to ``point``; ties go to the lower index."""
    m = Y.shape[0]
    if not 1 <= K <= m:
        raise ValueError(f"K={K} must be between 1 and the number of rows ({m})")
    d2 = np.sum((Y - point) ** 2, axis=1)
    if K == m:
        return np.lexsort((np.arange(m), d2))
    # every row tied with the K-th distance is a candidate; lexsort settles ties by index
    kth = np.partition(d2, K - 1)[K - 1]
    candidates = np.flatnonzero(d2 <= kth)
    order = np.lexsort((candidates, d2[candidates]))
    return candidates[order[:K]]


def build_cluster(Y_T: np.ndarray, Y_V: np.ndarray, anchor_index: int, K: int) -> ClusterPair:
    if K > Y_T.shape[0] or K > Y_V.shape[0]:
        raise ValueError(f"K={K} exceeds available rows ({Y_T.shape[0]} train, {Y_V.shape[0]} validation)")
    train = nearest(Y_T, Y_T[anchor_index], K)
    centroid = Y_T[train].mean(axis=0)
    val = nearest(Y_V, centroid, K)
    return ClusterPair(int(anchor_index), train, centroid, val)


def validation_segment(data: TrajectorySet, start_row: int, q: int) -> np.ndarray:
    """Up to ``q`` consecutive state rows from ``start_row``, stopping at the trajectory end."""
    if not 0 <= start_row < data.m:
        raise IndexError(f"start row {start_row} outside [0, {data.m})")
    if q < 1:
        raise ValueError("q must be >= 1")
    end = min(start_row + q, data.trajectory_end(start_row))
    return data.X[start_row:end]
