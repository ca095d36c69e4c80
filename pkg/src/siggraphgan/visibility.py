"""Natural visibility graphs of time-series windows.

Each observation becomes a node; two observations are linked when every
point between them lies strictly below the straight chord joining them:

    s_k < s_i + (s_j - s_i) * (t_k - t_i) / (t_j - t_i)   for all i < k < j.

Ties block visibility. Consecutive observations always see each other.
Graphs are either undirected (symmetric adjacency) or directed left to
right (strictly upper-triangular adjacency).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GraphError, OrderingError, ShapeError, SizeError


@dataclass
class VisibilityGraph:
    """Binary adjacency of a visibility graph over n time observations."""

    adjacency: np.ndarray
    directed: bool

    def __post_init__(self):
        a = np.asarray(self.adjacency)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise GraphError(f"adjacency must be square, got shape {a.shape}")
        self.adjacency = a.astype(np.int8)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def edges(self) -> np.ndarray:
        """Edge list as an (m, 2) array of 0-indexed node pairs.

        Undirected graphs list each edge once with i < j.
        """
        a = self.adjacency
        if not self.directed:
            a = np.triu(a, k=1)
        return np.argwhere(a == 1)

    def edge_list_text(self) -> str:
        """Debug export: one ``i j`` pair per line."""
        return "".join(f"{i} {j}\n" for i, j in self.edges())


def _check_inputs(values, timestamps):
    s = np.asarray(values, dtype=np.float64)
    if s.ndim != 1:
        raise ShapeError("values must be one-dimensional")
    n = s.shape[0]
    if n < 2:
        raise SizeError(f"visibility graph needs >= 2 points, got {n}")
    if timestamps is None:
        t = np.arange(n, dtype=np.float64)
    else:
        t = np.asarray(timestamps, dtype=np.float64)
        if t.shape != s.shape:
            raise ShapeError(
                f"{t.shape[0]} timestamps for {n} values"
            )
        if np.any(np.diff(t) <= 0.0):
            raise OrderingError("timestamps must be strictly increasing")
    return s, t


def natural_visibility(values, timestamps=None, directed: bool = False) -> VisibilityGraph:
    """Build the natural visibility graph of a series.

    Uses the O(n^2) scan: for a fixed left node i, node j is visible
    exactly when the slope from i to j strictly exceeds the running
    maximum slope from i to every intermediate point. Timestamps default
    to 0, 1, 2, ... when not supplied.
    """
    s, t = _check_inputs(values, timestamps)
    n = s.shape[0]
    vis = np.zeros((n, n), dtype=bool)
    for i in range(n - 1):
        slopes = (s[i + 1 :] - s[i]) / (t[i + 1 :] - t[i])
        visible = np.empty(slopes.shape[0], dtype=bool)
        visible[0] = True  # no intermediate point
        if slopes.shape[0] > 1:
            visible[1:] = slopes[1:] > np.maximum.accumulate(slopes)[:-1]
        vis[i, i + 1 :] = visible
    adjacency = vis if directed else (vis | vis.T)
    return VisibilityGraph(adjacency.astype(np.int8), directed)


def brute_force_visibility(values, timestamps=None, directed: bool = False) -> VisibilityGraph:
    """Oracle construction: evaluate the chord criterion for every triple.

    No early exits and no slope reformulation; every (i, j, k) chord
    inequality is checked directly. Limited to n <= 512.
    """
    s, t = _check_inputs(values, timestamps)
    n = s.shape[0]
    if n > 512:
        raise SizeError(f"brute-force oracle limited to n <= 512, got {n}")
    vis = np.zeros((n, n), dtype=bool)
    for i in range(n - 1):
        rel_t = t[i + 1 :] - t[i]
        rel_s = s[i + 1 :] - s[i]
        # chord[j, k] = height of the (i, j) chord at intermediate time t_k
        chord = s[i] + np.outer(rel_s / rel_t, rel_t)
        blocked = s[np.newaxis, i + 1 :] >= chord
        # only k strictly between i and j counts
        j_idx, k_idx = np.indices(blocked.shape)
        blocked &= k_idx < j_idx
        vis[i, i + 1 :] = ~blocked.any(axis=1)
    adjacency = vis if directed else (vis | vis.T)
    return VisibilityGraph(adjacency.astype(np.int8), directed)


def degree_sequence(graph: VisibilityGraph) -> np.ndarray:
    """Per-node degree; out-degree for directed graphs."""
    return graph.adjacency.sum(axis=1).astype(np.int64)
