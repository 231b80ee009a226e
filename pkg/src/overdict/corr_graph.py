"""Sample correlation graph: an edge joins ``y_i`` and ``y_j`` iff ``|<y_i, y_j>| > rho``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidRegime, NotAnEdge
from .model import ModelParams, SampleSet


@dataclass(frozen=True, eq=False)
class CorrelationGraph:
    """Undirected graph on ``n`` nodes stored as sorted neighbor lists (CSR).

    ``indices[indptr[i]:indptr[i + 1]]`` are the neighbors of node ``i`` in
    increasing order. The graph has no self loops and is symmetric.
    """

    n: int
    rho: float
    indptr: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        for name in ("indptr", "indices"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_edges(cls, n: int, rho: float, edges) -> "CorrelationGraph":
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            raise ValueError("edge endpoint out of range")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise ValueError("self loops are not allowed")
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        keys = np.unique(src * n + dst)
        src, dst = keys // n, keys % n
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(n, float(rho), indptr, dst)

    @property
    def num_edges(self) -> int:
        return len(self.indices) // 2

    def degree(self, i: int) -> int:
        return int(self.indptr[i + 1] - self.indptr[i])

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    @cached_property
    def _keys(self) -> np.ndarray:
        # row-major CSR with sorted rows, so i*n + j is globally sorted
        rows = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))
        return rows * self.n + self.indices

    def has_edges(self, a, b) -> np.ndarray:
        """Vectorized edge test for the node pairs ``(a[k], b[k])``."""
        q = np.asarray(a, dtype=np.int64) * self.n + np.asarray(b, dtype=np.int64)
        keys = self._keys
        if keys.size == 0:
            return np.zeros(q.shape, dtype=bool)
        pos = np.minimum(np.searchsorted(keys, q), keys.size - 1)
        return keys[pos] == q

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self.has_edges([i], [j])[0])

    @cached_property
    def edge_list(self) -> np.ndarray:
        """``(num_edges, 2)`` array of pairs ``i < j`` in lexicographic order."""
        rows = self._keys // self.n
        upper = rows < self.indices
        return np.column_stack([rows[upper], self.indices[upper]])

    def to_dense(self) -> np.ndarray:
        adj = np.zeros((self.n, self.n), dtype=bool)
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        adj[rows, self.indices] = True
        return adj

    def rows_dense(self, start: int, stop: int) -> np.ndarray:
        """Dense boolean adjacency rows ``start:stop``."""
        block = np.zeros((stop - start, self.n), dtype=bool)
        lo, hi = self.indptr[start], self.indptr[stop]
        rows = np.repeat(np.arange(stop - start), np.diff(self.indptr[start:stop + 1]))
        block[rows, self.indices[lo:hi]] = True
        return block


def default_threshold(params: ModelParams, mu0_effective: float) -> float:
    """Correlation threshold ``m^2/2 - s^2 M^2 mu0 / sqrt(d)``.

    Raises
    ------
    InvalidRegime
        If the threshold is not positive; the message names the largest
        sparsity for which it would be.
    """
    d, s, m, M = params.d, params.s, params.m, params.M
    rho = m * m / 2.0 - s * s * M * M * mu0_effective / math.sqrt(d)
    if rho <= 0:
        if mu0_effective > 0:
            bound = math.sqrt(m * m * math.sqrt(d) / (2.0 * M * M * mu0_effective))
            s_max = math.ceil(bound) - 1
        else:
            s_max = None
        raise InvalidRegime(
            f"threshold rho = {rho:.6g} <= 0 for s={s}; need s < sqrt(m^2 sqrt(d) / (2 M^2 mu0)), "
            f"i.e. s <= {s_max}", max_sparsity=s_max,
        )
    return rho


def build_graph(Y, rho: float, block_size: int = 1024) -> CorrelationGraph:
    """Exact all-pairs thresholding of ``|Y^T Y|``, computed in row blocks."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    Y = Y.samples if isinstance(Y, SampleSet) else np.asarray(Y, dtype=float)
    n = Y.shape[1]
    cols = []
    for start in range(0, n, block_size):
        stop = min(start + block_size, n)
        hit = np.abs(Y[:, start:stop].T @ Y) > rho
        # the block product is not bitwise symmetric; keep the upper triangle
        # and mirror it so that adjacency is exactly symmetric
        hit[:, :stop] &= np.arange(start, stop)[:, None] < np.arange(stop)[None, :]
        r, c = np.nonzero(hit)
        cols.append(np.column_stack([r + start, c]))
    edges = np.concatenate(cols) if cols else np.empty((0, 2), np.int64)
    return CorrelationGraph.from_edges(n, rho, edges)


def common_neighbors(G: CorrelationGraph, i: int, j: int) -> np.ndarray:
    """Sorted common neighbors of the endpoints of edge ``(i, j)``."""
    if i == j or not G.has_edge(i, j):
        raise NotAnEdge(f"({i}, {j}) is not an edge")
    both = np.intersect1d(G.neighbors(i), G.neighbors(j), assume_unique=True)
    return both[(both != i) & (both != j)]
