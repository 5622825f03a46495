"""Sparse neighbourhoods from hyperbolic distances.

Neighbourhoods are stored in CSR form (``indptr``/``indices``) so the oscillator
and plasticity code can work on all edges at once with ``np.bincount``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import pairwise_distances


@dataclass(frozen=True)
class SparseGraph:
    indptr: np.ndarray
    indices: np.ndarray
    delta: float
    k_cap: Optional[int] = None

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    @property
    def nnz(self) -> int:
        return int(self.indptr[-1])

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    @property
    def neighborhoods(self) -> list[list[int]]:
        return [self.neighbors(i).tolist() for i in range(self.n)]

    def sizes(self) -> np.ndarray:
        return np.diff(self.indptr)

    def rows(self) -> np.ndarray:
        """Row index of every stored edge, aligned with ``indices``."""
        return np.repeat(np.arange(self.n), self.sizes())

    def off_diagonal_edges(self) -> tuple[np.ndarray, np.ndarray]:
        rows = self.rows()
        keep = rows != self.indices
        return rows[keep], self.indices[keep]

    def undirected_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """Unique unordered pairs ``(i < j)`` touched by any edge, in lexicographic order."""
        i, j = self.off_diagonal_edges()
        lo = np.minimum(i, j)
        hi = np.maximum(i, j)
        n = self.n
        keys = np.unique(lo.astype(np.int64) * n + hi)
        return keys // n, keys % n

    @classmethod
    def from_neighborhoods(cls, neighborhoods, delta: float = np.inf, k_cap: Optional[int] = None) -> "SparseGraph":
        rows = [np.unique(np.asarray(nb, dtype=np.int64)) for nb in neighborhoods]
        indptr = np.zeros(len(rows) + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(r) for r in rows])
        indices = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
        n = len(rows)
        if indices.size and (indices.min() < 0 or indices.max() >= n):
            raise ValueError("neighbour index out of range")
        return cls(indptr, indices.astype(np.int64), float(delta), k_cap)

    @classmethod
    def complete(cls, n: int) -> "SparseGraph":
        return cls.from_neighborhoods([range(n)] * n)


def build_graph(embeddings, delta: float, k_cap: Optional[int] = None) -> SparseGraph:
    """N_i = {j : d(z_i, z_j) < delta}, optionally truncated to the k_cap nearest.

    Ties in the k_cap truncation go to the lower index. The search is the naive
    all-pairs one.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if k_cap is not None and k_cap < 1:
        raise ValueError(f"k_cap must be a positive integer, got {k_cap}")
    z = np.asarray(embeddings, dtype=np.float64)
    if z.ndim != 2 or z.shape[0] < 1:
        raise ValueError("need at least one embedding as an (n, d) array")
    dist = pairwise_distances(z)
    within = dist < delta
    if k_cap is None:
        counts = within.sum(axis=1)
        indptr = np.zeros(z.shape[0] + 1, dtype=np.int64)
        indptr[1:] = np.cumsum(counts)
        indices = np.nonzero(within)[1].astype(np.int64)
        return SparseGraph(indptr, indices, float(delta), None)

    masked = np.where(within, dist, np.inf)
    order = np.argsort(masked, axis=1, kind="stable")[:, :k_cap]
    keep = np.take_along_axis(within, order, axis=1)
    counts = keep.sum(axis=1)
    picked = np.where(keep, order, z.shape[0])
    picked.sort(axis=1)
    indptr = np.zeros(z.shape[0] + 1, dtype=np.int64)
    indptr[1:] = np.cumsum(counts)
    indices = picked[picked < z.shape[0]].astype(np.int64)
    return SparseGraph(indptr, indices, float(delta), int(k_cap))


def density(graph: SparseGraph) -> float:
    """sum |N_i| / N^2."""
    return graph.nnz / float(graph.n ** 2)
