"""Exact nearest-neighbor ordering over a pool.

Both backends enumerate pool points in nondecreasing Euclidean distance with
ties broken by ascending pool index, so every downstream result is
deterministic.  The kd-tree backend only supplies candidate sets; distances
are always recomputed with the same numpy arithmetic the brute-force path
uses, which keeps the two orderings identical.
"""

from typing import Iterator

import numpy as np
from scipy.spatial import cKDTree

from akalls.problems import Pool

__all__ = ["NeighborIndex"]


class NeighborIndex:
    """Neighbor enumeration for one pool.

    Parameters
    ----------
    pool : Pool
        The indexed pool; immutable after construction.
    method : {"kdtree", "brute"}
        "kdtree" accelerates prefix queries; "brute" sorts all distances.
    """

    def __init__(self, pool: Pool, method: str = "kdtree"):
        if method not in ("kdtree", "brute"):
            raise ValueError(f"unknown method {method!r}")
        self.pool = pool
        self.method = method
        self._points = pool.points
        self._tree = cKDTree(self._points) if method == "kdtree" else None

    @property
    def size(self) -> int:
        return self.pool.size

    def _as_query(self, x) -> np.ndarray:
        q = np.asarray(x, dtype=float).reshape(-1)
        if q.shape[0] != self.pool.dim:
            raise ValueError(f"query has dimension {q.shape[0]}, pool has {self.pool.dim}")
        return q

    def _order_candidates(self, q: np.ndarray, cand: np.ndarray) -> tuple:
        """Sort candidate indices by (squared distance, index)."""
        delta = self._points[cand] - q[None, :]
        dsq = np.einsum("ij,ij->i", delta, delta)
        order = np.lexsort((cand, dsq))
        return cand[order], dsq[order]

    def _brute_order(self, q: np.ndarray) -> np.ndarray:
        cand = np.arange(self.size, dtype=np.int64)
        ordered, _ = self._order_candidates(q, cand)
        return ordered

    def query_prefix(self, x, m: int) -> np.ndarray:
        """First ``m`` pool indices in tie-broken nondecreasing-distance order."""
        if not (1 <= m <= self.size):
            raise ValueError(f"prefix length must lie in [1, {self.size}]; got {m!r}")
        q = self._as_query(x)
        if self._tree is None:
            return self._brute_order(q)[:m]
        k = min(self.size, max(m + 8, 2 * m))
        while True:
            _, cand = self._tree.query(q, k=k)
            cand = np.atleast_1d(np.asarray(cand, dtype=np.int64))
            ordered, dsq = self._order_candidates(q, cand)
            if k == self.size:
                return ordered[:m]
            # Points tied with the farthest candidate may be incomplete; the
            # strict prefix below the last distance is exact.
            safe = int(np.searchsorted(dsq, dsq[-1], side="left"))
            if safe >= m:
                return ordered[:m]
            k = min(self.size, 2 * k)

    def kth_neighbor(self, x, k: int) -> int:
        """Pool index of the k-th closest point to ``x`` (k=1 is the nearest)."""
        if not (1 <= k <= self.size):
            raise ValueError(f"k must lie in [1, {self.size}]; got {k!r}")
        return int(self.query_prefix(x, k)[k - 1])

    def neighbor_stream(self, x) -> Iterator[int]:
        """Yield every pool index once, in tie-broken nondecreasing distance."""
        q = self._as_query(x)
        if self._tree is None:
            yield from (int(i) for i in self._brute_order(q))
            return
        served = 0
        m = min(self.size, 32)
        while served < self.size:
            prefix = self.query_prefix(q, m)
            for i in prefix[served:]:
                yield int(i)
            served = m
            m = min(self.size, 2 * m)
