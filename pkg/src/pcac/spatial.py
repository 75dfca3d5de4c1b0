"""Exact nearest-neighbor queries over a reference frame.

Results are defined by a linear scan: minimum cost, ties broken by the
smallest Morton code of the candidate voxel, then by the smallest point id.
The kd-tree only proposes candidates; every answer is re-scored with the
exact cost before tie-breaking, so indexed and brute-force answers agree
bit-for-bit.
"""
from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .core import MORTON_BITS, morton_code
from .errors import EmptyIndexError

_REL = 1e-9
_ABS = 1e-9


class RefIndex:
    """Immutable search structure over reference coordinates (and colors).

    ``ids`` maps local rows back to point indices of the parent frame; all
    query results are reported in parent indices.
    """

    def __init__(self, coords, colors=None, ids=None, _geo_tree=None, _morton=None):
        self.coords = np.ascontiguousarray(coords, dtype=np.int64).reshape(-1, 3)
        self.colors = None if colors is None else np.ascontiguousarray(colors, dtype=np.float64)
        if self.colors is not None and self.colors.shape != self.coords.shape:
            raise ValueError("colors must match coords")
        n = len(self.coords)
        self.ids = np.arange(n, dtype=np.int64) if ids is None else np.asarray(ids, dtype=np.int64)
        self.morton = morton_code(self.coords) if _morton is None else _morton
        self._geo_tree = _geo_tree
        self._hybrid_trees: dict[float, cKDTree] = {}
        self._morton_sorted = None

    def __len__(self):
        return len(self.coords)

    @classmethod
    def from_frame(cls, frame, colors=None) -> "RefIndex":
        return cls(frame.coords, frame.colors if colors is None else colors)

    def with_colors(self, colors) -> "RefIndex":
        """Same geometry (and kd-tree), different attached colors."""
        return RefIndex(self.coords, colors, self.ids, self._geo_tree, self.morton)

    @property
    def geo_tree(self) -> cKDTree:
        if self._geo_tree is None:
            self._geo_tree = cKDTree(self.coords.astype(np.float64))
        return self._geo_tree

    def exact_hits(self, q: np.ndarray) -> np.ndarray:
        """Local row of the point sitting exactly at each integer query, else -1."""
        if self._morton_sorted is None:
            order = np.argsort(self.morton, kind="stable")
            self._morton_sorted = (self.morton[order], order)
        codes, order = self._morton_sorted
        out = np.full(len(q), -1, dtype=np.int64)
        ok = np.all((q >= 0) & (q < (1 << MORTON_BITS)), axis=1)
        if not ok.any() or len(codes) == 0:
            return out
        qc = morton_code(q[ok].astype(np.int64))
        pos = np.minimum(np.searchsorted(codes, qc), len(codes) - 1)
        found = codes[pos] == qc
        rows = np.flatnonzero(ok)
        out[rows[found]] = order[pos[found]]
        return out

    def hybrid_tree(self, alpha: float) -> cKDTree:
        alpha = float(alpha)
        if alpha not in self._hybrid_trees:
            if self.colors is None:
                raise ValueError("hybrid queries need colors attached to the index")
            pts = np.hstack([np.sqrt(alpha) * self.coords, np.sqrt(1.0 - alpha) * self.colors])
            self._hybrid_trees[alpha] = cKDTree(pts)
        return self._hybrid_trees[alpha]


def geometric_cost(ref_coords, q):
    d = ref_coords - q
    return np.sum(d * d, axis=-1)


def hybrid_cost(ref_coords, ref_colors, v, c, alpha):
    """alpha * |dv|^2 + (1 - alpha) * |dc|^2, broadcasting over rows."""
    dv = ref_coords - v
    dc = ref_colors - c
    return alpha * np.sum(dv * dv, axis=-1) + (1.0 - alpha) * np.sum(dc * dc, axis=-1)


def _pick(index: RefIndex, cand: np.ndarray, cost: np.ndarray):
    """Row-wise argmin of cost with (Morton, id) tie-break; cand holds local rows."""
    best = cost.min(axis=1)
    tied = cost == best[:, None]
    big = np.iinfo(np.int64).max
    mort = np.where(tied, index.morton[cand].astype(np.int64), big)
    tied &= mort == mort.min(axis=1)[:, None]
    ids = np.where(tied, index.ids[cand], big)
    col = np.argmin(ids, axis=1)
    return cand[np.arange(len(cand)), col], best


def _exact_nearest(index, tree, q_space, cost_fn, k0=4):
    """Exact argmin of ``cost_fn`` using kd-tree candidates in ``q_space``.

    cost_fn(rows, local) -> exact costs for query rows against local candidates.
    """
    n = len(index)
    m = len(q_space)
    out_local = np.empty(m, dtype=np.int64)
    out_cost = np.empty(m)
    todo = np.arange(m)
    k = min(k0, n)
    while len(todo):
        dd, ii = tree.query(q_space[todo], k=k)
        dd = dd.reshape(len(todo), k)
        ii = ii.reshape(len(todo), k)
        cost = cost_fn(todo, ii)
        local, best = _pick(index, ii, cost)
        # every point beyond the k-th candidate has tree distance >= dd[:, -1]
        safe = (k >= n) | (dd[:, -1] ** 2 * (1 - _REL) - _ABS > best)
        out_local[todo[safe]] = local[safe]
        out_cost[todo[safe]] = best[safe]
        todo = todo[~safe]
        k = min(k * 4, n)
    return out_local, out_cost


def nearest_geometric_batch(index: RefIndex, queries) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`nearest_geometric`; returns (parent ids, squared distances)."""
    if len(index) == 0:
        raise EmptyIndexError("nearest-neighbor query on an empty index")
    q = np.asarray(queries, dtype=np.float64).reshape(-1, 3)
    ref = index.coords.astype(np.float64)
    local = np.full(len(q), -1, dtype=np.int64)
    d2 = np.zeros(len(q))
    integral = np.all(q == np.round(q), axis=1)
    if integral.any():
        # an occupied query voxel is the unique zero-distance answer
        rows = np.flatnonzero(integral)
        local[rows] = index.exact_hits(q[rows])
    miss = np.flatnonzero(local < 0)
    if len(miss):
        qm = q[miss]

        def cost(rows, cand):
            return geometric_cost(ref[cand], qm[rows][:, None, :])

        local[miss], d2[miss] = _exact_nearest(index, index.geo_tree, qm, cost)
    return index.ids[local], d2


def nearest_geometric(index: RefIndex, q) -> tuple[int, float]:
    ids, d2 = nearest_geometric_batch(index, np.asarray(q)[None, :])
    return int(ids[0]), float(d2[0])


def nearest_hybrid_batch(index: RefIndex, coords, colors, alpha: float) -> np.ndarray:
    """Vectorized :func:`nearest_hybrid`; returns parent ids."""
    if len(index) == 0:
        raise EmptyIndexError("nearest-neighbor query on an empty index")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    v = np.asarray(coords, dtype=np.float64).reshape(-1, 3)
    c = np.asarray(colors, dtype=np.float64).reshape(-1, 3)
    tree = index.hybrid_tree(alpha)
    q_space = np.hstack([np.sqrt(alpha) * v, np.sqrt(1.0 - alpha) * c])
    ref = index.coords.astype(np.float64)

    def cost(rows, cand):
        return hybrid_cost(ref[cand], index.colors[cand], v[rows][:, None, :],
                           c[rows][:, None, :], alpha)

    local, _ = _exact_nearest(index, tree, q_space, cost)
    return index.ids[local]


def nearest_hybrid(index: RefIndex, p, alpha: float) -> int:
    """Best match for ``p = (coords, color)`` under the hybrid metric."""
    v, c = p
    return int(nearest_hybrid_batch(index, np.asarray(v)[None, :], np.asarray(c)[None, :], alpha)[0])


def extract_region(index: RefIndex, center, side: int) -> RefIndex:
    """Sub-index of the points inside the axis-aligned cube ``center +/- (side-1)/2``."""
    if side < 1 or side % 2 == 0:
        raise ValueError("region side must be a positive odd integer")
    r = (side - 1) // 2
    inside = np.all(np.abs(index.coords - np.asarray(center, dtype=np.int64)) <= r, axis=1)
    colors = None if index.colors is None else index.colors[inside]
    return RefIndex(index.coords[inside], colors, index.ids[inside], _morton=index.morton[inside])
