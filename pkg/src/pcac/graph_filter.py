"""Block threshold graphs and the k-fold one-hop low-pass predictor filter."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

_NEIGHBOR_STEPS = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=np.int64)


@dataclass(frozen=True)
class BlockGraph:
    """Symmetric weighted graph over a block's voxels.

    ``rows``/``cols``/``weights`` list every directed edge (both directions of
    each undirected edge). Vertex order follows the block's point order.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    degrees: np.ndarray

    @classmethod
    def from_edges(cls, n: int, a, b, w) -> "BlockGraph":
        """Build from undirected edges ``(a[i], b[i], w[i])``, a != b."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        w = np.asarray(w, dtype=np.float64)
        if np.any(a == b):
            raise ValueError("self-loops are not allowed")
        rows = np.concatenate([a, b])
        cols = np.concatenate([b, a])
        weights = np.concatenate([w, w])
        degrees = np.bincount(rows, weights=weights, minlength=n).astype(np.float64)
        return cls(n, rows, cols, weights, degrees)

    @property
    def n_edges(self) -> int:
        return len(self.rows) // 2

    def adjacency(self) -> np.ndarray:
        W = np.zeros((self.n, self.n))
        np.add.at(W, (self.rows, self.cols), self.weights)
        return W

    def laplacian(self) -> np.ndarray:
        """Dense combinatorial Laplacian D - W."""
        return np.diag(self.degrees) - self.adjacency()

    def rw_laplacian(self) -> np.ndarray:
        """Dense D^-1 L; rows of isolated vertices are left at zero."""
        L = self.laplacian()
        d = self.degrees
        inv = np.divide(1.0, d, out=np.zeros_like(d), where=d > 0)
        return inv[:, None] * L

    def components(self) -> np.ndarray:
        """Connected-component label per vertex (labels in first-seen order)."""
        from scipy.sparse import coo_matrix
        from scipy.sparse.csgraph import connected_components

        A = coo_matrix((np.ones(len(self.rows)), (self.rows, self.cols)), shape=(self.n, self.n))
        _, labels = connected_components(A, directed=False)
        return labels


def build_block_graph(coords) -> BlockGraph:
    """Connect voxels at unit distance (the 6-neighborhood) with weight 1.

    Accepts a :class:`~pcac.core.Block` or an n x 3 integer coordinate array.
    Weight is the reciprocal distance, which is 1 for every admitted edge
    since diagonal neighbors lie at sqrt(2) > 1.
    """
    coords = np.asarray(getattr(coords, "coords", coords), dtype=np.int64)
    n = len(coords)
    lo = coords.min(axis=0)
    local = coords - lo
    dims = local.max(axis=0) + 2
    key = (local[:, 0] * dims[1] + local[:, 1]) * dims[2] + local[:, 2]
    order = np.argsort(key)
    sorted_keys = key[order]
    src, dst = [], []
    for step in _NEIGHBOR_STEPS:
        nkey = ((local[:, 0] + step[0]) * dims[1] + local[:, 1] + step[1]) * dims[2] + local[:, 2] + step[2]
        pos = np.searchsorted(sorted_keys, nkey)
        pos = np.minimum(pos, n - 1)
        hit = sorted_keys[pos] == nkey
        src.append(np.flatnonzero(hit))
        dst.append(order[pos[hit]])
    a = np.concatenate(src)
    b = np.concatenate(dst)
    return BlockGraph.from_edges(n, a, b, np.ones(len(a)))


def one_hop_filter(g: BlockGraph, x) -> np.ndarray:
    """Average every vertex with its weighted one-hop neighborhood.

    y(a) = (D_aa x(a) + sum_b W_ab x(b)) / (2 D_aa); isolated vertices pass through.
    """
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    if len(x) != g.n:
        raise ValueError(f"signal has {len(x)} rows, graph has {g.n} vertices")
    contrib = g.weights[:, None] * x[g.cols]
    acc = np.stack([np.bincount(g.rows, weights=contrib[:, c], minlength=g.n)
                    for c in range(x.shape[1])], axis=1)
    d = g.degrees[:, None]
    y = np.where(d > 0, (d * x + acc) / np.where(d > 0, 2.0 * d, 1.0), x)
    return y[:, 0] if squeeze else y


def apply_k_filter(g: BlockGraph, x, k: int) -> np.ndarray:
    if k < 0:
        raise ValueError("k must be non-negative")
    y = np.asarray(x, dtype=np.float64)
    for _ in range(k):
        y = one_hop_filter(g, y)
    return y


def select_k(g: BlockGraph, target, predictor, kmax: int = 5):
    """Pick the filter power in [0, kmax] minimizing squared color error.

    Returns ``(k, filtered_predictor)``; ties go to the smaller k.
    """
    if kmax < 0:
        raise ValueError("kmax must be non-negative")
    target = np.asarray(target, dtype=np.float64)
    y = np.asarray(predictor, dtype=np.float64)
    best_k, best_y = 0, y
    best_err = np.sum((target - y) ** 2)
    for k in range(1, kmax + 1):
        y = one_hop_filter(g, y)
        err = np.sum((target - y) ** 2)
        if err < best_err:
            best_k, best_y, best_err = k, y, err
    return best_k, best_y


def spectral_response(k: int, lambdas) -> np.ndarray:
    """Frequency response (1 - lambda/2)^k of the k-fold filter."""
    lam = np.asarray(lambdas, dtype=np.float64)
    if np.any(lam < 0) or np.any(lam > 2):
        raise ValueError("random-walk Laplacian eigenvalues lie in [0, 2]")
    return (1.0 - 0.5 * lam) ** k


def write_spectral_csv(path, ks=range(0, 6), n_points: int = 101) -> None:
    lam = np.linspace(0.0, 2.0, n_points)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda"] + [f"k={k}" for k in ks])
        cols = [spectral_response(k, lam) for k in ks]
        for i, l in enumerate(lam):
            w.writerow([f"{l:.6f}"] + [f"{c[i]:.8f}" for c in cols])
