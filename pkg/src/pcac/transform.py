"""Block graph Fourier transform and uniform midtread quantization."""
from __future__ import annotations

import platform
import zlib
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .graph_filter import BlockGraph, build_block_graph


@dataclass(frozen=True)
class GFTBasis:
    """Eigenvectors (columns) of a block graph's combinatorial Laplacian.

    Eigenvalues ascend; each connected component contributes an exact constant
    vector at eigenvalue 0, and every other column has its largest-magnitude
    entry positive.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self) -> int:
        return len(self.eigenvalues)


def basis_build_tag() -> int:
    """Identifies the numerical stack that produced GFT bases (u32)."""
    desc = f"numpy={np.__version__};machine={platform.machine()};system={platform.system()}"
    return zlib.crc32(desc.encode()) & 0xFFFFFFFF


def _canonical_sign(vecs: np.ndarray) -> np.ndarray:
    pivot = np.argmax(np.abs(vecs), axis=0)
    signs = np.where(vecs[pivot, np.arange(vecs.shape[1])] < 0, -1.0, 1.0)
    return vecs * signs


def gft_basis(graph: BlockGraph) -> GFTBasis:
    """Per-component eigendecomposition of L = D - W, assembled and sorted."""
    n = graph.n
    L = graph.laplacian()
    labels = graph.components()
    vals_all, vecs_all = [], []
    for c in range(labels.max() + 1):
        verts = np.flatnonzero(labels == c)
        nc = len(verts)
        vecs = np.zeros((n, nc))
        if nc == 1:
            vals = np.zeros(1)
            vecs[verts, 0] = 1.0
        else:
            vals, u = np.linalg.eigh(L[np.ix_(verts, verts)])
            u = _canonical_sign(u)
            vals[0] = 0.0
            u[:, 0] = 1.0 / np.sqrt(nc)
            vecs[verts] = u
        vals_all.append(vals)
        vecs_all.append(vecs)
    vals = np.concatenate(vals_all)
    vecs = np.hstack(vecs_all)
    order = np.argsort(vals, kind="stable")
    return GFTBasis(vals[order], np.ascontiguousarray(vecs[:, order]))


@lru_cache(maxsize=1024)
def _cached_basis(key: bytes, n: int) -> GFTBasis:
    local = np.frombuffer(key, dtype=np.int64).reshape(n, 3)
    return gft_basis(build_block_graph(local))


def block_basis(coords) -> GFTBasis:
    """GFT basis for a block's geometry, memoized on relative coordinates."""
    coords = np.asarray(coords, dtype=np.int64)
    local = np.ascontiguousarray(coords - coords.min(axis=0))
    return _cached_basis(local.tobytes(), len(local))


def _check_rows(basis: GFTBasis, x: np.ndarray) -> None:
    if x.shape[0] != basis.n:
        raise ValueError(f"signal has {x.shape[0]} rows, basis has {basis.n}")


def gft_forward(basis: GFTBasis, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    _check_rows(basis, x)
    return basis.eigenvectors.T @ x


def gft_inverse(basis: GFTBasis, coeffs) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=np.float64)
    _check_rows(basis, coeffs)
    return basis.eigenvectors @ coeffs


def quantize(coeffs, qstep: float) -> np.ndarray:
    """Midtread quantizer, rounding half away from zero."""
    if qstep <= 0:
        raise ValueError("qstep must be positive")
    r = np.asarray(coeffs, dtype=np.float64) / qstep
    return (np.sign(r) * np.floor(np.abs(r) + 0.5)).astype(np.int64)


def dequantize(levels, qstep: float) -> np.ndarray:
    if qstep <= 0:
        raise ValueError("qstep must be positive")
    return np.asarray(levels, dtype=np.float64) * qstep
