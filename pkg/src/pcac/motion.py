"""Block motion: color-ICP initial estimate, local refinement, MC prediction."""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .core import Block, morton_code
from .errors import EmptyIndexError
from .spatial import RefIndex, hybrid_cost, nearest_geometric_batch, nearest_hybrid_batch

logger = logging.getLogger(__name__)

FULL = "full"
ZERO_MOTION = "zero_motion"


@dataclass(frozen=True)
class MotionVector:
    """Integer translation taking block coordinates toward the reference frame."""

    t: tuple[int, int, int] = (0, 0, 0)

    def __post_init__(self):
        t = tuple(int(v) for v in self.t)
        if len(t) != 3:
            raise ValueError("motion vector needs three components")
        object.__setattr__(self, "t", t)

    def __array__(self, dtype=None, copy=None):
        return np.array(self.t, dtype=dtype or np.int64)

    def __add__(self, other):
        return MotionVector(tuple(a + b for a, b in zip(self.t, tuple(other))))

    def __iter__(self):
        return iter(self.t)

    @classmethod
    def zero(cls):
        return cls((0, 0, 0))


@dataclass(frozen=True)
class MEConfig:
    alpha: float = 0.1
    beta: int = 1
    region_side: int = 61
    max_icp_iters: int = 30
    icp_tol: float = 1e-3
    mode: str = FULL

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if self.region_side < 1 or self.region_side % 2 == 0:
            raise ValueError("region_side must be a positive odd integer")
        if self.mode not in (FULL, ZERO_MOTION):
            raise ValueError(f"unknown ME mode {self.mode!r}")


def hybrid_distance(p1, p2, alpha: float) -> float:
    """Geometry/color mixed squared distance between two (coords, color) points."""
    (v1, c1), (v2, c2) = p1, p2
    return float(hybrid_cost(np.asarray(v1, float), np.asarray(c1, float),
                             np.asarray(v2, float), np.asarray(c2, float), alpha))


def icp_translation(matched_pairs) -> np.ndarray:
    """Least-squares translation for fixed matches: mean of ``v' - v``.

    ``matched_pairs`` is either a sequence of ``(v, v')`` pairs or a tuple of
    two N x 3 arrays.
    """
    if isinstance(matched_pairs, tuple) and len(matched_pairs) == 2 and np.ndim(matched_pairs[0]) == 2:
        src, dst = (np.asarray(a, dtype=np.float64) for a in matched_pairs)
    else:
        pairs = list(matched_pairs)
        if not pairs:
            raise ValueError("icp_translation needs at least one matched pair")
        src = np.array([p[0] for p in pairs], dtype=np.float64)
        dst = np.array([p[1] for p in pairs], dtype=np.float64)
    if len(src) == 0:
        raise ValueError("icp_translation needs at least one matched pair")
    return (dst - src).mean(axis=0)


def round_half_away(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return (np.sign(x) * np.floor(np.abs(x) + 0.5)).astype(np.int64)


def color_icp(block: Block, region: RefIndex, cfg: MEConfig, return_iters: bool = False):
    """Translation-only ICP with hybrid geometry/color matching.

    ``block.colors`` and ``region.colors`` must be the original colors. On an
    empty region the zero vector is returned; callers wanting a wider search
    pass a full-frame index instead.
    """
    if cfg.mode == ZERO_MOTION:
        return (MotionVector.zero(), 0) if return_iters else MotionVector.zero()
    if len(region) == 0:
        logger.warning("block %d: empty search region, using zero motion", block.block_index)
        return (MotionVector.zero(), 0) if return_iters else MotionVector.zero()
    work = block.coords.astype(np.float64)
    lookup = np.empty(int(region.ids.max()) + 1, dtype=np.int64)
    lookup[region.ids] = np.arange(len(region))
    total = np.zeros(3)
    it = 0
    for it in range(1, cfg.max_icp_iters + 1):
        match = lookup[nearest_hybrid_batch(region, work, block.colors, cfg.alpha)]
        t = icp_translation((work, region.coords[match]))
        total += t
        work += t
        if np.linalg.norm(t) < cfg.icp_tol:
            break
    mv = MotionVector(tuple(round_half_away(total)))
    return (mv, it) if return_iters else mv


def mc_predict(block: Block, ref_index: RefIndex, m) -> np.ndarray:
    """Decoded colors of the geometric nearest neighbors of ``coords + m``."""
    if len(ref_index) == 0:
        raise EmptyIndexError("motion compensation against an empty reference")
    ids, _ = nearest_geometric_batch(ref_index, block.coords + np.asarray(m, dtype=np.int64))
    return ref_index.colors[ids]


def refinement_candidates(beta: int) -> np.ndarray:
    """All displacements in [-beta, beta]^3, ordered by the refinement tie-break."""
    d = np.array(list(itertools.product(range(-beta, beta + 1), repeat=3)), dtype=np.int64)
    key_norm = np.sum(d * d, axis=1)
    key_morton = morton_code(d + beta).astype(np.int64)
    return d[np.lexsort((key_morton, key_norm))]


def refine_motion(block: Block, ref_index: RefIndex, t_icp, cfg: MEConfig,
                  return_costs: bool = False):
    """Exhaustive integer search around ``t_icp`` minimizing prediction SSE.

    ``ref_index`` carries decoded reference colors. With ``return_costs`` the
    (candidate displacements, SSE per candidate) table is returned as well.
    """
    t_icp = np.asarray(t_icp, dtype=np.int64)
    beta = 0 if cfg.mode == ZERO_MOTION else cfg.beta
    cands = refinement_candidates(beta)
    n = block.n_points
    queries = (block.coords[None, :, :] + (t_icp + cands)[:, None, :]).reshape(-1, 3)
    ids, _ = nearest_geometric_batch(ref_index, queries)
    pred = ref_index.colors[ids].reshape(len(cands), n, 3)
    err = pred - block.colors[None]
    sse = np.sum(err * err, axis=(1, 2))
    # candidates are pre-sorted by tie-break, argmin keeps the first minimum
    best = int(np.argmin(sse))
    mv = MotionVector(tuple(t_icp + cands[best]))
    return (mv, cands, sse) if return_costs else mv
