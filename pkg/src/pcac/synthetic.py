"""Synthetic dynamic point clouds with known motion."""
from __future__ import annotations

import numpy as np

from .core import FrameSequence, PointCloudFrame


def cube_shell(side: int) -> np.ndarray:
    """Voxels on the surface of a side^3 cube, origin at zero."""
    g = np.arange(side)
    x, y, z = np.meshgrid(g, g, g, indexing="ij")
    on = (x == 0) | (y == 0) | (z == 0) | (x == side - 1) | (y == side - 1) | (z == side - 1)
    return np.stack([x[on], y[on], z[on]], axis=1).astype(np.int64)


def shell_texture(coords: np.ndarray, rng: np.random.Generator, noise: float = 12.0) -> np.ndarray:
    """Smooth stripes plus fixed per-voxel grain, as YUV in [0, 255]."""
    x, y, z = (coords[:, i].astype(np.float64) for i in range(3))
    Y = 128 + 55 * np.sin(2 * np.pi * (x + y) / 19) + 30 * np.cos(2 * np.pi * z / 13)
    U = 128 + 25 * np.sin(2 * np.pi * x / 31) + 10 * np.cos(2 * np.pi * (y - z) / 11)
    V = 128 + 25 * np.cos(2 * np.pi * y / 29) + 10 * np.sin(2 * np.pi * (x + z) / 17)
    yuv = np.stack([Y, U, V], axis=1)
    yuv += rng.normal(0.0, 1.0, yuv.shape) * np.array([noise, noise / 3, noise / 3])
    return np.clip(yuv, 0.0, 255.0)


def random_shifts(n: int, rng: np.random.Generator, lo: int = 2, hi: int = 6) -> np.ndarray:
    """Integer per-frame translations whose largest component lies in [lo, hi]."""
    out = []
    while len(out) < n:
        s = rng.integers(-hi, hi + 1, size=3)
        if lo <= np.abs(s).max() <= hi:
            out.append(s)
    return np.array(out, dtype=np.int64).reshape(n, 3)


def translating_cube(n_frames: int = 8, side: int = 92, seed: int = 0, min_shift: int = 2,
                     max_shift: int = 6, noise: float = 12.0, gof_size: int = 8,
                     static: bool = False, frame_noise: float = 0.0) -> tuple[FrameSequence, np.ndarray]:
    """Textured cube shell moving rigidly; returns the sequence and true shifts.

    ``shifts[t]`` is the displacement of frame t relative to frame t-1 (row 0
    is zero). A shell of side 92 has about 50k voxels. ``frame_noise`` adds
    independent per-frame luma/chroma noise on top of the moving texture.
    """
    rng = np.random.default_rng(seed)
    obj = cube_shell(side)
    colors = shell_texture(obj, rng, noise)
    shifts = np.zeros((n_frames, 3), dtype=np.int64)
    if not static and n_frames > 1:
        shifts[1:] = random_shifts(n_frames - 1, rng, min_shift, max_shift)
    offsets = np.cumsum(shifts, axis=0)
    base = -offsets.min(axis=0) + 8
    frames = []
    for t in range(n_frames):
        c = colors
        if frame_noise > 0:
            c = np.clip(colors + rng.normal(0.0, frame_noise, colors.shape), 0.0, 255.0)
        frames.append(PointCloudFrame(obj + base + offsets[t], c, t))
    return FrameSequence(frames, gof_size), shifts
