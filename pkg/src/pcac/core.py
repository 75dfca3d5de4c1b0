"""Frames, blocks, color conversion and PLY I/O for voxelized point clouds."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ColorRangeError,
    DuplicateCoordinateError,
    EmptyCloudError,
    NonIntegerCoordinateError,
    PlyHeaderError,
)

logger = logging.getLogger(__name__)

MORTON_BITS = 21

# BT.709 full range; chroma rows scaled so U, V span [-127.5, 127.5] before the 128 offset.
_KR, _KB = 0.2126, 0.0722
_KG = 1.0 - _KR - _KB
RGB_TO_YUV = np.array(
    [
        [_KR, _KG, _KB],
        [-0.5 * _KR / (1 - _KB), -0.5 * _KG / (1 - _KB), 0.5],
        [0.5, -0.5 * _KG / (1 - _KR), -0.5 * _KB / (1 - _KR)],
    ]
)
YUV_TO_RGB = np.linalg.inv(RGB_TO_YUV)
CHROMA_OFFSET = np.array([0.0, 128.0, 128.0])


def _spread_bits(v: np.ndarray) -> np.ndarray:
    v = v.astype(np.uint64) & np.uint64(0x1FFFFF)
    v = (v | (v << np.uint64(32))) & np.uint64(0x1F00000000FFFF)
    v = (v | (v << np.uint64(16))) & np.uint64(0x1F0000FF0000FF)
    v = (v | (v << np.uint64(8))) & np.uint64(0x100F00F00F00F00F)
    v = (v | (v << np.uint64(4))) & np.uint64(0x10C30C30C30C30C3)
    v = (v | (v << np.uint64(2))) & np.uint64(0x1249249249249249)
    return v


def morton_code(coords) -> np.ndarray:
    """Interleave the bits of non-negative integer (x, y, z) triples.

    Bit ``3i+2`` holds bit ``i`` of x, ``3i+1`` of y and ``3i`` of z, so x is
    the most significant axis inside every octant triplet.
    """
    c = np.asarray(coords)
    if c.ndim == 1:
        c = c[None, :]
    if c.size and (c.min() < 0 or c.max() >= (1 << MORTON_BITS)):
        raise ValueError("Morton coordinates must lie in [0, 2^21)")
    c = c.astype(np.int64)
    return (
        (_spread_bits(c[:, 0]) << np.uint64(2))
        | (_spread_bits(c[:, 1]) << np.uint64(1))
        | _spread_bits(c[:, 2])
    )


def rgb_to_yuv(rgb) -> np.ndarray:
    """Convert N x 3 RGB in [0, 255] to real-valued YUV, clamped to [0, 255]."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim == 1:
        rgb = rgb[None, :]
    if rgb.size and (rgb.min() < 0 or rgb.max() > 255):
        raise ColorRangeError("RGB values must lie in [0, 255]")
    yuv = rgb @ RGB_TO_YUV.T + CHROMA_OFFSET
    return np.clip(yuv, 0.0, 255.0)


def yuv_to_rgb(yuv) -> np.ndarray:
    """Inverse of :func:`rgb_to_yuv`, rounded to uint8."""
    yuv = np.asarray(yuv, dtype=np.float64)
    if yuv.ndim == 1:
        yuv = yuv[None, :]
    rgb = (yuv - CHROMA_OFFSET) @ YUV_TO_RGB.T
    return np.clip(np.rint(rgb), 0, 255).astype(np.uint8)


@dataclass(frozen=True)
class PointCloudFrame:
    """One time instant: integer voxel coordinates plus YUV colors."""

    coords: np.ndarray
    colors: np.ndarray
    frame_index: int = 0

    def __post_init__(self):
        coords = np.ascontiguousarray(self.coords, dtype=np.int64)
        colors = np.ascontiguousarray(self.colors, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] != 3 or coords.shape[0] < 1:
            raise EmptyCloudError("frame needs an N x 3 coordinate array with N >= 1")
        if colors.shape != coords.shape:
            raise ValueError(f"colors shape {colors.shape} != coords shape {coords.shape}")
        if coords.min() < 0:
            raise ValueError("voxel coordinates must be non-negative")
        if len(np.unique(coords, axis=0)) != len(coords):
            raise DuplicateCoordinateError("frame contains duplicate voxels")
        coords.setflags(write=False)
        colors.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "colors", colors)

    @property
    def n_points(self) -> int:
        return len(self.coords)

    def with_colors(self, colors) -> "PointCloudFrame":
        return PointCloudFrame(self.coords, colors, self.frame_index)


@dataclass(frozen=True)
class Block:
    """Points of one frame falling inside a single cubic grid cell.

    ``points`` indexes the parent frame and is sorted by Morton code.
    ``coords``/``colors`` are the gathered rows; ``colors`` is None when the
    block was cut from geometry only (decoder side).
    """

    frame_index: int
    block_index: int
    origin: np.ndarray
    points: np.ndarray
    size: int
    coords: np.ndarray = field(repr=False)
    colors: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def center(self) -> np.ndarray:
        return self.origin + self.size // 2


@dataclass(frozen=True)
class FrameSequence:
    frames: list
    gof_size: int = 8

    def __post_init__(self):
        if self.gof_size < 1:
            raise ValueError("gof_size must be >= 1")
        for t, f in enumerate(self.frames):
            if f.frame_index != t:
                raise ValueError("frame indices must be consecutive from 0")

    def __len__(self):
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    def __getitem__(self, i):
        return self.frames[i]


def block_layout(coords: np.ndarray, b: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Return ``(origin, point_indices)`` per occupied cell, in Morton cell order."""
    if b < 2:
        raise ValueError("block size must be >= 2")
    coords = np.asarray(coords, dtype=np.int64)
    cells = coords // b
    point_order = np.argsort(morton_code(coords), kind="stable")
    cell_codes = morton_code(cells)[point_order]
    # stable sort keeps Morton point order within each cell
    by_cell = point_order[np.argsort(cell_codes, kind="stable")]
    sorted_codes = np.sort(cell_codes, kind="stable")
    starts = np.flatnonzero(np.r_[True, sorted_codes[1:] != sorted_codes[:-1]])
    ends = np.r_[starts[1:], len(by_cell)]
    return [(cells[by_cell[s]] * b, by_cell[s:e]) for s, e in zip(starts, ends)]


def partition_into_blocks(frame: PointCloudFrame, b: int) -> list[Block]:
    """Cut a frame into the occupied cells of a b x b x b grid."""
    blocks = []
    colors = getattr(frame, "colors", None)
    for i, (origin, idx) in enumerate(block_layout(frame.coords, b)):
        blocks.append(
            Block(
                frame_index=frame.frame_index,
                block_index=i,
                origin=origin,
                points=idx,
                size=b,
                coords=frame.coords[idx],
                colors=None if colors is None else colors[idx],
            )
        )
    return blocks


# ---------------------------------------------------------------- PLY I/O

_PLY_TYPES = {
    "char": "i1", "int8": "i1", "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2", "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4", "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4", "double": "f8", "float64": "f8",
}


def _parse_header(fh):
    if fh.readline().strip() != b"ply":
        raise PlyHeaderError("missing 'ply' magic line")
    fmt = None
    elements = []  # (name, count, [(prop, dtype or None for list)])
    while True:
        raw = fh.readline()
        if not raw:
            raise PlyHeaderError("unexpected EOF before end_header")
        parts = raw.decode("ascii", errors="replace").split()
        if not parts or parts[0] in ("comment", "obj_info"):
            continue
        if parts[0] == "end_header":
            break
        if parts[0] == "format":
            if len(parts) != 3 or parts[1] not in ("ascii", "binary_little_endian"):
                raise PlyHeaderError(f"unsupported format line: {raw!r}")
            fmt = parts[1]
        elif parts[0] == "element":
            if len(parts) != 3 or not parts[2].isdigit():
                raise PlyHeaderError(f"bad element line: {raw!r}")
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property":
            if not elements:
                raise PlyHeaderError("property before any element")
            if parts[1] == "list":
                elements[-1][2].append((parts[-1], None))
            elif len(parts) == 3 and parts[1] in _PLY_TYPES:
                elements[-1][2].append((parts[2], _PLY_TYPES[parts[1]]))
            else:
                raise PlyHeaderError(f"bad property line: {raw!r}")
        else:
            raise PlyHeaderError(f"unknown header keyword {parts[0]!r}")
    if fmt is None:
        raise PlyHeaderError("no format line")
    return fmt, elements


def _read_vertices(fh, fmt, elements):
    for name, count, props in elements:
        if any(dt is None for _, dt in props):
            if name == "vertex":
                raise PlyHeaderError("list properties on vertex element are not supported")
            if fmt != "ascii":
                raise PlyHeaderError("list-valued element precedes vertex in binary file")
        if name == "vertex":
            break
        if fmt == "ascii":
            for _ in range(count):
                fh.readline()
        else:
            fh.read(count * np.dtype([(p, "<" + dt) for p, dt in props]).itemsize)
    else:
        raise PlyHeaderError("no vertex element")
    names = [p for p, _ in props]
    for req in ("x", "y", "z", "red", "green", "blue"):
        if req not in names:
            raise PlyHeaderError(f"vertex element lacks property {req!r}")
    if fmt == "ascii":
        rows = [fh.readline() for _ in range(count)]
        try:
            data = np.array([r.split() for r in rows], dtype=np.float64).reshape(count, len(props))
        except ValueError as exc:
            raise PlyHeaderError(f"malformed ASCII vertex data: {exc}") from exc
        return {p: data[:, i] for i, p in enumerate(names)}, count
    dtype = np.dtype([(p, "<" + dt) for p, dt in props])
    buf = fh.read(count * dtype.itemsize)
    if len(buf) != count * dtype.itemsize:
        raise PlyHeaderError("binary vertex data truncated")
    arr = np.frombuffer(buf, dtype=dtype)
    return {p: arr[p].astype(np.float64) for p in names}, count


def load_ply(path, frame_index: int = 0) -> PointCloudFrame:
    """Read a voxelized PLY (ASCII or binary little endian) into a YUV frame."""
    with open(path, "rb") as fh:
        fmt, elements = _parse_header(fh)
        cols, count = _read_vertices(fh, fmt, elements)
    if count == 0:
        raise EmptyCloudError(f"{path}: no vertices")
    xyz = np.stack([cols["x"], cols["y"], cols["z"]], axis=1)
    if not np.all(np.isfinite(xyz)) or np.any(xyz != np.round(xyz)):
        raise NonIntegerCoordinateError(f"{path}: coordinates are not integers")
    coords = xyz.astype(np.int64)
    if len(np.unique(coords, axis=0)) != len(coords):
        raise DuplicateCoordinateError(f"{path}: duplicate voxel coordinates")
    rgb = np.stack([cols["red"], cols["green"], cols["blue"]], axis=1)
    return PointCloudFrame(coords, rgb_to_yuv(rgb), frame_index)


def save_ply(path, coords, rgb, binary: bool = True) -> None:
    """Write integer coordinates and uint8 RGB as a PLY file."""
    coords = np.asarray(coords, dtype=np.int32)
    rgb = np.asarray(rgb, dtype=np.uint8)
    header = (
        "ply\n"
        f"format {'binary_little_endian' if binary else 'ascii'} 1.0\n"
        f"element vertex {len(coords)}\n"
        "property int x\nproperty int y\nproperty int z\n"
        "property uchar red\nproperty uchar green\nproperty uchar blue\n"
        "end_header\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        if binary:
            rec = np.empty(len(coords), dtype=[("x", "<i4"), ("y", "<i4"), ("z", "<i4"),
                                               ("r", "u1"), ("g", "u1"), ("b", "u1")])
            rec["x"], rec["y"], rec["z"] = coords.T
            rec["r"], rec["g"], rec["b"] = rgb.T
            fh.write(rec.tobytes())
        else:
            for c, col in zip(coords, rgb):
                fh.write(f"{c[0]} {c[1]} {c[2]} {col[0]} {col[1]} {col[2]}\n".encode())


def load_sequence(directory, max_frames: int | None = None, gof_size: int = 8) -> FrameSequence:
    """Load every ``*.ply`` in a directory, sorted by file name."""
    paths = sorted(Path(directory).glob("*.ply"))
    if max_frames is not None:
        paths = paths[:max_frames]
    if not paths:
        raise FileNotFoundError(f"no .ply files in {directory}")
    logger.info("loading %d frames from %s", len(paths), directory)
    return FrameSequence([load_ply(p, t) for t, p in enumerate(paths)], gof_size)
