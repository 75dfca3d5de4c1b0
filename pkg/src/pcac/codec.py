"""Closed-loop GOF encoder and decoder for point cloud colors."""
from __future__ import annotations

import io
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import bitstream as bs
from .core import PointCloudFrame, block_layout, partition_into_blocks
from .entropy import (
    OVERHEAD_LZMA,
    overhead_compress,
    overhead_decompress,
    pack_bits,
    rlgr_decode,
    rlgr_encode,
    unpack_bits,
)
from .errors import BitstreamError
from .graph_filter import apply_k_filter, build_block_graph, select_k
from .motion import (
    FULL,
    MEConfig,
    MotionVector,
    color_icp,
    mc_predict,
    refine_motion,
)
from .spatial import RefIndex, extract_region
from .transform import basis_build_tag, block_basis, dequantize, gft_forward, gft_inverse, quantize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CodecConfig:
    """Encoder settings. ``fixed_k`` bypasses adaptive selection (ablations only)."""

    qstep: float = 16.0
    gof_size: int = 8
    block_size: int = 16
    me: MEConfig = field(default_factory=MEConfig)
    kmax: int = 5
    overhead_codec_id: int = OVERHEAD_LZMA
    fixed_k: int | None = None

    def __post_init__(self):
        if self.qstep <= 0:
            raise ValueError("qstep must be positive")
        if not 2 <= self.block_size <= 255:
            raise ValueError("block_size must lie in [2, 255]")
        if not 1 <= self.gof_size <= 0xFFFF:
            raise ValueError("gof_size must lie in [1, 65535]")
        if not 0 <= self.kmax <= 255:
            raise ValueError("kmax must lie in [0, 255]")
        if self.fixed_k is not None and not 0 <= self.fixed_k <= 255:
            raise ValueError("fixed_k must lie in [0, 255]")


@dataclass
class ReconstructedFrame:
    coords: np.ndarray
    colors: np.ndarray
    bits: int
    frame_index: int = 0
    frame_type: int = bs.INTRA

    @property
    def n_points(self) -> int:
        return len(self.coords)


@dataclass
class BlockStats:
    """Prediction diagnostics for one inter block (sums over all channels)."""

    motion_icp: tuple
    motion: tuple
    k: int
    sse_icp: float        # t_icp, unfiltered
    sse_refined: float    # refined motion, unfiltered
    sse_filtered: float   # refined motion, k-fold filtered
    energy: float         # sum of squared original colors


@dataclass
class FrameReport:
    frame_index: int
    frame_type: int
    bits: int
    coeff_bits: int
    mv_bits: int
    k_bits: int
    blocks: list = field(default_factory=list)


@dataclass
class EncodeResult:
    bitstream: bytes
    reconstructions: list
    reports: list

    @property
    def bits(self) -> list[int]:
        return [r.bits for r in self.reconstructions]


def _reconstruct(basis, pred, levels, qstep):
    return np.clip(pred + gft_inverse(basis, dequantize(levels, qstep)), 0.0, 255.0)


def _encode_planes(levels: list[np.ndarray]) -> tuple:
    stacked = np.concatenate(levels, axis=0) if levels else np.zeros((0, 3), np.int64)
    planes = []
    for c in range(3):
        b = rlgr_encode(stacked[:, c])
        planes.append((pack_bits(b), len(b)))
    return tuple(planes)


def _decode_planes(planes, sizes: list[int]) -> list[np.ndarray]:
    total = int(sum(sizes))
    cols = [rlgr_decode(unpack_bits(payload, nbits), total) for payload, nbits in planes]
    stacked = np.stack(cols, axis=1)
    return np.split(stacked, np.cumsum(sizes)[:-1])


def _frame_report(t, fb: bs.FrameBitstream, blocks=()) -> FrameReport:
    return FrameReport(
        frame_index=t,
        frame_type=fb.frame_type,
        bits=fb.n_bits,
        coeff_bits=sum(8 * len(p) for p, _ in fb.coeff_planes),
        mv_bits=8 * len(fb.mv_stream),
        k_bits=8 * len(fb.k_stream),
        blocks=list(blocks),
    )


def encode_frame_intra(frame: PointCloudFrame, cfg: CodecConfig):
    """Block-GFT coding of colors with no prediction."""
    colors = np.empty_like(frame.colors)
    levels = []
    for blk in partition_into_blocks(frame, cfg.block_size):
        basis = block_basis(blk.coords)
        q = quantize(gft_forward(basis, blk.colors), cfg.qstep)
        levels.append(q)
        colors[blk.points] = _reconstruct(basis, 0.0, q, cfg.qstep)
    fb = bs.FrameBitstream(bs.INTRA, len(levels), b"", b"", _encode_planes(levels))
    rec = ReconstructedFrame(frame.coords, colors, fb.n_bits, frame.frame_index, bs.INTRA)
    return fb, rec


def _pack_overhead(mvs, ks, codec_id):
    mvs = np.asarray(mvs, dtype=np.int64).reshape(-1, 3)
    if np.any(np.abs(mvs) > 0x7FFF):
        raise ValueError("motion vector component exceeds int16 range")
    mv_stream = b"" if not mvs.any() else overhead_compress(mvs.astype("<i2").tobytes(), codec_id)
    ks = np.asarray(ks, dtype=np.int64)
    k_stream = b"" if not ks.any() else overhead_compress(ks.astype(np.uint8).tobytes(), codec_id)
    return mv_stream, k_stream


def _unpack_overhead(fb: bs.FrameBitstream, codec_id):
    n = fb.block_count
    if fb.mv_stream:
        raw = overhead_decompress(fb.mv_stream, 6 * n, codec_id)
        mvs = np.frombuffer(raw, dtype="<i2").reshape(n, 3).astype(np.int64)
    else:
        mvs = np.zeros((n, 3), dtype=np.int64)
    if fb.k_stream:
        ks = np.frombuffer(overhead_decompress(fb.k_stream, n, codec_id), dtype=np.uint8).astype(int)
    else:
        ks = np.zeros(n, dtype=int)
    return mvs, ks


def encode_frame_inter(frame: PointCloudFrame, ref_original: PointCloudFrame,
                       ref_reconstructed, cfg: CodecConfig, with_stats: bool = False):
    """Motion-compensated, filtered prediction plus block-GFT residual coding.

    ``ref_reconstructed`` is the decoded previous frame (anything with
    ``coords``/``colors`` over the reference geometry).
    """
    me = cfg.me
    orig_index = RefIndex(ref_original.coords, ref_original.colors)
    rec_index = orig_index.with_colors(np.asarray(ref_reconstructed.colors, dtype=np.float64))
    colors = np.empty_like(frame.colors)
    levels, mvs, ks, stats = [], [], [], []
    for blk in partition_into_blocks(frame, cfg.block_size):
        if me.mode == FULL:
            region = extract_region(orig_index, blk.center, me.region_side)
            if len(region) == 0:
                logger.info("block %d: empty region, matching against full reference", blk.block_index)
                region = orig_index
            t_icp = color_icp(blk, region, me)
        else:
            t_icp = MotionVector.zero()
        m, cands, sse = refine_motion(blk, rec_index, t_icp, me, return_costs=True)
        pred = mc_predict(blk, rec_index, m)
        graph = build_block_graph(blk.coords)
        if cfg.fixed_k is None:
            k, fpred = select_k(graph, blk.colors, pred, cfg.kmax)
        else:
            k, fpred = cfg.fixed_k, apply_k_filter(graph, pred, cfg.fixed_k)
        basis = block_basis(blk.coords)
        q = quantize(gft_forward(basis, blk.colors - fpred), cfg.qstep)
        levels.append(q)
        mvs.append(m.t)
        ks.append(k)
        colors[blk.points] = _reconstruct(basis, fpred, q, cfg.qstep)
        if with_stats:
            stats.append(BlockStats(
                motion_icp=t_icp.t, motion=m.t, k=k,
                sse_icp=float(sse[0]), sse_refined=float(sse.min()),
                sse_filtered=float(np.sum((blk.colors - fpred) ** 2)),
                energy=float(np.sum(blk.colors ** 2)),
            ))
    mv_stream, k_stream = _pack_overhead(mvs, ks, cfg.overhead_codec_id)
    fb = bs.FrameBitstream(bs.INTER, len(levels), mv_stream, k_stream, _encode_planes(levels))
    rec = ReconstructedFrame(frame.coords, colors, fb.n_bits, frame.frame_index, bs.INTER)
    return (fb, rec, stats) if with_stats else (fb, rec)


def _header(cfg: CodecConfig, n_frames: int) -> bs.SequenceHeader:
    return bs.SequenceHeader(cfg.block_size, cfg.gof_size, n_frames, cfg.qstep,
                             cfg.kmax, cfg.overhead_codec_id, basis_build_tag())


def encode_sequence(frames, cfg: CodecConfig, with_stats: bool = False) -> EncodeResult:
    """Encode frames; the first of every GOF is intra, the rest predict from t-1."""
    frames = list(frames)
    header = _header(cfg, len(frames))
    fbs, recs, reports = [], [], []
    for t, frame in enumerate(frames):
        if t % cfg.gof_size == 0:
            fb, rec = encode_frame_intra(frame, cfg)
            blocks = []
        else:
            out = encode_frame_inter(frame, frames[t - 1], recs[t - 1], cfg, with_stats=with_stats)
            fb, rec = out[:2]
            blocks = out[2] if with_stats else []
        fbs.append(fb)
        recs.append(rec)
        reports.append(_frame_report(t, fb, blocks))
        logger.info("frame %d (%s): %d bits", t, "intra" if fb.frame_type == bs.INTRA else "inter", rec.bits)
    if recs:
        # sequence header is charged to the first frame
        recs[0].bits += 8 * header.size()
        reports[0].bits += 8 * header.size()
    return EncodeResult(bs.write_sequence(header, fbs), recs, reports)


def _coords_of(g) -> np.ndarray:
    return np.asarray(getattr(g, "coords", g), dtype=np.int64)


def decode_sequence(bitstream: bytes, geometry) -> list[ReconstructedFrame]:
    """Rebuild decoded colors from a bitstream and the lossless geometry of each frame."""
    src = io.BytesIO(bitstream)
    header = bs.read_header(src)
    if header.basis_build_tag != basis_build_tag():
        warnings.warn("bitstream was produced by a different numerical build; "
                      "decoding may not be bit-exact", RuntimeWarning, stacklevel=2)
    geometry = list(geometry)
    if len(geometry) < header.frame_count:
        raise BitstreamError(f"bitstream has {header.frame_count} frames, only {len(geometry)} geometries given")
    b, q = header.block_size, header.qstep
    recs: list[ReconstructedFrame] = []
    for t in range(header.frame_count):
        coords = _coords_of(geometry[t])
        layout = block_layout(coords, b)
        start = src.tell()
        fb = bs.read_frame(src, expected_blocks=len(layout))
        nbits = 8 * (src.tell() - start)
        expected = bs.INTRA if t % header.gof_size == 0 else bs.INTER
        if fb.frame_type != expected:
            raise BitstreamError(f"frame {t}: unexpected frame type {fb.frame_type}")
        levels = _decode_planes(fb.coeff_planes, [len(idx) for _, idx in layout])
        colors = np.empty((len(coords), 3))
        if fb.frame_type == bs.INTRA:
            for (_, idx), lv in zip(layout, levels):
                colors[idx] = _reconstruct(block_basis(coords[idx]), 0.0, lv, q)
        else:
            prev = recs[t - 1]
            ref = RefIndex(prev.coords, prev.colors)
            mvs, ks = _unpack_overhead(fb, header.overhead_codec_id)
            for blk, lv, m, k in zip(partition_into_blocks(_GeometryOnly(coords, t), b), levels, mvs, ks):
                pred = mc_predict(blk, ref, m)
                fpred = apply_k_filter(build_block_graph(blk.coords), pred, int(k))
                colors[blk.points] = _reconstruct(block_basis(blk.coords), fpred, lv, q)
        if t == 0:
            nbits += 8 * header.size()
        recs.append(ReconstructedFrame(coords, colors, nbits, t, fb.frame_type))
    if src.read(1):
        raise BitstreamError("trailing bytes after last frame")
    return recs


@dataclass(frozen=True)
class _GeometryOnly:
    coords: np.ndarray
    frame_index: int
    colors: None = None
