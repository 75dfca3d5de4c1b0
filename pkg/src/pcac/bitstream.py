"""Byte layout of coded sequences (all integers little endian).

Header::

    "PCAC" | version u8 | block_size u8 | gof_size u16 | frame_count u32 |
    qstep f64 | kmax u8 | overhead_codec_id u8 | basis_build_tag u32

Frame record::

    frame_type u8 | block_count u32 | mv_len u32 + bytes | k_len u32 + bytes |
    3 x (coeff_bit_len u64 + ceil(bits / 8) bytes)

Motion vectors are three int16 per block and k values one uint8 per block,
both in Morton block order, compressed with the header's overhead codec. A
zero-length motion (k) stream on an inter frame means all-zero motion (k).
"""
from __future__ import annotations

import io
import struct
from dataclasses import dataclass

from .errors import BitstreamError, MagicError, TruncatedStreamError

MAGIC = b"PCAC"
VERSION = 1
INTRA = 0
INTER = 1

_HEADER = struct.Struct("<4sBBHIdBBI")
_FRAME_HEAD = struct.Struct("<BI")
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")


@dataclass(frozen=True)
class SequenceHeader:
    block_size: int
    gof_size: int
    frame_count: int
    qstep: float
    kmax: int
    overhead_codec_id: int
    basis_build_tag: int
    version: int = VERSION

    def to_bytes(self) -> bytes:
        return _HEADER.pack(MAGIC, self.version, self.block_size, self.gof_size,
                            self.frame_count, float(self.qstep), self.kmax,
                            self.overhead_codec_id, self.basis_build_tag)

    @classmethod
    def from_bytes(cls, data: bytes) -> "SequenceHeader":
        if len(data) < _HEADER.size:
            raise TruncatedStreamError("bitstream shorter than its header")
        magic, ver, b, gof, nf, q, kmax, oc, tag = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise MagicError(f"bad magic {magic!r}")
        if ver != VERSION:
            raise BitstreamError(f"unsupported bitstream version {ver}")
        return cls(b, gof, nf, q, kmax, oc, tag, ver)

    @staticmethod
    def size() -> int:
        return _HEADER.size


@dataclass(frozen=True)
class FrameBitstream:
    frame_type: int
    block_count: int
    mv_stream: bytes
    k_stream: bytes
    coeff_planes: tuple  # three (payload bytes, bit length) pairs, Y U V

    def to_bytes(self) -> bytes:
        if len(self.coeff_planes) != 3:
            raise ValueError("expected three coefficient planes")
        parts = [_FRAME_HEAD.pack(self.frame_type, self.block_count),
                 _U32.pack(len(self.mv_stream)), self.mv_stream,
                 _U32.pack(len(self.k_stream)), self.k_stream]
        for payload, nbits in self.coeff_planes:
            if len(payload) != (nbits + 7) // 8:
                raise ValueError("coefficient payload length does not match bit length")
            parts += [_U64.pack(nbits), payload]
        return b"".join(parts)

    @property
    def n_bits(self) -> int:
        return 8 * len(self.to_bytes())


def _read_exact(src, n: int) -> bytes:
    buf = src.read(n)
    if len(buf) != n:
        raise TruncatedStreamError(f"wanted {n} bytes, got {len(buf)}")
    return buf


def write_frame(fb: FrameBitstream, sink) -> int:
    data = fb.to_bytes()
    sink.write(data)
    return len(data)


def read_frame(source, expected_blocks: int | None = None) -> FrameBitstream:
    """Parse one frame record; ``expected_blocks`` comes from the decoder's geometry."""
    ftype, nblocks = _FRAME_HEAD.unpack(_read_exact(source, _FRAME_HEAD.size))
    if ftype not in (INTRA, INTER):
        raise BitstreamError(f"unknown frame type {ftype}")
    if expected_blocks is not None and nblocks != expected_blocks:
        raise BitstreamError(f"frame has {nblocks} blocks, geometry gives {expected_blocks}")
    mv = _read_exact(source, _U32.unpack(_read_exact(source, 4))[0])
    ks = _read_exact(source, _U32.unpack(_read_exact(source, 4))[0])
    if ftype == INTRA and (mv or ks):
        raise BitstreamError("intra frame carries motion or filter overhead")
    planes = []
    for _ in range(3):
        nbits = _U64.unpack(_read_exact(source, 8))[0]
        planes.append((_read_exact(source, (nbits + 7) // 8), nbits))
    return FrameBitstream(ftype, nblocks, mv, ks, tuple(planes))


def write_sequence(header: SequenceHeader, frames) -> bytes:
    sink = io.BytesIO()
    sink.write(header.to_bytes())
    for fb in frames:
        write_frame(fb, sink)
    return sink.getvalue()


def read_header(source) -> SequenceHeader:
    return SequenceHeader.from_bytes(_read_exact(source, _HEADER.size))
