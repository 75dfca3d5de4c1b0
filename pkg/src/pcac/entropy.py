"""Adaptive run-length / Golomb-Rice coding and overhead stream compression.

Bit strings are plain ``str`` objects over ``'0'``/``'1'``; :func:`pack_bits`
and :func:`unpack_bits` convert to and from MSB-first padded bytes.

RLGR state (all backward adapted, no side information):

* ``kp`` scaled run parameter, ``k = kp >> 2``. With ``k == 0`` every value is
  Golomb-Rice coded; with ``k > 0`` zero runs are coded, a full run of
  ``2**k`` zeros costing a single ``0`` bit.
* ``krp`` scaled Golomb-Rice parameter, ``kr = krp >> 2``.

Both start at zero. Golomb-Rice codewords whose unary prefix would reach
``GR_ESCAPE`` ones switch to an escape form (``GR_ESCAPE`` ones, a 6-bit
length, then the raw value) so a single large coefficient cannot produce an
unbounded prefix or blow the parameter up.
"""
from __future__ import annotations

import lzma

import numpy as np

from .errors import BitstreamError, TruncatedStreamError, UnknownCodecError

LOG2_L = 2
U0, D0 = 3, 1   # no-run mode: zero / nonzero value
U1, D1 = 2, 1   # run mode: complete run / interrupted run
KP_MAX = 24 << LOG2_L
KRP_MAX = 24 << LOG2_L
GR_ESCAPE = 20

OVERHEAD_STORE = 0
OVERHEAD_LZMA = 1
_LZMA_FILTERS = [{"id": lzma.FILTER_LZMA2, "preset": 9 | lzma.PRESET_EXTREME}]


def zigzag(x):
    x = np.asarray(x, dtype=np.int64)
    return np.where(x >= 0, 2 * x, -2 * x - 1)


def unzigzag(u):
    u = np.asarray(u, dtype=np.int64)
    return np.where(u & 1, -((u + 1) >> 1), u >> 1)


def _gr_bits(u: int, kr: int) -> tuple[str, int]:
    p = u >> kr
    if p < GR_ESCAPE:
        code = "1" * p + "0"
        if kr:
            code += format(u & ((1 << kr) - 1), f"0{kr}b")
        return code, p
    nb = u.bit_length()
    return "1" * GR_ESCAPE + format(nb, "06b") + format(u, f"0{nb}b"), GR_ESCAPE


def _adapt_kr(krp: int, p: int) -> int:
    if p == 0:
        return max(0, krp - 2)
    if p > 1:
        return min(KRP_MAX, krp + p + 1)
    return krp


def rlgr_encode(values) -> str:
    """Encode a signed integer sequence; returns a '0'/'1' string."""
    mapped = zigzag(values).tolist()
    out = []
    kp = krp = 0
    run = 0
    for u in mapped:
        k = kp >> LOG2_L
        if k == 0:
            code, p = _gr_bits(u, krp >> LOG2_L)
            out.append(code)
            krp = _adapt_kr(krp, p)
            kp = min(KP_MAX, kp + U0) if u == 0 else max(0, kp - D0)
        elif u == 0:
            run += 1
            if run == 1 << k:
                out.append("0")
                run = 0
                kp = min(KP_MAX, kp + U1)
        else:
            code, p = _gr_bits(u - 1, krp >> LOG2_L)
            out.append("1" + format(run, f"0{k}b") + code)
            krp = _adapt_kr(krp, p)
            run = 0
            kp = max(0, kp - D1)
    if run:
        # decoder truncates the final full-run symbol to the known count
        out.append("0")
    return "".join(out)


def rlgr_decode(bits: str, count: int) -> np.ndarray:
    """Decode ``count`` signed integers from a bit string made by :func:`rlgr_encode`."""
    out: list[int] = []
    kp = krp = 0
    pos = 0
    nbits = len(bits)

    def read_gr(kr):
        nonlocal pos
        j = bits.find("0", pos, pos + GR_ESCAPE)
        if j < 0:
            if pos + GR_ESCAPE + 6 > nbits:
                raise TruncatedStreamError("RLGR stream truncated in escape code")
            pos += GR_ESCAPE
            nb = int(bits[pos:pos + 6], 2)
            pos += 6
            if pos + nb > nbits:
                raise TruncatedStreamError("RLGR stream truncated in escape value")
            u = int(bits[pos:pos + nb], 2) if nb else 0
            pos += nb
            return u, GR_ESCAPE
        p = j - pos
        pos = j + 1
        if kr:
            if pos + kr > nbits:
                raise TruncatedStreamError("RLGR stream truncated in remainder")
            u = (p << kr) | int(bits[pos:pos + kr], 2)
            pos += kr
        else:
            u = p
        return u, p

    while len(out) < count:
        k = kp >> LOG2_L
        if k == 0:
            u, p = read_gr(krp >> LOG2_L)
            out.append(u)
            krp = _adapt_kr(krp, p)
            kp = min(KP_MAX, kp + U0) if u == 0 else max(0, kp - D0)
            continue
        if pos >= nbits:
            raise TruncatedStreamError("RLGR stream truncated in run flag")
        flag = bits[pos]
        pos += 1
        if flag == "0":
            out.extend([0] * min(1 << k, count - len(out)))
            kp = min(KP_MAX, kp + U1)
        else:
            if pos + k > nbits:
                raise TruncatedStreamError("RLGR stream truncated in run length")
            run = int(bits[pos:pos + k], 2)
            pos += k
            u, p = read_gr(krp >> LOG2_L)
            if len(out) + run + 1 > count:
                raise BitstreamError("RLGR run overruns the declared symbol count")
            out.extend([0] * run)
            out.append(u + 1)
            krp = _adapt_kr(krp, p)
            kp = max(0, kp - D1)
    return unzigzag(np.array(out, dtype=np.int64))


def pack_bits(bits: str) -> bytes:
    if not bits:
        return b""
    arr = np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
    return np.packbits(arr).tobytes()


def unpack_bits(data: bytes, nbits: int) -> str:
    if nbits > 8 * len(data):
        raise TruncatedStreamError(f"need {nbits} bits, have {8 * len(data)}")
    arr = np.unpackbits(np.frombuffer(data, dtype=np.uint8))[:nbits]
    return (arr + ord("0")).tobytes().decode("ascii")


def overhead_compress(data: bytes, codec_id: int = OVERHEAD_LZMA) -> bytes:
    """Compress an overhead stream; the codec id lives in the container header."""
    if codec_id == OVERHEAD_STORE:
        return bytes(data)
    if codec_id == OVERHEAD_LZMA:
        return lzma.compress(bytes(data), format=lzma.FORMAT_RAW, filters=_LZMA_FILTERS)
    raise UnknownCodecError(f"unknown overhead codec id {codec_id}")


def overhead_decompress(data: bytes, length: int, codec_id: int = OVERHEAD_LZMA) -> bytes:
    """Inverse of :func:`overhead_compress`; ``length`` is the expected output size."""
    if codec_id == OVERHEAD_STORE:
        out = bytes(data)
    elif codec_id == OVERHEAD_LZMA:
        try:
            out = lzma.decompress(bytes(data), format=lzma.FORMAT_RAW, filters=_LZMA_FILTERS)
        except lzma.LZMAError as exc:
            raise BitstreamError(f"corrupt overhead stream: {exc}") from exc
    else:
        raise UnknownCodecError(f"unknown overhead codec id {codec_id}")
    if len(out) != length:
        raise BitstreamError(f"overhead stream decoded to {len(out)} bytes, expected {length}")
    return out
