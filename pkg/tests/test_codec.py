import io
from dataclasses import replace

import numpy as np
import pytest

from pcac import bitstream as bs
from pcac.codec import (
    CodecConfig,
    decode_sequence,
    encode_frame_inter,
    encode_frame_intra,
    encode_sequence,
)
from pcac.core import PointCloudFrame, block_layout
from pcac.errors import BitstreamError, TruncatedStreamError
from pcac.metrics import compute_bpv
from pcac.motion import ZERO_MOTION, MEConfig
from pcac.synthetic import translating_cube
from pcac.transform import block_basis


@pytest.fixture(scope="module")
def small_seq():
    seq, shifts = translating_cube(n_frames=4, side=20, seed=3, gof_size=8)
    return list(seq), shifts


def _decode_matches(res, frames):
    dec = decode_sequence(res.bitstream, [f.coords for f in frames])
    for a, b in zip(res.reconstructions, dec):
        np.testing.assert_array_equal(a.colors, b.colors)
        assert a.bits == b.bits
    return dec


def test_intra_error_bound_fine_quantizer():
    rng = np.random.default_rng(0)
    coords = np.unique(rng.integers(0, 40, (600, 3)), axis=0)
    frame = PointCloudFrame(coords, rng.uniform(0, 255, coords.shape))
    q = 1.0
    _, rec = encode_frame_intra(frame, CodecConfig(qstep=q))
    for _, idx in block_layout(coords, 16):
        err = np.linalg.norm(frame.colors[idx] - rec.colors[idx], axis=0)
        assert np.all(err <= q / 2 * np.sqrt(len(idx)) + 1e-9)


def test_single_voxel_frame():
    frame = PointCloudFrame([[3, 4, 5]], [[100.0, 120.0, 130.0]])
    res = encode_sequence([frame], CodecConfig(qstep=1.0))
    assert np.max(np.abs(res.reconstructions[0].colors - frame.colors)) <= 0.5
    _decode_matches(res, [frame])


def test_static_scene_cheaper_than_intra():
    seq, _ = translating_cube(n_frames=3, side=20, static=True)
    frames = list(seq)
    res = encode_sequence(frames, CodecConfig(qstep=8.0), with_stats=True)
    for rep in res.reports[1:]:
        assert all(b.motion == (0, 0, 0) for b in rep.blocks)
        assert all(b.sse_filtered == 0 or b.k == 0 for b in rep.blocks)
    intra = encode_sequence(frames, CodecConfig(qstep=8.0, gof_size=1))
    n = [len(f.coords) for f in frames]
    assert compute_bpv(res.bits, n) < compute_bpv(intra.bits, n)
    _decode_matches(res, frames)


def test_static_scene_residual_energy():
    # against an undistorted reference, identical frames leave no residual
    seq, _ = translating_cube(n_frames=2, side=20, static=True)
    f0, f1 = seq[0], seq[1]
    _, _, stats = encode_frame_inter(f1, f0, f0, CodecConfig(qstep=8.0), with_stats=True)
    ratio = sum(b.sse_filtered for b in stats) / sum(b.energy for b in stats)
    assert ratio <= 1e-9


def test_rigid_shift_motion_recovered(small_seq):
    frames, shifts = small_seq
    res = encode_sequence(frames, CodecConfig(qstep=16.0), with_stats=True)
    for t in range(1, len(frames)):
        mvs = {b.motion for b in res.reports[t].blocks}
        assert mvs == {tuple(int(v) for v in -shifts[t])}


def test_gof_frame_types():
    seq, _ = translating_cube(n_frames=10, side=12, seed=1, gof_size=8)
    frames = list(seq)
    res = encode_sequence(frames, CodecConfig(qstep=32.0, gof_size=8))
    types = [r.frame_type for r in res.reconstructions]
    assert types == [bs.INTRA] + [bs.INTER] * 7 + [bs.INTRA, bs.INTER]
    _decode_matches(res, frames)


def test_bits_equal_serialized_size(small_seq):
    frames, _ = small_seq
    res = encode_sequence(frames, CodecConfig(qstep=16.0))
    assert sum(res.bits) == 8 * len(res.bitstream)
    src = io.BytesIO(res.bitstream)
    header = bs.read_header(src)
    for t, rec in enumerate(res.reconstructions):
        start = src.tell()
        bs.read_frame(src)
        expect = 8 * (src.tell() - start) + (8 * header.size() if t == 0 else 0)
        assert rec.bits == expect


@pytest.mark.parametrize("cfg", [
    CodecConfig(qstep=16.0, me=MEConfig(mode=ZERO_MOTION)),
    CodecConfig(qstep=16.0, overhead_codec_id=0),
    CodecConfig(qstep=4.0, kmax=0),
    CodecConfig(qstep=16.0, fixed_k=2),
    CodecConfig(qstep=16.0, block_size=8),
])
def test_variants_decode_exactly(small_seq, cfg):
    frames, _ = small_seq
    _decode_matches(encode_sequence(frames, cfg), frames)


def test_zero_motion_mode_sends_no_mvs(small_seq):
    frames, _ = small_seq
    res = encode_sequence(frames, CodecConfig(me=MEConfig(mode=ZERO_MOTION)), with_stats=True)
    assert all(r.mv_bits == 0 for r in res.reports)
    assert all(b.motion == (0, 0, 0) for r in res.reports for b in r.blocks)


def test_truncated_bitstream(small_seq):
    frames, _ = small_seq
    res = encode_sequence(frames[:2], CodecConfig(qstep=32.0))
    geo = [f.coords for f in frames[:2]]
    for cut in (10, len(res.bitstream) // 2, len(res.bitstream) - 1):
        with pytest.raises(TruncatedStreamError):
            decode_sequence(res.bitstream[:cut], geo)
    with pytest.raises(BitstreamError):
        decode_sequence(res.bitstream + b"\x00", geo)
    with pytest.raises(BitstreamError):
        decode_sequence(res.bitstream, geo[:1])


def test_wrong_geometry_rejected(small_seq):
    frames, _ = small_seq
    res = encode_sequence(frames[:1], CodecConfig(qstep=32.0))
    with pytest.raises(BitstreamError):
        decode_sequence(res.bitstream, [np.array([[0, 0, 0]])])


def test_build_tag_mismatch_warns(small_seq, monkeypatch):
    frames, _ = small_seq
    res = encode_sequence(frames[:1], CodecConfig(qstep=32.0))
    import pcac.codec as codec_mod
    monkeypatch.setattr(codec_mod, "basis_build_tag", lambda: 12345)
    with pytest.warns(RuntimeWarning):
        decode_sequence(res.bitstream, [frames[0].coords])


def test_encoder_is_deterministic(small_seq):
    frames, _ = small_seq
    cfg = CodecConfig(qstep=16.0)
    assert encode_sequence(frames, cfg).bitstream == encode_sequence(frames, cfg).bitstream


def test_config_validation():
    with pytest.raises(ValueError):
        CodecConfig(qstep=0)
    with pytest.raises(ValueError):
        CodecConfig(gof_size=0)
    assert replace(CodecConfig(), qstep=4.0).qstep == 4.0


def test_basis_cache_shared_between_calls():
    coords = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0]])
    assert block_basis(coords) is block_basis(coords + 16)
