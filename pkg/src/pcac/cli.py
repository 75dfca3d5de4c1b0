"""Command line entry point: encode, decode, rd-sweep, spectral."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .codec import CodecConfig, decode_sequence, encode_sequence
from .core import load_sequence, save_ply, yuv_to_rgb
from .entropy import OVERHEAD_LZMA, OVERHEAD_STORE
from .errors import BitstreamError, PcacError, PlyError
from .graph_filter import write_spectral_csv
from .metrics import compute_bpv, compute_psnr_y, rd_sweep, write_rd_csv
from .motion import FULL, ZERO_MOTION, MEConfig
from .synthetic import translating_cube

logger = logging.getLogger("pcac")

_ME_MODES = {"full": FULL, "zmv": ZERO_MOTION}
_OVERHEAD = {"store": OVERHEAD_STORE, "lz": OVERHEAD_LZMA}

EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_BITSTREAM = 4


def _add_codec_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gof", type=int, default=8)
    p.add_argument("--block-size", type=int, default=16)
    p.add_argument("--qstep", type=float, default=16.0)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--beta", type=int, default=1)
    p.add_argument("--region", type=int, default=61)
    p.add_argument("--kmax", type=int, default=5)
    p.add_argument("--me", choices=sorted(_ME_MODES), default="full")
    p.add_argument("--overhead-codec", choices=sorted(_OVERHEAD), default="lz")
    p.add_argument("--frames", type=int, default=None, help="use only the first N frames")


def _config(args) -> CodecConfig:
    me = MEConfig(alpha=args.alpha, beta=args.beta, region_side=args.region, mode=_ME_MODES[args.me])
    return CodecConfig(qstep=args.qstep, gof_size=args.gof, block_size=args.block_size, me=me,
                       kmax=args.kmax, overhead_codec_id=_OVERHEAD[args.overhead_codec])


def _frames(args):
    if getattr(args, "input", None):
        return list(load_sequence(args.input, args.frames))
    seq, _ = translating_cube(n_frames=args.frames or 8, side=args.synthetic_side)
    return list(seq)


def cmd_encode(args) -> int:
    cfg = _config(args)
    frames = list(load_sequence(args.input, args.frames, cfg.gof_size))
    res = encode_sequence(frames, cfg)
    Path(args.output).write_bytes(res.bitstream)
    bpv = compute_bpv(res.bits, [len(f.coords) for f in frames])
    psnr = compute_psnr_y(frames, res.reconstructions)
    print(f"frames={len(frames)} bytes={len(res.bitstream)} bpv={bpv:.4f} psnr_y={psnr:.3f}")
    return 0


def cmd_decode(args) -> int:
    geometry = list(load_sequence(args.geometry))
    recs = decode_sequence(Path(args.bitstream).read_bytes(), geometry)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    for rec in recs:
        save_ply(out / f"frame_{rec.frame_index:04d}.ply", rec.coords, yuv_to_rgb(rec.colors))
    print(f"decoded {len(recs)} frames into {out}")
    return 0


def cmd_rd_sweep(args) -> int:
    cfg = _config(args)
    frames = _frames(args)
    qsteps = [float(q) for q in args.qsteps.split(",") if q.strip()]
    rows = rd_sweep(frames, qsteps, cfg)
    write_rd_csv(rows, args.csv)
    for r in rows:
        print(f"qstep={r['qstep']:g} bpv={r['bpv']:.4f} psnr_y={r['psnr_y']:.3f}")
    return 0


def cmd_spectral(args) -> int:
    write_spectral_csv(args.csv, range(0, args.kmax + 1), args.points)
    print(f"wrote {args.csv}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pcac", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="encode a directory of PLY frames")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    _add_codec_args(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode a bitstream given the frame geometry")
    p.add_argument("--bitstream", required=True)
    p.add_argument("--geometry", required=True, help="directory of PLY frames (colors ignored)")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("rd-sweep", help="rate-distortion sweep over quantizer steps")
    p.add_argument("--qsteps", default="8,16,32,64")
    p.add_argument("--csv", required=True)
    p.add_argument("--input", default=None, help="PLY directory; default is a synthetic cube")
    p.add_argument("--synthetic-side", type=int, default=92)
    _add_codec_args(p)
    p.set_defaults(func=cmd_rd_sweep)

    p = sub.add_parser("spectral", help="write the filter frequency response as CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--kmax", type=int, default=5)
    p.add_argument("--points", type=int, default=101)
    p.set_defaults(func=cmd_spectral)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except PlyError as exc:
        print(f"error[input]: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as exc:
        print(f"error[input]: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BitstreamError as exc:
        print(f"error[bitstream]: {exc}", file=sys.stderr)
        return EXIT_BITSTREAM
    except (PcacError, ValueError) as exc:
        print(f"error[config]: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
