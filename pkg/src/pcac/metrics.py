"""Rate/distortion measures and the qstep sweep harness."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import replace

import numpy as np

from .codec import CodecConfig, decode_sequence, encode_sequence

logger = logging.getLogger(__name__)

RD_FIELDS = ["qstep", "bpv", "psnr_y", "total_bits", "coeff_share", "mv_share", "k_share",
             "container_share"]


def _luma(x) -> np.ndarray:
    colors = getattr(x, "colors", x)
    arr = np.asarray(colors, dtype=np.float64)
    return arr[:, 0] if arr.ndim == 2 else arr


def compute_psnr_y(originals, reconstructions) -> float:
    """Luma PSNR from the frame-averaged normalized squared error.

    Accepts frames (anything with ``colors``) or arrays of Y / YUV rows.
    Returns ``math.inf`` for a perfect reconstruction.
    """
    originals, reconstructions = list(originals), list(reconstructions)
    if len(originals) != len(reconstructions) or not originals:
        raise ValueError("need equal, non-zero frame counts")
    total = 0.0
    for o, r in zip(originals, reconstructions):
        y, yh = _luma(o), _luma(r)
        if y.shape != yh.shape:
            raise ValueError("point counts differ between original and reconstruction")
        total += np.sum((y - yh) ** 2) / (255.0 ** 2 * len(y))
    mse = total / len(originals)
    return math.inf if mse == 0 else -10.0 * math.log10(mse)


def compute_bpv(bits, counts) -> float:
    total_n = float(np.sum(counts))
    if total_n <= 0:
        raise ValueError("total voxel count must be positive")
    return float(np.sum(bits)) / total_n


def rd_point(frames, cfg: CodecConfig, check_decoder: bool = True) -> dict:
    """Encode (and decode) once; returns one CSV row as a dict."""
    frames = list(frames)
    res = encode_sequence(frames, cfg)
    recs = res.reconstructions
    if check_decoder:
        dec = decode_sequence(res.bitstream, [f.coords for f in frames])
        for a, b in zip(recs, dec):
            if not np.array_equal(a.colors, b.colors):
                raise RuntimeError(f"decoder drift at frame {a.frame_index}")
        recs = dec
    total = 8 * len(res.bitstream)
    coeff = sum(r.coeff_bits for r in res.reports)
    mv = sum(r.mv_bits for r in res.reports)
    kb = sum(r.k_bits for r in res.reports)
    return {
        "qstep": float(cfg.qstep),
        "bpv": compute_bpv([r.bits for r in recs], [len(f.coords) for f in frames]),
        "psnr_y": compute_psnr_y(frames, recs),
        "total_bits": total,
        "coeff_share": coeff / total,
        "mv_share": mv / total,
        "k_share": kb / total,
        "container_share": (total - coeff - mv - kb) / total,
    }


def rd_sweep(frames, qsteps, cfg: CodecConfig | None = None) -> list[dict]:
    cfg = cfg or CodecConfig()
    frames = list(frames)
    rows = []
    for q in qsteps:
        row = rd_point(frames, replace(cfg, qstep=float(q)))
        logger.info("qstep %g: %.4f bpv, %.3f dB", q, row["bpv"], row["psnr_y"])
        rows.append(row)
    return rows


def write_rd_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=RD_FIELDS)
        w.writeheader()
        for row in rows:
            w.writerow({k: repr(float(row[k])) if k != "total_bits" else int(row[k]) for k in RD_FIELDS})


def read_rd_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [{k: (int(v) if k == "total_bits" else float(v)) for k, v in row.items()}
                for row in csv.DictReader(fh)]
