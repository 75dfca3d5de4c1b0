import math

import numpy as np
import pytest

from pcac.codec import CodecConfig
from pcac.metrics import (
    RD_FIELDS,
    compute_bpv,
    compute_psnr_y,
    rd_point,
    rd_sweep,
    read_rd_csv,
    write_rd_csv,
)
from pcac.synthetic import cube_shell, random_shifts, translating_cube


def test_psnr_perfect_is_inf():
    y = np.array([[10.0, 0, 0], [20.0, 0, 0]])
    assert compute_psnr_y([y], [y]) == math.inf


def test_psnr_zero_db():
    o = np.zeros((4, 3))
    r = np.full((4, 3), 255.0)
    assert compute_psnr_y([o], [r]) == pytest.approx(0.0, abs=1e-12)


def test_psnr_averages_mse_over_frames():
    # normalized MSE of 1e-4 and 3e-4 average to 2e-4
    n = 100
    o = np.zeros(n)
    r1 = np.full(n, 255.0 * math.sqrt(1e-4))
    r2 = np.full(n, 255.0 * math.sqrt(3e-4))
    assert compute_psnr_y([o, o], [r1, r2]) == pytest.approx(36.9897, abs=1e-3)


def test_psnr_uses_luma_only():
    o = np.zeros((3, 3))
    r = o.copy()
    r[:, 1:] = 200
    assert compute_psnr_y([o], [r]) == math.inf


def test_psnr_errors():
    with pytest.raises(ValueError):
        compute_psnr_y([], [])
    with pytest.raises(ValueError):
        compute_psnr_y([np.zeros(3)], [np.zeros(4)])


def test_bpv_examples():
    assert compute_bpv([1000, 1000], [500, 500]) == 2.0
    assert compute_bpv([4000], [1000]) == 4.0
    with pytest.raises(ValueError):
        compute_bpv([1], [0])


def test_synthetic_helpers():
    assert len(cube_shell(92)) == 92 ** 3 - 90 ** 3
    s = random_shifts(50, np.random.default_rng(0), 2, 6)
    m = np.abs(s).max(axis=1)
    assert np.all((m >= 2) & (m <= 6))
    seq, shifts = translating_cube(n_frames=3, side=10)
    assert np.all(seq[0].coords >= 0)
    np.testing.assert_array_equal(seq[1].coords - seq[0].coords, np.broadcast_to(shifts[1], seq[0].coords.shape))


@pytest.fixture(scope="module")
def sweep_rows():
    seq, _ = translating_cube(n_frames=3, side=16, seed=5)
    return rd_sweep(list(seq), [8, 16, 32, 64], CodecConfig())


def test_rd_sweep_monotone(sweep_rows):
    bpv = [r["bpv"] for r in sweep_rows]
    psnr = [r["psnr_y"] for r in sweep_rows]
    assert all(a > b for a, b in zip(bpv, bpv[1:]))
    assert all(a > b for a, b in zip(psnr, psnr[1:]))
    for r in sweep_rows:
        total = r["coeff_share"] + r["mv_share"] + r["k_share"] + r["container_share"]
        assert total == pytest.approx(1.0)


def test_rd_csv_round_trip(sweep_rows, tmp_path):
    p = tmp_path / "rd.csv"
    write_rd_csv(sweep_rows, p)
    assert p.read_text().splitlines()[0] == ",".join(RD_FIELDS)
    back = read_rd_csv(p)
    assert back == [{k: r[k] for k in RD_FIELDS} for r in sweep_rows]


def test_rd_point_total_bits_match_bpv():
    seq, _ = translating_cube(n_frames=2, side=10, seed=2)
    frames = list(seq)
    row = rd_point(frames, CodecConfig(qstep=16.0))
    assert row["total_bits"] == pytest.approx(row["bpv"] * sum(len(f.coords) for f in frames))
