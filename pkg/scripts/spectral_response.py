"""Tabulate (1 - lambda/2)^k over the random-walk Laplacian spectrum [0, 2]."""
import argparse
from pathlib import Path

import numpy as np

from pcac.graph_filter import spectral_response, write_spectral_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kmax", type=int, default=5)
    ap.add_argument("--points", type=int, default=101)
    ap.add_argument("--csv", default="results/spectral_response.csv")
    args = ap.parse_args()
    Path(args.csv).parent.mkdir(parents=True, exist_ok=True)
    write_spectral_csv(args.csv, range(args.kmax + 1), args.points)
    lam = np.array([0.0, 0.5, 1.0, 1.5, 2.0])
    print("lambda   " + "  ".join(f"{v:6.2f}" for v in lam))
    for k in range(args.kmax + 1):
        print(f"k={k:<6d} " + "  ".join(f"{v:6.3f}" for v in spectral_response(k, lam)))


if __name__ == "__main__":
    main()
