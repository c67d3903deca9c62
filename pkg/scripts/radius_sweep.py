"""Parseval ratios of a saved wavelet over a range of box radii.

Shows how the truncated wavelet-system energy grows with the lattice box,
for both W_0 translation sets.

    python scripts/radius_sweep.py out/frames/psi.bin --radii 2 4 6 8 --Q 16
"""

import argparse
import csv

from hfmra.config import RunConfig
from hfmra.frames import frame_test_fields, parseval_check
from hfmra.pipeline import FramesSetup
from hfmra.plancherel import read_field


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("psi")
    ap.add_argument("--radii", type=int, nargs="+", default=[2, 4, 6, 8])
    ap.add_argument("--Q", type=int, default=16)
    ap.add_argument("--csv", default="radius_sweep.csv")
    args = ap.parse_args()
    cfg = RunConfig()
    cfg.frames.Q = args.Q
    setup = FramesSetup(cfg.validate())
    psi = read_field(args.psi)
    if psi.grid != setup.grid:
        raise SystemExit("psi dump does not match the frames grid; pass the Q it was built with")
    tests = frame_test_fields(setup.sys, cfg.seeds.count, cfg.seeds.span_corpus, "span", setup.j_range)
    rows = []
    for half in (True, False):
        reps = parseval_check(psi, setup.lat, setup.j_range, max(args.radii), tests, setup.basis, half=half, radii=args.radii)
        for R, r in sorted(reps.items()):
            rows.append(("half" if half else "full", R, r.lower_est, r.upper_est, r.tightness_residual))
            print(f"{rows[-1][0]:4s} R={R:2d}  [{r.lower_est:.4f}, {r.upper_est:.4f}]  residual {r.tightness_residual:.4f}")
    with open(args.csv, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["translations", "radius", "lower_est", "upper_est", "tightness_residual"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
