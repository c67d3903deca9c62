"""Full frame pipeline with a short summary of the key numbers.

    python scripts/run_frames.py [config.json] [--out out/frames] [--Q 16]
"""

import argparse

from hfmra.config import RunConfig, load_config
from hfmra.pipeline import run_frames


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("config", nargs="?")
    ap.add_argument("--out", default="out/frames")
    ap.add_argument("--Q", type=int, help="override the frames grid resolution")
    args = ap.parse_args()
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.Q:
        cfg.frames.Q = args.Q
    cfg.validate()
    status, rep = run_frames(cfg, args.out)
    print(f"status {status}, max_ratio {rep['max_ratio']}")
    if "optimizer" not in rep:
        return
    print(f"optimizer reduction {rep['optimizer']['reduction']:.3e} over {rep['optimizer']['steps']} steps")
    for name, r in rep["scaling"].items():
        print(f"scaling {name:8s} bounds [{r['lower_est']:.4f}, {r['upper_est']:.4f}]")
    for label, sweep in rep["parseval"].items():
        cells = "  ".join(f"R={R}: [{r['lower_est']:.3f}, {r['upper_est']:.3f}]" for R, r in sweep.items())
        print(f"parseval {label:4s} {cells}")
    for c in rep["criteria"]:
        print(f"  {'ok ' if c['pass'] else 'BAD'} {c['name']}")


if __name__ == "__main__":
    main()
