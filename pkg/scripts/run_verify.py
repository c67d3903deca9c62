"""Run the verification suites on a config and print a compact table.

    python scripts/run_verify.py [config.json] [--out out/verify]
"""

import argparse
import json
from pathlib import Path

from hfmra.config import RunConfig, dump_json, load_config
from hfmra.suites import run_verify


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("config", nargs="?")
    ap.add_argument("--out", default="out/verify")
    args = ap.parse_args()
    cfg = load_config(args.config) if args.config else RunConfig().validate()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = run_verify(cfg, out)
    dump_json(report, out / "verify_report.json")
    for suite, items in report["suites"].items():
        for it in items:
            res = it.get("residual")
            res = f"{res:10.3e}" if isinstance(res, (int, float)) else " " * 10
            print(f"{suite:15s} {'ok ' if it['pass'] else 'BAD'} {res}  {it['name']}")


if __name__ == "__main__":
    main()
