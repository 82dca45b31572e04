"""Write the data behind every figure preset to one CSV per figure."""

import argparse
import sys
from pathlib import Path

from su11nco import cli


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="figures")
    ap.add_argument("--points", type=int, default=cli.DEFAULT_POINTS)
    ap.add_argument("--skip", action="append", default=[], help="preset to leave out (repeatable), e.g. fig12")
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    worst = 0
    for name in cli.FIGURES:
        if name in args.skip:
            continue
        code = cli.main(["figure", name, "--points", str(args.points), "--out", str(out / f"{name}.csv")])
        print(f"{name}: exit {code}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
