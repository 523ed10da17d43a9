"""Write the work-curve, phase-diagram and efficiency datasets.

    python3 scripts/figure_datasets.py --out figures
"""

import argparse
import sys

from sqthermo.cli import main as cli_main


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="figures")
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    args = ap.parse_args()
    return cli_main(["figures", "--out", args.out, "--format", args.format])


if __name__ == "__main__":
    sys.exit(main())
