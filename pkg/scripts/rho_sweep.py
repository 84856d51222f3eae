"""Convergence table of the logistic experiment over the default rho grid.

    python scripts/rho_sweep.py --out sweep.csv [--synthetic 0] [--seeds 10]
"""

import sys

from wmvipd import cli

if __name__ == "__main__":
    sys.exit(cli.main(["sweep-rho", "--experiment", "logistic", *sys.argv[1:]]))
