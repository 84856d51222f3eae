"""Print the derived step sizes for every experiment/algorithm pair.

    python scripts/param_tables.py [--synthetic 0]

Reads pyrim_scale from $WMVIPD_DATA unless --synthetic is given.
"""

import sys

from wmvipd import cli

PAIRS = {
    "logistic": ("ncpdhg", "ncspdhg", "cegplus", "alm"),
    "perceptron": ("ncpdhg", "ncspdhg", "cegplus", "alm"),
    "least-squares": ("ncpdhg", "ncspdhg", "saga"),
}


def main(argv):
    status = 0
    for experiment, algos in PAIRS.items():
        for algo in algos:
            print(f"## {experiment} / {algo}", flush=True)
            status |= cli.main(["params", "--experiment", experiment, "--algo", algo, *argv])
    return status


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
