"""Write per-algorithm KKT traces and the tolerance checkpoint table for each experiment.

    python scripts/compare_traces.py OUTDIR [extra cli flags, e.g. --synthetic 0]

Each experiment gets its own subdirectory holding trace_<algo>_seed<k>.csv
files and compare.csv; the traces are what the convergence plots are drawn from.
"""

import os
import sys

from wmvipd import cli

ALGOS = {
    "logistic": "ncpdhg,ncspdhg,cegplus,alm",
    "perceptron": "ncpdhg,ncspdhg,cegplus,alm",
    "least-squares": "ncpdhg,ncspdhg,saga",
}


def main(argv):
    if not argv:
        print(__doc__)
        return 1
    root, extra = argv[0], argv[1:]
    status = 0
    for experiment, algos in ALGOS.items():
        out = os.path.join(root, experiment)
        os.makedirs(out, exist_ok=True)
        print(f"## {experiment}", flush=True)
        status |= cli.main(["compare", "--experiment", experiment, "--algos", algos, "--out", out, *extra])
    return status


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
