"""Command-line front end: ``python -m wmvipd {run,params,sweep-rho,compare}``.

Exit codes: 0 converged (or a finished table), 2 diverged, 3 iteration or
evaluation budget exhausted, 1 usage or data error.
"""

import argparse
import csv
import logging
import math
import os
import re
import sys
from dataclasses import dataclass, field

import numpy as np

from . import experiments as E
from . import params as P
from .dataio import LibsvmFormatError, load_libsvm, write_trace_csv
from .linalg import block_operator_norms, operator_norm
from .solvers import ALGORITHMS, CONVERGED, DIVERGED, MAX_ITER, run

EXPERIMENTS = ("logistic", "perceptron", "least-squares")
DATA_ENV = "WMVIPD_DATA"
PYRIM_FILE = "pyrim_scale"
PYRIM_SHAPE = (74, 27)
ALM_MU = 0.5
SWEEP_BUDGET = 5_000_000
SWEEP_RHOS = (0.0, -1e-5, -1e-4, -1e-3, -2e-3, -5e-3, -9e-3)
SWEEP_ALGOS = ("ncpdhg", "ncspdhg", "cegplus", "alm")
# a converged sweep cell is "slow" when it used more than this multiple of the
# median evaluation count over the converged cells of the same algorithm
SLOW_FACTOR = 10.0
CHECKPOINTS = tuple(10.0 ** -k for k in range(1, 8))
EXIT = {CONVERGED: 0, DIVERGED: 2, MAX_ITER: 3}

DEFAULT_RHO = {"logistic": -2e-3, "perceptron": -2e-3, "least-squares": 0.0}
DEFAULT_C = {
    ("logistic", "ncpdhg"): 0.4,
    ("logistic", "ncspdhg"): 0.1,
    ("perceptron", "ncpdhg"): 0.55,
    ("perceptron", "ncspdhg"): 0.14,
    ("least-squares", "ncpdhg"): 0.05,
    ("least-squares", "ncspdhg"): 0.05,
}

log = logging.getLogger("wmvipd")


class UsageError(Exception):
    pass


def default_c(experiment, algo):
    key = (experiment, "ncspdhg" if algo == "failed" else algo)
    return DEFAULT_C.get(key, 0.1)


@dataclass
class RunSpec:
    experiment: str = "logistic"
    algo: str = "ncpdhg"
    rho: float = None
    c: float = None
    tau: float = 1e-7
    max_iter: int = 1_000_000
    seed: int = 0
    data_path: str = None
    out_path: str = None
    kkt_every: int = 10
    expect_pyrim: bool = False
    synthetic: int = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise UsageError(f"unknown experiment {self.experiment!r}")
        if self.algo not in ALGORITHMS:
            raise UsageError(f"unknown algorithm {self.algo!r}")
        if self.algo == "saga" and self.experiment != "least-squares":
            raise UsageError("saga runs only on least-squares")
        if self.algo == "alm" and self.experiment == "least-squares":
            raise UsageError("alm is set up for logistic and perceptron only")
        if self.rho is None:
            self.rho = DEFAULT_RHO[self.experiment]
        if self.c is None:
            self.c = default_c(self.experiment, self.algo)
        if self.tau <= 0 or self.max_iter < 1 or self.kkt_every < 1:
            raise UsageError("tau must be positive; max-iter and kkt-every at least 1")


@dataclass
class Setup:
    """A problem instance plus the solver configuration and constants behind it."""

    problem: object
    cfg: object
    constants: dict = field(default_factory=dict)


# ---------------------------------------------------------------- data


def resolve_data_path(path=None):
    if path:
        return path
    root = os.environ.get(DATA_ENV)
    if not root:
        raise UsageError(f"no --data given and {DATA_ENV} is unset")
    return os.path.join(root, PYRIM_FILE)


def load_dataset(spec):
    if spec.synthetic is not None:
        return E.synthetic_dataset(seed=spec.synthetic)
    path = resolve_data_path(spec.data_path)
    if not os.path.isfile(path):
        raise UsageError(f"data file not found: {path}")
    try:
        d = load_libsvm(path, PYRIM_SHAPE[1] if spec.expect_pyrim else None)
    except LibsvmFormatError as e:
        raise UsageError(f"{path}: {e}") from None
    if spec.expect_pyrim and d.B.shape != PYRIM_SHAPE:
        raise UsageError(f"expected a {PYRIM_SHAPE[0]}x{PYRIM_SHAPE[1]} dataset, got {d.B.shape}")
    return d


# ---------------------------------------------------------------- setup


_BUILD = {
    "logistic": E.build_logistic,
    "perceptron": E.build_perceptron,
    "least-squares": E.build_least_squares,
}
_BUILD_ALM = {"logistic": E.build_logistic_alm, "perceptron": E.build_perceptron_alm}


def problem_constants(p):
    """Norm and smoothness constants of a saddle problem."""
    a = operator_norm(p.A)
    blocks = block_operator_norms(p.A, p.blocks)
    return {
        "op_norm_A": a,
        "sup_block_norm": float(np.max(blocks)),
        "n_blocks": p.blocks.n_blocks,
        "lip_g2": p.lip_g2,
    }


def configure(experiment, algo, d, rho, c, constants=None):
    """Build the problem for ``algo`` and derive its parameters."""
    if algo == "saga":
        sp = E.SagaProblem.from_dataset(d)
        return Setup(sp, P.SagaParams(P.saga_step_size(d.B)), {"gamma_saga": P.saga_step_size(d.B)})
    p = _BUILD[experiment](d)
    k = dict(constants) if constants else problem_constants(p)
    a, L = k["op_norm_A"], k["lip_g2"]
    if algo == "ncpdhg":
        cfg = P.ncpdhg_params(rho, a, L, c)
    elif algo in ("ncspdhg", "failed"):
        cfg = P.ncspdhg_params(rho, a, k["sup_block_norm"], k["n_blocks"], L, c)
        k["C_x"], k["C_y"], _ = P.descent_constants(cfg, rho, a, k["sup_block_norm"], k["n_blocks"])
    elif algo == "cegplus":
        cfg = P.ceg_params(rho, a, L)
    elif algo == "alm":
        if experiment not in _BUILD_ALM:
            raise UsageError(f"alm is not set up for {experiment}")
        ap = _BUILD_ALM[experiment](d)
        gram = a * a
        gamma = P.alm_step_size(ap.lip_smooth, ALM_MU, gram)
        k["gram_norm"] = gram
        return Setup(ap, P.AlmParams(ALM_MU, gamma), k)
    else:
        raise UsageError(f"unknown algorithm {algo!r}")
    return Setup(p, cfg, k)


def _cfg_items(cfg):
    return {k: v for k, v in vars(cfg).items() if k != "margins"}


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".6g")
    return str(v)


def kv_line(items):
    return " ".join(f"{k}={_fmt(v)}" for k, v in items.items())


def resolved_config(spec, setup):
    cfg = {
        "experiment": spec.experiment, "algo": spec.algo, "rho": repr(spec.rho), "c": repr(spec.c),
        "tau": repr(spec.tau), "max_iter": spec.max_iter, "seed": spec.seed,
        "kkt_every": spec.kkt_every,
        "data": "synthetic:%d" % spec.synthetic if spec.synthetic is not None else spec.data_path,
    }
    cfg.update({k: repr(v) for k, v in _cfg_items(setup.cfg).items()})
    cfg.update({k: repr(v) for k, v in setup.constants.items()})
    return cfg


# ---------------------------------------------------------------- commands


def solve(spec, setup, budget=None):
    kkt_every = 1 if spec.algo == "alm" else spec.kkt_every
    return run(setup.problem, spec.algo, setup.cfg, tau=spec.tau, max_iter=spec.max_iter,
               kkt_every=kkt_every, seed=spec.seed, budget=budget)


def cmd_run(spec, out=None):
    out = out or sys.stdout
    d = load_dataset(spec)
    setup = configure(spec.experiment, spec.algo, d, spec.rho, spec.c)
    trace = solve(spec, setup)
    if spec.out_path:
        write_trace_csv(trace, spec.out_path, resolved_config(spec, setup))
    fin = trace.final
    print(kv_line({
        "experiment": spec.experiment, "algo": spec.algo, "status": trace.status,
        "iterations": fin.iteration, "prox_evals": fin.prox_evals, "kkt": fin.kkt,
        "seconds": fin.elapsed_seconds,
    }), file=out)
    return EXIT[trace.status]


def params_report(experiment, algo, d, rho, c):
    """Flat dict of everything ``params`` prints for one algorithm."""
    setup = configure(experiment, algo, d, rho, c)
    row = {"experiment": experiment, "algo": algo}
    if algo not in ("alm", "saga"):
        row.update(rho=rho)
    if algo in ("ncpdhg", "ncspdhg", "failed"):
        row.update(c=c)
    row.update(_cfg_items(setup.cfg))
    row.update(setup.constants)
    return row


def cmd_params(spec, out=None):
    out = out or sys.stdout
    d = load_dataset(spec)
    if spec.algo == "saga":
        algos = ["saga"]
    else:
        algos = [spec.algo]
    for algo in algos:
        print(kv_line(params_report(spec.experiment, algo, d, spec.rho, spec.c)), file=out)
    return 0


def sweep_cell(experiment, algo, d, rho, c, seeds, tau=1e-7, budget=SWEEP_BUDGET, kkt_every=10):
    """Run one convergence-table cell; returns (converged, detail dict).

    NC-SPDHG cells run every seed and count as converged when at least 80% do.
    """
    try:
        setup = configure(experiment, algo, d, rho, c)
    except (UsageError, P.InfeasibleRhoError, P.ParameterError) as e:
        return False, {"runs": 0, "succeeded": 0, "prox_evals": "", "reason": str(e)}
    ok, evals, statuses = 0, [], []
    for seed in seeds if algo == "ncspdhg" else seeds[:1]:
        tr = run(setup.problem, algo, setup.cfg, tau=tau, max_iter=10**9,
                 kkt_every=1 if algo == "alm" else kkt_every, seed=seed, budget=budget)
        statuses.append(tr.status)
        if tr.status == CONVERGED:
            ok += 1
            evals.append(tr.final.prox_evals)
    runs = len(statuses)
    info = {"runs": runs, "succeeded": ok,
            "prox_evals": int(np.median(evals)) if evals else "",
            "reason": "" if ok == runs else "/".join(sorted(set(statuses) - {CONVERGED}))}
    return ok >= math.ceil(0.8 * runs), info


def mark_cells(cells):
    """Map {rho: (converged, info)} of one algorithm to ok / slow / x marks."""
    evals = [info["prox_evals"] for conv, info in cells.values() if conv]
    med = float(np.median(evals)) if evals else 0.0
    marks = {}
    for rho, (conv, info) in cells.items():
        if not conv:
            marks[rho] = "x"
        elif info["prox_evals"] > SLOW_FACTOR * med:
            marks[rho] = "slow"
        else:
            marks[rho] = "ok"
    return marks


SYMBOL = {"ok": "✓", "x": "✗", "slow": "✓ (s)"}


def cmd_sweep_rho(spec, rhos, seeds, out=None):
    out = out or sys.stdout
    if not rhos:
        raise UsageError("--rhos must list at least one value")
    d = load_dataset(spec)
    table = {}
    rows = []
    for algo in SWEEP_ALGOS:
        c = spec.c if spec.c is not None and spec.algo == algo else default_c(spec.experiment, algo)
        cells = {}
        for rho in rhos:
            if algo == "alm" and cells:
                cells[rho] = next(iter(cells.values()))  # ALM's parameters do not depend on rho
            else:
                cells[rho] = sweep_cell(spec.experiment, algo, d, rho, c, seeds,
                                        tau=spec.tau, kkt_every=spec.kkt_every)
            log.info("%s rho=%g -> %s", algo, rho, cells[rho])
        marks = mark_cells(cells)
        for rho in rhos:
            table[algo, rho] = marks[rho]
            rows.append({"algo": algo, "rho": rho, "mark": marks[rho], **cells[rho][1]})
    width = 9
    print("algo".ljust(10) + "".join(f"{r:g}".rjust(width) for r in rhos), file=out)
    for algo in SWEEP_ALGOS:
        print(algo.ljust(10) + "".join(SYMBOL[table[algo, r]].rjust(width) for r in rhos), file=out)
    if spec.out_path:
        keys = ["algo", "rho", "mark", "runs", "succeeded", "prox_evals", "reason"]
        with open(spec.out_path, "w", newline="") as fh:
            fh.write(f"# budget={SWEEP_BUDGET} tau={spec.tau!r} seeds={list(seeds)}\n")
            w = csv.DictWriter(fh, keys, lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow(r)
    return 0


def checkpoint_rows(trace, checkpoints=CHECKPOINTS):
    out = []
    for tol in checkpoints:
        r = trace.first_reaching(tol)
        out.append((tol, None if r is None else r.prox_evals))
    return out


def cmd_compare(spec, algos, seeds, out=None):
    out = out or sys.stdout
    d = load_dataset(spec)
    outdir = spec.out_path
    if outdir:
        os.makedirs(outdir, exist_ok=True)
    combined = []
    status = 0
    for algo in algos:
        c = default_c(spec.experiment, algo)
        try:
            setup = configure(spec.experiment, algo, d, spec.rho, c)
        except (UsageError, P.InfeasibleRhoError, P.ParameterError) as e:
            print(kv_line({"algo": algo, "status": "error", "reason": repr(str(e))}), file=out)
            status = 1
            continue
        for seed in seeds if algo in ("ncspdhg", "failed") else seeds[:1]:
            sub = RunSpec(spec.experiment, algo, spec.rho, c, spec.tau, spec.max_iter, seed,
                          spec.data_path, None, spec.kkt_every, spec.expect_pyrim, spec.synthetic)
            tr = solve(sub, setup)
            if outdir:
                write_trace_csv(tr, os.path.join(outdir, f"trace_{algo}_seed{seed}.csv"),
                                resolved_config(sub, setup))
            for tol, ev in checkpoint_rows(tr):
                combined.append({"algo": algo, "seed": seed, "tolerance": tol,
                                 "prox_evals": "" if ev is None else ev})
            print(kv_line({"algo": algo, "seed": seed, "status": tr.status,
                           "prox_evals": tr.final.prox_evals, "kkt": tr.final.kkt}), file=out)
    if outdir:
        with open(os.path.join(outdir, "compare.csv"), "w", newline="") as fh:
            w = csv.DictWriter(fh, ["algo", "seed", "tolerance", "prox_evals"], lineterminator="\n")
            w.writeheader()
            w.writerows(combined)
    return status


# ---------------------------------------------------------------- argparse


def _floats(text):
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number list: {text!r}") from None


def _int(text):
    v = float(text)
    if v != int(v):
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(v)


def build_parser():
    ap = argparse.ArgumentParser(prog="wmvipd", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--experiment", choices=EXPERIMENTS, default="logistic")
    common.add_argument("--algo", choices=ALGORITHMS, default="ncpdhg")
    common.add_argument("--rho", type=float)
    common.add_argument("--c", type=float)
    common.add_argument("--tau", type=float, default=1e-7)
    common.add_argument("--max-iter", type=_int, default=1_000_000)
    common.add_argument("--seed", type=_int, default=0)
    common.add_argument("--data", help=f"LIBSVM file (default ${DATA_ENV}/{PYRIM_FILE})")
    common.add_argument("--synthetic", type=_int, metavar="SEED",
                        help="use the built-in synthetic 74x27 surrogate instead of a file")
    common.add_argument("--out")
    common.add_argument("--kkt-every", type=_int, default=10)
    common.add_argument("--expect-pyrim", action="store_true")
    sub.add_parser("run", parents=[common], help="solve once and write a trace")
    sub.add_parser("params", parents=[common], help="print derived parameters")
    sw = sub.add_parser("sweep-rho", parents=[common], help="convergence table over rho")
    sw.add_argument("--rhos", type=_floats, default=list(SWEEP_RHOS))
    sw.add_argument("--seeds", type=_int, default=10, help="NC-SPDHG seeds per cell")
    cp = sub.add_parser("compare", parents=[common], help="prox evaluations per tolerance")
    cp.add_argument("--algos", default=",".join(SWEEP_ALGOS))
    cp.add_argument("--seeds", type=_int, default=10, help="NC-SPDHG seeds")
    return ap


_NUMERIC_FLAGS = ("--rho", "--c", "--tau", "--max-iter", "--seed", "--kkt-every", "--seeds",
                  "--synthetic", "--rhos")
_NEGATIVE = re.compile(r"^-(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?([, ].*)?$")


def _glue_negative_values(argv):
    """Turn ``--rho -2e-3`` into ``--rho=-2e-3``; argparse reads the former as a flag."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _NUMERIC_FLAGS and i + 1 < len(argv) and _NEGATIVE.match(argv[i + 1]):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def parse_args(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    return build_parser().parse_args(_glue_negative_values(argv))


def main(argv=None):
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        spec = RunSpec(args.experiment, args.algo, args.rho, args.c, args.tau, args.max_iter,
                       args.seed, args.data, args.out, args.kkt_every, args.expect_pyrim,
                       args.synthetic)
        if args.command == "run":
            return cmd_run(spec)
        if args.command == "params":
            return cmd_params(spec)
        seeds = list(range(args.seed, args.seed + args.seeds))
        if args.seeds < 1:
            raise UsageError("--seeds must be at least 1")
        if args.command == "sweep-rho":
            return cmd_sweep_rho(spec, args.rhos, seeds)
        algos = [a.strip() for a in args.algos.split(",") if a.strip()]
        bad = [a for a in algos if a not in ALGORITHMS]
        if bad or not algos:
            raise UsageError(f"unknown algorithms in --algos: {bad}")
        return cmd_compare(spec, algos, seeds)
    except (UsageError, P.InfeasibleRhoError, P.ParameterError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
