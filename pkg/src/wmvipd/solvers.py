"""Iteration engines and the run loop.

Each algorithm is an ``init`` / ``step`` pair acting on a :class:`SolverState`;
:func:`run` drives a step function until the KKT error drops below ``tau``,
the iterate blows up, or the iteration/evaluation budget is exhausted.

Proximal-evaluation accounting: every application of a non-identity primal
block prox counts one, a non-trivial prox of g counts one, and identity proxes
are free. Baselines without proxes count their oracle calls instead (one per
inner gradient step for ALM on a smooth problem, one per sample gradient for
SAGA) so that evaluation budgets apply to them as well.
"""

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .experiments import AlmProblem, SagaProblem
from .params import AlmParams, CegParams, NcPdhgParams, NcSpdhgParams, SagaParams
from .problem import DIVERGENCE_KKT, PrimalDualPoint, ResidualPoint, SaddleProblem
from .rng import XorShift64Star

log = logging.getLogger(__name__)

CONVERGED = "Converged"
DIVERGED = "Diverged"
MAX_ITER = "MaxIterReached"

REFRESH_INTERVAL = 1000


@dataclass
class SolverState:
    x: np.ndarray
    y: np.ndarray
    Ax: np.ndarray
    iteration: int = 0
    prox_evals: int = 0
    rng: object = None
    extra: dict = field(default_factory=dict)

    @property
    def z(self):
        return PrimalDualPoint(self.x, self.y)

    def copy(self):
        extra = {k: (v.copy() if isinstance(v, np.ndarray) else v) for k, v in self.extra.items()}
        return SolverState(
            self.x.copy(), self.y.copy(), self.Ax.copy(), self.iteration, self.prox_evals,
            None if self.rng is None else self.rng.copy(), extra,
        )

    def is_finite(self):
        return bool(np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y)))


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    prox_evals: int
    kkt: float
    elapsed_seconds: float


@dataclass
class Trace:
    records: list = field(default_factory=list)
    status: str = MAX_ITER
    meta: dict = field(default_factory=dict)

    @property
    def final(self):
        return self.records[-1] if self.records else None

    def first_reaching(self, tol):
        """First record with kkt <= tol, or None."""
        for r in self.records:
            if r.kkt <= tol:
                return r
        return None


# ---------------------------------------------------------------- states


def init_saddle_state(p, z0=None, seed=None):
    if z0 is None:
        z0 = p.zero_point()
    p.check_point(z0)
    x = np.array(z0.x, dtype=float)
    y = np.array(z0.y, dtype=float)
    rng = None if seed is None else XorShift64Star(seed)
    return SolverState(x, y, p.A @ x, rng=rng)


def _block_columns(p, s):
    cols = s.extra.get("cols")
    if cols is None:
        A = p.A
        cols = [np.ascontiguousarray(A[:, p.blocks.slice(i)]) for i in range(p.blocks.n_blocks)]
        s.extra["cols"] = cols
    return cols


# ---------------------------------------------------------------- NC-PDHG


def ncpdhg_step(p, s, cfg):
    """One full primal-dual step with alpha-scaled extrapolation."""
    A = p.A
    gx, gy, alpha = cfg.gamma_x, cfg.gamma_y, cfg.alpha
    x, y = s.x, s.y
    g2_y = p.grad_g2(y) if p.grad_g2 is not None else None
    f2_x = p.grad_f2(x) if p.grad_f2 is not None else None

    y_hat = y + gy * (s.Ax if g2_y is None else s.Ax - g2_y)
    y_bar = p.prox_g(y_hat, gy)
    aty = A.T @ y_bar
    x_hat = x - gx * (aty if f2_x is None else f2_x + aty)
    x_bar = p.prox_f(x_hat, gx)
    Ax_bar = A @ x_bar

    f2_xb = p.grad_f2(x_bar) if f2_x is not None else None
    g2_yb = p.grad_g2(y_bar) if g2_y is not None else None
    x_new = x + alpha * (x_bar - x_hat - gx * (aty if f2_xb is None else f2_xb + aty))
    y_new = y + alpha * (y_bar - y_hat + gy * (Ax_bar if g2_yb is None else Ax_bar - g2_yb))

    f_bar = (x - x_bar) / gx
    if f2_x is not None:
        f_bar += f2_xb - f2_x
    g_bar = (y - y_bar) / gy + s.Ax - Ax_bar
    if g2_y is not None:
        g_bar += g2_yb - g2_y
    s.extra["residual"] = ResidualPoint(f_bar, g_bar)

    s.x, s.y = x_new, y_new
    s.Ax = A @ x_new
    s.iteration += 1
    s.prox_evals += p.n_prox_blocks + (0 if p.g_is_zero else 1)
    return s


# ---------------------------------------------------------------- NC-SPDHG


def spdhg_block_update(p, s, cfg, i, failed=False):
    """Randomized step with the block index ``i`` given.

    Only block ``i`` of the primal forward/prox step is formed. With
    ``failed=True`` the dual correction carries an extra factor alpha.
    """
    cols = _block_columns(p, s)
    gx, gy, alpha, theta = cfg.gamma_x, cfg.gamma_y, cfg.alpha, cfg.theta
    y = s.y
    g2_y = p.grad_g2(y) if p.grad_g2 is not None else None

    y_hat = y + gy * (s.Ax if g2_y is None else s.Ax - g2_y)
    y_bar = p.prox_g(y_hat, gy)

    sl = p.blocks.slice(i)
    A_i = cols[i]
    x_i = s.x[sl]
    x_bar_i = p.prox_f_block(i, x_i - gx * (A_i.T @ y_bar), gx)
    delta = alpha * (x_bar_i - x_i)
    A_delta = A_i @ delta

    coef = gy * theta * (alpha if failed else 1.0)
    y_new = (1.0 - alpha) * y + alpha * y_bar + coef * A_delta
    if g2_y is not None:
        y_new += alpha * gy * (g2_y - p.grad_g2(y_bar))

    s.x[sl] = x_i + delta
    s.y = y_new
    s.Ax = s.Ax + A_delta
    s.iteration += 1
    if s.iteration % REFRESH_INTERVAL == 0:
        s.Ax = p.A @ s.x
    s.prox_evals += (0 if p.identity_blocks[i] else 1) + (0 if p.g_is_zero else 1)
    return s


def _check_theta(p, cfg):
    if int(cfg.theta) != p.blocks.n_blocks:
        raise ValueError(f"theta = {cfg.theta} but the problem has {p.blocks.n_blocks} blocks")


def ncspdhg_step(p, s, cfg):
    """Draw a block uniformly and apply :func:`spdhg_block_update`."""
    return spdhg_block_update(p, s, cfg, s.rng.below(p.blocks.n_blocks))


def failed_spdhg_step(p, s, cfg):
    """The variant whose dual correction is scaled by alpha twice (does not converge)."""
    return spdhg_block_update(p, s, cfg, s.rng.below(p.blocks.n_blocks), failed=True)


def spdhg_full_residual(p, s, cfg):
    """Residual at the full (x_bar, y_bar) that the current state would produce."""
    gx, gy = cfg.gamma_x, cfg.gamma_y
    y_hat = s.y + gy * (s.Ax - p.g2_grad(s.y))
    y_bar = p.prox_g(y_hat, gy)
    x_bar = p.prox_f(s.x - gx * (p.A.T @ y_bar), gx)
    f_bar = (s.x - x_bar) / gx
    g_bar = (s.y - y_bar) / gy + p.g2_grad(y_bar) - p.g2_grad(s.y) + p.A @ (s.x - x_bar)
    return ResidualPoint(f_bar, g_bar), x_bar, y_bar


# ---------------------------------------------------------------- CEG+


def _vi_operator(p, x, y, Ax=None):
    Ax = p.A @ x if Ax is None else Ax
    fx = p.A.T @ y
    if p.grad_f2 is not None:
        fx = fx + p.grad_f2(x)
    fy = -Ax
    if p.grad_g2 is not None:
        fy = fy + p.grad_g2(y)
    return fx, fy


def ceg_plus_step(p, s, cfg):
    """Constrained EG+ with constant steps.

    z_bar = T(z - g F(z)),  z+ = z + alpha * ((z_bar - g F(z_bar)) - (z - g F(z)))
    where T applies the proxes of f and g at step g. For T = identity this is
    EG+ (z+ = z - alpha g F(z_bar)).
    """
    g, alpha = cfg.gamma, cfg.alpha
    fx, fy = _vi_operator(p, s.x, s.y, s.Ax)
    hx, hy = s.x - g * fx, s.y - g * fy
    x_bar = p.prox_f(hx, g)
    y_bar = p.prox_g(hy, g)
    fbx, fby = _vi_operator(p, x_bar, y_bar)
    s.x = s.x + alpha * (x_bar - g * fbx - hx)
    s.y = s.y + alpha * (y_bar - g * fby - hy)
    s.Ax = p.A @ s.x
    s.iteration += 1
    s.prox_evals += p.n_prox_blocks + (0 if p.g_is_zero else 1)
    return s


# ---------------------------------------------------------------- ALM


def init_alm_state(ap, v0=None, lam0=None):
    v = np.zeros(ap.dim) if v0 is None else np.array(v0, dtype=float)
    lam = np.zeros(ap.n_constraints) if lam0 is None else np.array(lam0, dtype=float)
    z = ap.to_point(v, lam)
    s = SolverState(z.x, z.y, np.zeros(0))
    s.extra.update(v=v, lam=lam, gram=ap.C.T @ ap.C, ctr=ap.C.T @ ap.r, inner_iters=0)
    return s


def alm_step(ap, s, cfg):
    """Inner (proximal) gradient solve of the augmented Lagrangian, then a multiplier step."""
    C, r = ap.C, ap.r
    mu, step = cfg.mu, cfg.inner_gamma
    gram, ctr = s.extra["gram"], s.extra["ctr"]
    v, lam = s.extra["v"], s.extra["lam"]
    base = C.T @ lam - mu * ctr
    evals = 0
    it = 0
    for it in range(1, cfg.inner_max + 1):
        grad = base + mu * (gram @ v)
        if ap.grad_smooth is not None:
            grad = grad + ap.grad_smooth(v)
        if ap.prox is not None:
            v_new = ap.prox(v - step * grad, step)
            gmap = (v - v_new) / step
            evals += ap.prox_blocks
        else:
            v_new = v - step * grad
            gmap = grad
            evals += 1
        v = v_new
        if not np.isfinite(v).all() or np.linalg.norm(gmap) <= cfg.inner_tol:
            break
    lam = lam + mu * (C @ v - r)
    z = ap.to_point(v, lam)
    s.x, s.y = z.x, z.y
    s.extra["v"], s.extra["lam"] = v, lam
    s.extra["inner_iters"] += it
    s.iteration += 1
    s.prox_evals += evals
    return s


# ---------------------------------------------------------------- SAGA


def init_saga_state(sp, w0=None, seed=0):
    w = np.zeros(sp.B.shape[1]) if w0 is None else np.array(w0, dtype=float)
    table = sp.B * (sp.B @ w - sp.b)[:, None]
    s = SolverState(w, np.zeros(0), np.zeros(0), rng=XorShift64Star(seed))
    s.extra.update(table=table, mean=table.mean(axis=0))
    s.prox_evals = sp.B.shape[0]
    return s


def saga_step(sp, s, cfg):
    """w <- w - gamma (grad_j(w) - table_j + mean(table))."""
    m = sp.B.shape[0]
    j = s.rng.below(m)
    table, mean = s.extra["table"], s.extra["mean"]
    g = sp.sample_grad(j, s.x)
    diff = g - table[j]
    s.x = s.x - cfg.gamma * (diff + mean)
    s.extra["mean"] = mean + diff / m
    table[j] = g
    s.iteration += 1
    s.prox_evals += 1
    return s


# ---------------------------------------------------------------- run loop

ALGORITHMS = ("ncpdhg", "ncspdhg", "failed", "cegplus", "alm", "saga")

_STEP = {
    "ncpdhg": ncpdhg_step,
    "ncspdhg": ncspdhg_step,
    "failed": failed_spdhg_step,
    "cegplus": ceg_plus_step,
    "alm": alm_step,
    "saga": saga_step,
}

_CFG_TYPE = {
    "ncpdhg": NcPdhgParams,
    "ncspdhg": NcSpdhgParams,
    "failed": NcSpdhgParams,
    "cegplus": CegParams,
    "alm": AlmParams,
    "saga": SagaParams,
}


def init_state(problem, algo, cfg, seed=0, z0=None):
    if algo not in _STEP:
        raise ValueError(f"unknown algorithm {algo!r}; expected one of {ALGORITHMS}")
    if not isinstance(cfg, _CFG_TYPE[algo]):
        raise TypeError(f"{algo} expects {_CFG_TYPE[algo].__name__}, got {type(cfg).__name__}")
    if algo == "alm":
        if not isinstance(problem, AlmProblem):
            raise TypeError("alm runs on an AlmProblem")
        if z0 is None:
            return init_alm_state(problem)
        return init_alm_state(problem, *problem.from_point(z0))
    if algo == "saga":
        if not isinstance(problem, SagaProblem):
            raise TypeError("saga runs on a SagaProblem")
        return init_saga_state(problem, None if z0 is None else z0.x, seed)
    if not isinstance(problem, SaddleProblem):
        raise TypeError(f"{algo} runs on a SaddleProblem")
    if algo in ("ncspdhg", "failed"):
        _check_theta(problem, cfg)
        return init_saddle_state(problem, z0, seed)
    return init_saddle_state(problem, z0)


def state_kkt(problem, algo, s):
    if algo == "alm":
        return float(problem.saddle.kkt(problem.to_point(s.extra["v"], s.extra["lam"])))
    if algo == "saga":
        return problem.kkt(s.x)
    return float(problem.kkt(s.z))


def run(problem, algo, cfg, tau=1e-7, max_iter=1_000_000, kkt_every=10, seed=0,
        budget=None, z0=None):
    """Iterate ``algo`` until tau-stationarity, divergence, or the budget runs out.

    ``budget`` caps the proximal-evaluation count (checked at KKT evaluations).
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    if kkt_every < 1:
        raise ValueError("kkt_every must be >= 1")
    s = init_state(problem, algo, cfg, seed, z0)
    step = _STEP[algo]
    trace = Trace(meta={"algo": algo, "tau": tau, "seed": seed, "kkt_every": kkt_every,
                        "max_iter": max_iter, "budget": budget})
    if algo == "cegplus":
        trace.meta["variant"] = "constrained EG+ (alpha-averaged forward-backward-forward)"
    t0 = time.perf_counter()

    def record():
        if not s.is_finite():
            k = float("inf")
        else:
            k = state_kkt(problem, algo, s)
        trace.records.append(TraceRow(s.iteration, s.prox_evals, k, time.perf_counter() - t0))
        if not np.isfinite(k) or k > DIVERGENCE_KKT:
            return DIVERGED
        if k <= tau:
            return CONVERGED
        if budget is not None and s.prox_evals >= budget:
            return MAX_ITER
        return None

    with np.errstate(over="ignore", invalid="ignore"):
        status = record()
        k = 0
        while status is None and k < max_iter:
            step(problem, s, cfg)
            k += 1
            if k % kkt_every == 0 or k == max_iter:
                status = record()
            elif not np.isfinite(s.y[:1]).all():
                status = record()
    trace.status = status or MAX_ITER
    trace.meta["final_state"] = s
    return trace
