"""Problem builders for the three regression experiments.

* logistic: squared loss through a sigmoid, lifted with nu = B mu - b
* perceptron: ReLU regression, lifted onto the graph of ReLU
* least squares: convex control problem, also solved directly by SAGA
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .linalg import BlockPartition, DenseMatrix
from .problem import PrimalDualPoint, SaddleProblem
from .prox import (
    prox_half_square,
    prox_identity,
    prox_linear,
    prox_quadratic_shift,
    proj_relu_graph,
    proj_relu_graph_pairs,
)

LOGISTIC_LIP_G2 = 0.125


@dataclass(frozen=True)
class Dataset:
    B: np.ndarray
    b: np.ndarray
    name: str = "dataset"

    def __post_init__(self):
        B = np.array(self.B, dtype=float)
        b = np.array(self.b, dtype=float).ravel()
        if B.ndim != 2 or B.shape[0] < 1 or B.shape[1] < 1:
            raise ValueError(f"B must be a nonempty 2-D array, got shape {B.shape}")
        if b.shape != (B.shape[0],):
            raise ValueError(f"b has shape {b.shape}, expected ({B.shape[0]},)")
        if not (np.all(np.isfinite(B)) and np.all(np.isfinite(b))):
            raise ValueError("dataset entries must be finite")
        B.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "b", b)

    @property
    def n_samples(self):
        return self.B.shape[0]

    @property
    def n_features(self):
        return self.B.shape[1]


def synthetic_dataset(m=74, n=27, seed=0):
    """A pyrim-shaped stand-in: correlated features in [-1, 1], targets in [0, 1].

    Only meant for demos and tests when the real data file is not at hand.
    """
    rng = np.random.default_rng(seed)
    s = rng.uniform(-1.0, 1.0, size=m)
    t = rng.uniform(0.5, 1.0, size=n) * rng.choice([-1.0, 1.0], size=n)
    B = np.clip(np.outer(s, t) + 0.3 * rng.standard_normal((m, n)), -1.0, 1.0)
    w0 = rng.standard_normal(n) / np.sqrt(n)
    b = np.clip(0.5 + 0.4 * np.tanh(B @ w0) + 0.05 * rng.standard_normal(m), 0.0, 1.0)
    return Dataset(B, b, name=f"synthetic-{m}x{n}-seed{seed}")


def sigmoid(u):
    """Logistic function, evaluated without overflow for large |u|."""
    u = np.asarray(u, dtype=float)
    e = np.exp(-np.abs(u))
    out = np.where(u >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return float(out) if out.ndim == 0 else out


def relu(u):
    out = np.maximum(0.0, np.asarray(u, dtype=float))
    return float(out) if out.ndim == 0 else out


def sigmoid_loss_hessian(s):
    """Second derivative of (sigma(nu) - 0.5)**2 written in terms of s = sigma(nu)."""
    return s * (1 - s) * (-6 * s**2 + 6 * s - 1)


def logistic_g2(nu):
    return float(np.sum((sigmoid(nu) - 0.5) ** 2))


def lifted_constraint(B):
    """[B, -I]: maps (features, slack) to B w - slack."""
    m = B.shape[0]
    return np.hstack([B, -np.eye(m)])


def build_logistic(d):
    """Saddle form of min_mu sum (sigma(B_i mu - b_i) - 0.5)**2.

    Primal x (one multiplier per sample, singleton blocks) carries the linear
    f(x) = <b, x>; the dual y = (mu, nu) carries g2(y) = sum (sigma(nu) - 0.5)**2.
    Coupling is M = -[B, -I]^T.
    """
    B, b = d.B, d.b
    m, n = B.shape
    A_lift = lifted_constraint(B)
    M = -A_lift.T

    def grad_g2(y):
        s = sigmoid(y[n:])
        out = np.zeros_like(y)
        out[n:] = 2.0 * s * (s - 0.5) * (1.0 - s)
        return out

    def kkt(z):
        r_dual = M @ z.x - grad_g2(z.y)
        r_primal = A_lift @ z.y - b
        return float(r_dual @ r_dual + r_primal @ r_primal)

    return SaddleProblem(
        primal_dim=m,
        dual_dim=n + m,
        blocks=BlockPartition.singletons(m),
        coupling=DenseMatrix(M),
        prox_f_block=lambda i, v, gamma: prox_linear(v, gamma, b[i]),
        prox_f=lambda x, gamma: prox_linear(x, gamma, b),
        prox_g=prox_identity,
        grad_g2=grad_g2,
        lip_g2=LOGISTIC_LIP_G2,
        kkt=kkt,
        g_is_zero=True,
        name="logistic",
        meta={"n": n, "m": m, "lifted_constraint": A_lift, "b": b},
    )


def perceptron_layout(n, m):
    """Index arrays of w, u, l, lambda in the interleaved primal vector."""
    w = np.arange(n)
    u = n + 2 * np.arange(m)
    return {"w": w, "u": u, "l": u + 1, "lam": n + 2 * m + np.arange(m)}


def build_perceptron(d):
    """Saddle form of min_w ||b - relu(B w)||**2 on the ReLU graph.

    Primal x = (w, (u_1, l_1), ..., (u_m, l_m), lambda) with blocks of sizes
    1 (w), 2 (pairs) and 1 (lambda); dual y = (mu, nu) for u = B w and l = lambda.
    """
    B, b = d.B, d.b
    m, n = B.shape
    idx = perceptron_layout(n, m)
    A = np.zeros((2 * m, n + 3 * m))
    A[:m, idx["w"]] = B
    A[np.arange(m), idx["u"]] = -1.0
    A[m + np.arange(m), idx["l"]] = 1.0
    A[m + np.arange(m), idx["lam"]] = -1.0
    blocks = BlockPartition((1,) * n + (2,) * m + (1,) * m)
    lam0 = n + 2 * m

    def prox_f_block(i, v, gamma):
        if i < n:
            return v
        if i < n + m:
            ut, lt = proj_relu_graph(v[0], v[1])
            return np.array([ut, lt])
        return prox_quadratic_shift(v, gamma, b[i - n - m])

    def prox_f(x, gamma):
        out = x.copy()
        out[n:lam0] = proj_relu_graph_pairs(x[n:lam0])
        out[lam0:] = prox_quadratic_shift(x[lam0:], gamma, b)
        return out

    def kkt(z):
        x, y = z.x, z.y
        aty = A.T @ y
        a_u, a_l = aty[idx["u"]], aty[idx["l"]]
        u = x[idx["u"]]
        graph = np.where(u < 0, a_u**2, np.where(u > 0, 0.5 * (a_u + a_l) ** 2, 0.0))
        r_lam = 2.0 * (x[idx["lam"]] - b) + aty[idx["lam"]]
        r_w = aty[idx["w"]]
        ax = A @ x
        return float(r_w @ r_w + np.sum(graph) + r_lam @ r_lam + ax @ ax)

    return SaddleProblem(
        primal_dim=n + 3 * m,
        dual_dim=2 * m,
        blocks=blocks,
        coupling=DenseMatrix(A),
        prox_f_block=prox_f_block,
        prox_f=prox_f,
        prox_g=prox_identity,
        lip_g2=0.0,
        kkt=kkt,
        identity_blocks=(True,) * n + (False,) * (2 * m),
        g_is_zero=True,
        name="perceptron",
        meta={"n": n, "m": m, "layout": idx, "b": b,
              "block_order": "w singletons, (u_j, l_j) pairs, lambda singletons"},
    )


def build_least_squares(d):
    """Saddle form of min_w 1/2 ||B w - b||**2 with u = B w lifted out."""
    B, b = d.B, d.b
    m, n = B.shape
    A = lifted_constraint(B)

    def prox_f_block(i, v, gamma):
        if i < n:
            return v
        return prox_half_square(v, gamma, b[i - n])

    def prox_f(x, gamma):
        out = x.copy()
        out[n:] = prox_half_square(x[n:], gamma, b)
        return out

    def kkt(z):
        g = B.T @ (B @ z.x[:n] - b)
        return float(g @ g)

    return SaddleProblem(
        primal_dim=n + m,
        dual_dim=m,
        blocks=BlockPartition.singletons(n + m),
        coupling=DenseMatrix(A),
        prox_f_block=prox_f_block,
        prox_f=prox_f,
        prox_g=prox_identity,
        lip_g2=0.0,
        kkt=kkt,
        identity_blocks=(True,) * n + (False,) * m,
        g_is_zero=True,
        name="least-squares",
        meta={"n": n, "m": m, "b": b},
    )


def least_squares_solution(d):
    """Normal-equations solution w* and the saddle point (w*, B w*, B w* - b)."""
    B, b = d.B, d.b
    w = np.linalg.solve(B.T @ B, B.T @ b)
    u = B @ w
    return w, PrimalDualPoint(np.concatenate([w, u]), u - b)


@dataclass(frozen=True)
class AlmProblem:
    """min_v h(v) + k(v) subject to C v = r, solved by an augmented Lagrangian.

    ``grad_smooth`` is grad h (None for h = 0) and ``prox`` the prox of k
    (None for k = 0, in which case the inner solver is plain gradient descent).
    ``inner_is_primal`` says whether v is the primal or the dual variable of
    ``saddle`` (the multiplier is the other one).
    """

    C: np.ndarray
    r: np.ndarray
    saddle: SaddleProblem
    inner_is_primal: bool
    grad_smooth: Optional[Callable] = None
    lip_smooth: float = 0.0
    prox: Optional[Callable] = None
    prox_blocks: int = 0

    @property
    def dim(self):
        return self.C.shape[1]

    @property
    def n_constraints(self):
        return self.C.shape[0]

    def to_point(self, v, lam):
        return PrimalDualPoint(v, lam) if self.inner_is_primal else PrimalDualPoint(lam, v)

    def from_point(self, z):
        return (z.x, z.y) if self.inner_is_primal else (z.y, z.x)


def build_logistic_alm(d):
    p = build_logistic(d)
    A_lift = p.meta["lifted_constraint"]
    return AlmProblem(
        C=A_lift,
        r=d.b,
        saddle=p,
        inner_is_primal=False,
        grad_smooth=p.grad_g2,
        lip_smooth=p.lip_g2,
    )


def build_perceptron_alm(d):
    p = build_perceptron(d)
    return AlmProblem(
        C=p.A,
        r=np.zeros(p.dual_dim),
        saddle=p,
        inner_is_primal=True,
        prox=p.prox_f,
        prox_blocks=p.n_prox_blocks,
    )


@dataclass(frozen=True)
class SagaProblem:
    """min_w sum_i 1/2 (B_i w - b_i)**2 for incremental-gradient methods."""

    B: np.ndarray
    b: np.ndarray

    @classmethod
    def from_dataset(cls, d):
        return cls(d.B, d.b)

    def sample_grad(self, j, w):
        row = self.B[j]
        return row * (row @ w - self.b[j])

    def kkt(self, w):
        g = self.B.T @ (self.B @ w - self.b)
        return float(g @ g)
