"""Saddle problems  min_x max_y f(x) + f2(x) + <Ax, y> - g2(y) - g(y).

A :class:`SaddleProblem` bundles the callbacks and constants every solver
needs. KKT errors are problem-specific closed forms supplied by the builders
in :mod:`wmvipd.experiments`.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .linalg import BlockPartition, DenseMatrix, DimensionError

DIVERGENCE_KKT = 1e12


@dataclass
class PrimalDualPoint:
    x: np.ndarray
    y: np.ndarray

    def is_finite(self):
        return bool(np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y)))

    def copy(self):
        return PrimalDualPoint(self.x.copy(), self.y.copy())


@dataclass
class ResidualPoint:
    f_bar: np.ndarray
    g_bar: np.ndarray

    def norm_sq(self):
        return float(self.f_bar @ self.f_bar + self.g_bar @ self.g_bar)


@dataclass(frozen=True)
class WeakMviEstimate:
    rho: float

    def __post_init__(self):
        if not np.isfinite(self.rho):
            raise ValueError("rho must be finite")


@dataclass(frozen=True)
class SaddleProblem:
    """Callbacks-and-constants bundle for one saddle problem.

    ``coupling`` maps primal to dual (``dual_dim x primal_dim``). ``grad_f2``
    and ``grad_g2`` may be ``None`` for a zero function; ``identity_blocks``
    flags the primal blocks whose prox is the identity (those are not counted
    as proximal evaluations), and ``g_is_zero`` does the same for ``g``.
    """

    primal_dim: int
    dual_dim: int
    blocks: BlockPartition
    coupling: DenseMatrix
    prox_f_block: Callable
    prox_g: Callable
    kkt: Callable
    grad_g2: Optional[Callable] = None
    grad_f2: Optional[Callable] = None
    lip_g2: float = 0.0
    lip_f2: float = 0.0
    prox_f: Optional[Callable] = None
    identity_blocks: tuple = ()
    g_is_zero: bool = True
    name: str = "saddle"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.coupling.shape != (self.dual_dim, self.primal_dim):
            raise DimensionError(
                f"coupling is {self.coupling.shape}, expected ({self.dual_dim}, {self.primal_dim})"
            )
        self.blocks.check(self.primal_dim)
        if self.lip_g2 < 0 or self.lip_f2 < 0:
            raise ValueError("Lipschitz constants must be nonnegative")
        if not self.identity_blocks:
            object.__setattr__(self, "identity_blocks", (False,) * self.blocks.n_blocks)
        if len(self.identity_blocks) != self.blocks.n_blocks:
            raise ValueError("identity_blocks must have one flag per block")
        if self.prox_f is None:
            object.__setattr__(self, "prox_f", self._blockwise_prox)

    def _blockwise_prox(self, x, gamma):
        out = np.empty_like(x)
        for i in range(self.blocks.n_blocks):
            sl = self.blocks.slice(i)
            out[sl] = self.prox_f_block(i, x[sl], gamma)
        return out

    @property
    def A(self):
        return self.coupling.values

    @property
    def n_prox_blocks(self):
        """Number of primal blocks with a non-identity prox."""
        return sum(not f for f in self.identity_blocks)

    def g2_grad(self, y):
        return np.zeros(self.dual_dim) if self.grad_g2 is None else self.grad_g2(y)

    def f2_grad(self, x):
        return np.zeros(self.primal_dim) if self.grad_f2 is None else self.grad_f2(x)

    def check_point(self, z):
        if z.x.shape != (self.primal_dim,) or z.y.shape != (self.dual_dim,):
            raise DimensionError(
                f"point dims {z.x.shape}, {z.y.shape} do not match "
                f"({self.primal_dim},), ({self.dual_dim},)"
            )

    def zero_point(self):
        return PrimalDualPoint(np.zeros(self.primal_dim), np.zeros(self.dual_dim))


def residual(p, x_prev, y_prev, x_bar, y_bar, gammas):
    """The explicit subgradient (F_bar, G_bar) at (x_bar, y_bar).

    F_bar = (x_prev - x_bar)/gx + grad f2(x_bar) - grad f2(x_prev)
    G_bar = (y_prev - y_bar)/gy + grad g2(y_bar) - grad g2(y_prev) + A(x_prev - x_bar)
    """
    gx, gy = gammas
    if gx <= 0 or gy <= 0:
        raise ValueError("step sizes must be positive")
    for v, n in ((x_prev, p.primal_dim), (x_bar, p.primal_dim), (y_prev, p.dual_dim), (y_bar, p.dual_dim)):
        if np.shape(v) != (n,):
            raise DimensionError(f"vector of shape {np.shape(v)}, expected ({n},)")
    dx = x_prev - x_bar
    f_bar = dx / gx
    if p.grad_f2 is not None:
        f_bar = f_bar + p.grad_f2(x_bar) - p.grad_f2(x_prev)
    g_bar = (y_prev - y_bar) / gy + p.A @ dx
    if p.grad_g2 is not None:
        g_bar = g_bar + p.grad_g2(y_bar) - p.grad_g2(y_prev)
    return ResidualPoint(f_bar, g_bar)


def kkt_error(p, z):
    p.check_point(z)
    if not z.is_finite():
        raise ValueError("KKT error requested at a non-finite point")
    return float(p.kkt(z))


def is_tau_stationary(p, z, tau):
    if tau <= 0:
        raise ValueError("tau must be positive")
    return kkt_error(p, z) <= tau


def weighted_distance_sq(z, z_ref, weights):
    """wx*||x - x_ref||^2 + wy*||y - y_ref||^2."""
    wx, wy = weights
    if wx <= 0 or wy <= 0:
        raise ValueError("weights must be positive")
    if np.shape(z.x) != np.shape(z_ref.x) or np.shape(z.y) != np.shape(z_ref.y):
        raise DimensionError("points have different dimensions")
    dx = z.x - z_ref.x
    dy = z.y - z_ref.y
    return float(wx * (dx @ dx) + wy * (dy @ dy))
