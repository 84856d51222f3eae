"""Step-size and extrapolation rules for every solver.

The primal-dual rules take a weak-MVI estimate ``rho`` (usually <= 0), the
coupling norm ``||A||``, the Lipschitz constant of grad g2 and a
residual-balancing knob ``c`` in (0, 1).
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .problem import WeakMviEstimate

log = logging.getLogger(__name__)


class InfeasibleRhoError(ValueError):
    pass


class ParameterError(ValueError):
    pass


def _rho(rho):
    return rho.rho if isinstance(rho, WeakMviEstimate) else float(rho)


def _inv_or_inf(num, den):
    return math.inf if den == 0 else num / den


def rho_bound(op_norm_A, lip_g2):
    """Largest admissible rho**2: min(1/(8||A||^2), 1/(8 L^2)), L=0 read as +inf."""
    return min(1.0 / (8.0 * op_norm_A**2), _inv_or_inf(1.0, 8.0 * lip_g2**2))


def check_rho_feasible(rho, op_norm_A, lip_g2):
    if op_norm_A <= 0:
        raise ValueError("op_norm_A must be positive")
    return _rho(rho) ** 2 < rho_bound(op_norm_A, lip_g2)


def _require_feasible(rho, op_norm_A, lip_g2):
    if not check_rho_feasible(rho, op_norm_A, lip_g2):
        raise InfeasibleRhoError(
            f"rho^2 < min(1/(8||A||^2), 1/(8 L^2)) violated: "
            f"rho^2 = {rho**2:.6g}, bound = {rho_bound(op_norm_A, lip_g2):.6g} "
            f"(||A|| = {op_norm_A:.6g}, L = {lip_g2:.6g})"
        )


def perturbation(rho, op_norm_A, lip_g2, c):
    """c * min(1/||A||, (1 - 8||A||^2 rho^2)/(4||A||^2|rho|), 1/(sqrt2 L) - 2|rho|)."""
    if not 0 < c < 1:
        raise ValueError(f"c must lie in (0, 1), got {c}")
    a2 = op_norm_A**2
    r = abs(rho)
    t1 = 1.0 / op_norm_A
    t2 = _inv_or_inf(1.0 - 8.0 * a2 * rho**2, 4.0 * a2 * r)
    t3 = math.inf if lip_g2 == 0 else 1.0 / (math.sqrt(2.0) * lip_g2) - 2.0 * r
    return c * min(t1, t2, t3)


@dataclass(frozen=True)
class NcPdhgParams:
    gamma_x: float
    gamma_y: float
    alpha: float
    c: float = float("nan")
    epsilon: float = float("nan")
    margins: dict = field(default_factory=dict, compare=False)

    @property
    def gamma_min(self):
        return min(self.gamma_x, self.gamma_y)


@dataclass(frozen=True)
class NcSpdhgParams:
    gamma_x: float
    gamma_y: float
    alpha: float
    theta: float
    c: float = float("nan")
    epsilon: float = float("nan")
    margins: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class CegParams:
    gamma: float
    delta: float
    alpha: float
    epsilon: float = 0.01


@dataclass(frozen=True)
class AlmParams:
    mu: float
    inner_gamma: float
    inner_max: int = 10_000
    inner_tol: float = 1e-9


@dataclass(frozen=True)
class SagaParams:
    gamma: float


@dataclass(frozen=True)
class BaselineParams:
    ceg_gamma: float
    ceg_delta: float
    ceg_alpha: float
    ceg_epsilon: float
    alm_mu: float
    alm_gamma: float
    saga_gamma: float = float("nan")


def ncpdhg_params(rho, op_norm_A, lip_g2, c, lip_f2=0.0):
    rho = _rho(rho)
    if lip_f2 != 0:
        raise ParameterError("the NC-PDHG rule assumes f2 = 0")
    _require_feasible(rho, op_norm_A, lip_g2)
    if rho > 0:
        log.warning("rho = %g > 0: the rule is stated for rho <= 0; alpha is capped at 1", rho)
    eps = perturbation(rho, op_norm_A, lip_g2, c)
    gamma_y = 2.0 * abs(rho) + eps
    gamma_x = 1.0 / (2.0 * gamma_y * op_norm_A**2)
    alpha = min(1.0 + 2.0 * rho / min(gamma_x, gamma_y), 1.0)
    if alpha <= 0:
        raise ParameterError(f"rule produced alpha = {alpha:.6g} <= 0")
    margins = {
        "alpha_bound": 1.0 + 2.0 * rho / min(gamma_x, gamma_y) - alpha,
        "gamma_y_bound": (math.inf if lip_g2 == 0 else 1.0 / (math.sqrt(2.0) * lip_g2)) - gamma_y,
        "coupling_bound": 1.0 - 2.0 * gamma_x * gamma_y * op_norm_A**2,
    }
    return NcPdhgParams(gamma_x, gamma_y, alpha, c, eps, margins)


def ncspdhg_params(rho, op_norm_A, sup_block_norm, n_blocks, lip_g2, c):
    rho = _rho(rho)
    if n_blocks < 1:
        raise ValueError("n_blocks must be >= 1")
    _require_feasible(rho, op_norm_A, lip_g2)
    if rho > 0:
        log.warning("rho = %g > 0: the rule is stated for rho <= 0; |rho| is used throughout", rho)
    a2 = op_norm_A**2
    r = abs(rho)
    eps = perturbation(rho, op_norm_A, lip_g2, c)
    gamma_y = 2.0 * r + eps
    gamma_x = 1.0 / (2.0 * gamma_y * a2)
    q = gamma_x**2 * gamma_y
    alpha_y = 1.0 - 2.0 * r / gamma_y
    alpha_x = 2.0 * (gamma_x - q * a2 - r) / (gamma_x + q * (n_blocks * sup_block_norm**2 - a2))
    alpha = min(alpha_y, alpha_x)
    if alpha <= 0:
        raise ParameterError(
            f"rule produced alpha = {alpha:.6g} <= 0 (alpha_y = {alpha_y:.6g}, alpha_x = {alpha_x:.6g})"
        )
    params = NcSpdhgParams(gamma_x, gamma_y, alpha, float(n_blocks), c, eps)
    cx, cy, _ = descent_constants(params, rho, op_norm_A, sup_block_norm, n_blocks)
    margins = {
        "alpha_y": alpha_y,
        "alpha_x": alpha_x,
        "gamma_y_bound": (math.inf if lip_g2 == 0 else 1.0 / (math.sqrt(2.0) * lip_g2)) - gamma_y,
        "C_x": cx,
        "C_y": cy,
    }
    return NcSpdhgParams(gamma_x, gamma_y, alpha, float(n_blocks), c, eps, margins)


def descent_constants(params, rho, op_norm_A, sup_block_norm, n_blocks):
    """(C_x, C_y, min(C_x, C_y)) for the randomized method's rate bound."""
    rho = _rho(rho)
    gx, gy, a = params.gamma_x, params.gamma_y, params.alpha
    cx = rho + gx * (1 - a / 2) - gx**2 * gy * (
        (1 - a / 2) * op_norm_A**2 + a * n_blocks * sup_block_norm**2 / 2
    )
    cy = rho + gy / 2 * (1 - a)
    return cx, cy, min(cx, cy)


def ceg_params(rho, op_norm_A, lip_g2, eps_ceg=0.01):
    if eps_ceg <= 0:
        raise ValueError("eps_ceg must be positive")
    delta = _rho(rho)
    gamma = 1.0 / (math.sqrt(2.0) * (lip_g2 + op_norm_A))
    alpha = 1.0 + 2.0 * delta / gamma - eps_ceg
    if alpha <= 0:
        raise ParameterError(f"CEG+ rule produced alpha = {alpha:.6g} <= 0")
    return CegParams(gamma, delta, alpha, eps_ceg)


def alm_step_size(lip_g2, mu, gram_norm_A):
    if mu <= 0:
        raise ValueError("mu must be positive")
    den = lip_g2 + mu * gram_norm_A
    if den <= 0:
        raise ParameterError("zero Lipschitz constant for the augmented Lagrangian")
    return 1.0 / den


def saga_step_size(B):
    B = B.values if hasattr(B, "values") else np.asarray(B, dtype=float)
    lmax = float(np.max(np.sum(B * B, axis=1)))
    if lmax == 0:
        raise ParameterError("SAGA step size of a zero matrix")
    return 1.0 / lmax
