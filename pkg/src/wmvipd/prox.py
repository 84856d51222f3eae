"""Closed-form proximal maps used by the experiments.

Every scalar map broadcasts over numpy arrays, so the same function serves as
an element-wise prox and as a vectorized block applier.
"""

import numpy as np

SQRT2P1 = 1.0 + np.sqrt(2.0)


def prox_linear(x, gamma, b):
    """prox of t -> b*t."""
    return x - gamma * b


def prox_quadratic_shift(lam, gamma, target):
    """prox of t -> (t - target)**2."""
    return (lam + 2.0 * gamma * target) / (1.0 + 2.0 * gamma)


def prox_half_square(u, gamma, b):
    """prox of t -> (t - b)**2 / 2."""
    return (u + gamma * b) / (1.0 + gamma)


def prox_identity(x, gamma=None):
    return x


def proj_relu_graph(u, l):
    """Euclidean projection of (u, l) onto {(t, max(0, t))}.

    Returns ``(u_proj, l_proj)``. Case order matters on the tie lines: the
    first matching case wins, and on ``(1+sqrt2) u + l = 0`` with ``u < 0``
    the point keeps ``u`` (both candidates are equidistant there).
    """
    u = np.asarray(u, dtype=float)
    l = np.asarray(l, dtype=float)
    s = u + l
    pos = u >= 0
    ut = np.where(
        pos,
        np.where(s <= 0, 0.0, 0.5 * s),
        np.where(SQRT2P1 * u + l > 0, 0.5 * s, u),
    )
    lt = np.maximum(0.0, ut)
    if ut.ndim == 0:
        return float(ut), float(lt)
    return ut, lt


def proj_relu_graph_pairs(v):
    """Project interleaved pairs ``(u_0, l_0, u_1, l_1, ...)`` onto the ReLU graph."""
    v = np.asarray(v, dtype=float)
    ut, lt = proj_relu_graph(v[0::2], v[1::2])
    out = np.empty_like(v)
    out[0::2] = ut
    out[1::2] = lt
    return out
