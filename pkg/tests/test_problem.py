import numpy as np
import pytest

from wmvipd.experiments import build_least_squares, build_logistic, least_squares_solution, sigmoid
from wmvipd.linalg import BlockPartition, DenseMatrix, DimensionError
from wmvipd.params import ncpdhg_params
from wmvipd.problem import (
    PrimalDualPoint,
    SaddleProblem,
    WeakMviEstimate,
    is_tau_stationary,
    kkt_error,
    residual,
    weighted_distance_sq,
)
from wmvipd.prox import prox_identity
from wmvipd.solvers import init_saddle_state, ncpdhg_step


def random_point(p, rng, scale=1.0):
    return PrimalDualPoint(scale * rng.standard_normal(p.primal_dim), scale * rng.standard_normal(p.dual_dim))


def test_residual_zero_at_fixed_point(small_data, rng):
    p = build_logistic(small_data)
    z = random_point(p, rng)
    r = residual(p, z.x, z.y, z.x, z.y, (0.1, 0.2))
    assert r.norm_sq() == 0.0


def test_residual_least_squares_specialization(small_data, rng):
    p = build_least_squares(small_data)
    a, b = random_point(p, rng), random_point(p, rng)
    r = residual(p, a.x, a.y, b.x, b.y, (0.3, 0.7))
    assert np.allclose(r.f_bar, (a.x - b.x) / 0.3)
    assert np.allclose(r.g_bar, (a.y - b.y) / 0.7 + p.A @ (a.x - b.x))


def test_residual_rejects_bad_input(small_data):
    p = build_least_squares(small_data)
    z = p.zero_point()
    with pytest.raises(ValueError):
        residual(p, z.x, z.y, z.x, z.y, (0.0, 1.0))
    with pytest.raises(DimensionError):
        residual(p, z.x[:-1], z.y, z.x, z.y, (1.0, 1.0))


def test_logistic_residual_is_a_subgradient(small_data, rng):
    # f(x) = <b, x> is smooth, so F_bar must equal b + M^T y_bar after a step
    p = build_logistic(small_data)
    from wmvipd.linalg import operator_norm

    cfg = ncpdhg_params(-2e-3, operator_norm(p.A), p.lip_g2, 0.4)
    s = init_saddle_state(p, random_point(p, rng))
    x0, y0 = s.x.copy(), s.y.copy()
    gy = cfg.gamma_y
    y_bar = y0 + gy * (p.A @ x0 - p.grad_g2(y0))
    ncpdhg_step(p, s, cfg)
    r = s.extra["residual"]
    assert np.allclose(r.f_bar, small_data.b + p.A.T @ y_bar, atol=1e-10)


def test_logistic_kkt_duplicate_evaluator(small_data, rng):
    p = build_logistic(small_data)
    B, b = small_data.B, small_data.b
    m, n = B.shape
    for _ in range(5):
        z = random_point(p, rng)
        # loop-based evaluator written independently of the builder
        total = 0.0
        for j in range(n + m):
            col = [B[i, j] if j < n else (-1.0 if j - n == i else 0.0) for i in range(m)]
            g = 0.0
            if j >= n:
                s = float(sigmoid(z.y[j]))
                g = 2 * s * (s - 0.5) * (1 - s)
            total += (-sum(col[i] * z.x[i] for i in range(m)) - g) ** 2
        for i in range(m):
            row = sum(B[i, j] * z.y[j] for j in range(n)) - z.y[n + i]
            total += (row - b[i]) ** 2
        assert kkt_error(p, z) == pytest.approx(total, rel=1e-12)


def test_kkt_nonnegative_and_nan_rejected(small_data, rng):
    p = build_logistic(small_data)
    for _ in range(20):
        assert kkt_error(p, random_point(p, rng, 5.0)) >= 0
    z = p.zero_point()
    z.x[0] = np.nan
    with pytest.raises(ValueError):
        kkt_error(p, z)


def test_kkt_least_squares_at_solution(small_data):
    p = build_least_squares(small_data)
    _, z = least_squares_solution(small_data)
    assert kkt_error(p, z) <= 1e-20
    assert is_tau_stationary(p, z, 1e-7)


def test_tau_boundary_is_inclusive():
    A = DenseMatrix(np.array([[1.0]]))
    p = SaddleProblem(1, 1, BlockPartition((1,)), A, lambda i, v, g: v, prox_identity,
                      kkt=lambda z: 1e-7)
    assert is_tau_stationary(p, p.zero_point(), 1e-7)
    q = SaddleProblem(1, 1, BlockPartition((1,)), A, lambda i, v, g: v, prox_identity,
                      kkt=lambda z: 1e-6)
    assert not is_tau_stationary(q, q.zero_point(), 1e-7)
    with pytest.raises(ValueError):
        is_tau_stationary(p, p.zero_point(), 0.0)


def test_saddle_problem_validation():
    A = DenseMatrix(np.ones((2, 3)))
    kw = dict(prox_f_block=lambda i, v, g: v, prox_g=prox_identity, kkt=lambda z: 0.0)
    with pytest.raises(DimensionError):
        SaddleProblem(2, 2, BlockPartition((1, 1)), A, **kw)
    with pytest.raises(DimensionError):
        SaddleProblem(3, 2, BlockPartition((1, 1)), A, **kw)
    with pytest.raises(ValueError):
        SaddleProblem(3, 2, BlockPartition((1, 2)), A, lip_g2=-1.0, **kw)
    p = SaddleProblem(3, 2, BlockPartition((1, 2)), A, **kw)
    assert p.n_prox_blocks == 2
    with pytest.raises(DimensionError):
        p.check_point(PrimalDualPoint(np.zeros(2), np.zeros(2)))


def test_weighted_distance(rng):
    z = PrimalDualPoint(rng.standard_normal(4), rng.standard_normal(3))
    assert weighted_distance_sq(z, z, (1, 1)) == 0
    e = PrimalDualPoint(z.x + np.eye(4)[0], z.y + np.eye(3)[1])
    assert weighted_distance_sq(e, z, (2, 3)) == pytest.approx(5.0)
    w = PrimalDualPoint(rng.standard_normal(4), rng.standard_normal(3))
    loop = 0.7 * sum((a - b) ** 2 for a, b in zip(w.x, z.x)) + 1.9 * sum((a - b) ** 2 for a, b in zip(w.y, z.y))
    assert weighted_distance_sq(w, z, (0.7, 1.9)) == pytest.approx(loop, rel=1e-12)
    with pytest.raises(ValueError):
        weighted_distance_sq(w, z, (0, 1))


def test_weak_mvi_estimate():
    assert WeakMviEstimate(-0.5).rho == -0.5
    with pytest.raises(ValueError):
        WeakMviEstimate(float("nan"))
