import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wmvipd.params import (
    InfeasibleRhoError,
    ParameterError,
    alm_step_size,
    ceg_params,
    check_rho_feasible,
    ncpdhg_params,
    ncspdhg_params,
    perturbation,
    saga_step_size,
    descent_constants,
)
from wmvipd.problem import WeakMviEstimate


def test_rho_feasibility():
    assert check_rho_feasible(0.0, 40.0, 0.125)
    assert check_rho_feasible(WeakMviEstimate(-2e-3), 37.5, 0.125)
    assert not check_rho_feasible(-1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        check_rho_feasible(0.0, 0.0, 0.0)


def test_ncpdhg_rho_zero_substitution():
    p = ncpdhg_params(0.0, 1.0, 0.0, 0.5)
    assert (p.epsilon, p.gamma_y, p.gamma_x, p.alpha) == (0.5, 0.5, 1.0, 1.0)
    assert 2 * p.gamma_x * p.gamma_y * 1.0**2 == pytest.approx(1.0)


def test_ncpdhg_rejects_infeasible_and_bad_c():
    with pytest.raises(InfeasibleRhoError, match="rho"):
        ncpdhg_params(-1.0, 1.0, 0.0, 0.5)
    with pytest.raises(ValueError):
        ncpdhg_params(0.0, 1.0, 0.0, 1.0)
    with pytest.raises(ParameterError):
        ncpdhg_params(0.0, 1.0, 0.0, 0.5, lip_f2=1.0)


@pytest.mark.parametrize(
    "norm, lip, c, expected",
    [
        # norms back-solved from the reference rows; this checks the formulas, not the data
        (37.5, 0.125, 0.4, (0.024, 0.015, 0.73)),
        (39.3, 0.0, 0.55, (0.018, 0.018, 0.78)),
    ],
)
def test_ncpdhg_reproduces_reference_rows_at_implied_norm(norm, lip, c, expected):
    p = ncpdhg_params(-2e-3, norm, lip, c)
    digits = [3, 3, 2]
    got = (round(p.gamma_x, digits[0]), round(p.gamma_y, digits[1]), round(p.alpha, digits[2]))
    assert got == pytest.approx(expected, abs=1.01e-3)


def test_ncpdhg_constraints_hold_on_the_boundary():
    p = ncpdhg_params(-2e-3, 37.5, 0.125, 0.4)
    assert p.margins["alpha_bound"] == 0.0
    assert abs(p.margins["coupling_bound"]) <= 1e-12
    assert p.margins["gamma_y_bound"] > 0
    assert 0 < p.alpha < 1


def test_positive_rho_caps_alpha():
    p = ncpdhg_params(1e-3, 10.0, 0.0, 0.5)
    assert p.alpha == 1.0


@settings(max_examples=50)
@given(st.floats(-5e-3, 0), st.floats(1.0, 60.0), st.sampled_from([0.0, 0.125, 1.0]))
def test_gamma_y_monotone_in_c(rho, norm, lip):
    if not check_rho_feasible(rho, norm, lip):
        return
    ys = [ncpdhg_params(rho, norm, lip, c).gamma_y for c in (0.1, 0.3, 0.6, 0.9)]
    assert all(a < b for a, b in zip(ys, ys[1:]))


def test_perturbation_terms():
    # rho = 0 and L = 0: only the 1/||A|| term is finite
    assert perturbation(0.0, 4.0, 0.0, 0.5) == 0.125
    eps = perturbation(-0.01, 2.0, 1.0, 0.9)
    terms = (1 / 2.0, (1 - 8 * 4 * 1e-4) / (4 * 4 * 0.01), 1 / math.sqrt(2) - 0.02)
    assert eps == pytest.approx(0.9 * min(terms))


def test_ncspdhg_least_squares_like_row():
    # norm back-solved from the convex row: ||A|| ~ 37, m = 101 singleton blocks
    p = ncspdhg_params(0.0, 37.0, 5.2, 101, 0.0, 0.05)
    assert p.theta == 101
    assert p.gamma_y == pytest.approx(0.05 / 37.0)
    assert round(p.gamma_x, 2) == pytest.approx(0.27, abs=0.011)


def test_ncspdhg_alpha_is_min_of_both_rules():
    p = ncspdhg_params(-2e-3, 20.0, 3.0, 50, 0.125, 0.1)
    assert p.alpha == min(p.margins["alpha_x"], p.margins["alpha_y"])
    # the alpha rules are the zero sets of the rate constants, so one of them vanishes
    assert min(p.margins["C_x"], p.margins["C_y"]) == pytest.approx(0.0, abs=1e-12)
    assert max(p.margins["C_x"], p.margins["C_y"]) > 0


@settings(max_examples=200)
@given(st.floats(-0.05, 0), st.floats(0.5, 80.0), st.floats(0.01, 0.99), st.integers(1, 500),
       st.floats(0.05, 1.0))
def test_ncspdhg_alpha_positive_whenever_feasible(rho, norm, c, m, frac):
    # eps <= c (1 - 8 A^2 rho^2) / (4 A^2 |rho|) keeps gamma_x / 2 > |rho|
    if not check_rho_feasible(rho, norm, 0.0):
        with pytest.raises(InfeasibleRhoError):
            ncspdhg_params(rho, norm, frac * norm, m, 0.0, c)
        return
    p = ncspdhg_params(rho, norm, frac * norm, m, 0.0, c)
    assert 0 < p.alpha <= 1


def test_descent_constant_limits():
    class Cfg:
        gamma_x, gamma_y, alpha = 0.3, 0.2, 0.0

    cx, cy, c = descent_constants(Cfg, 0.0, 2.0, 1.0, 4)
    assert cx == pytest.approx(0.3 - 0.09 * 0.2 * 4)
    assert cy == pytest.approx(0.1)
    assert c == min(cx, cy)
    Cfg.alpha = 1.0
    assert descent_constants(Cfg, 0.0, 2.0, 1.0, 4)[1] == 0.0


def test_ceg_params():
    p = ceg_params(0.0, 1.0, 0.0)
    assert p.gamma == pytest.approx(1 / math.sqrt(2))
    assert (p.delta, p.alpha) == (0.0, pytest.approx(0.99))
    q = ceg_params(-2e-3, 37.0, 0.0)
    assert round(q.gamma, 3) == 0.019 and round(q.alpha, 2) == 0.78
    with pytest.raises(ParameterError):
        ceg_params(-0.5, 37.0, 0.0)
    with pytest.raises(ValueError):
        ceg_params(0.0, 1.0, 0.0, eps_ceg=0.0)


def test_alm_and_saga_steps():
    assert alm_step_size(0.0, 1.0, 4.0) == 0.25
    assert alm_step_size(0.125, 0.5, 909.0) == pytest.approx(1 / 454.625)
    with pytest.raises(ValueError):
        alm_step_size(0.0, 0.0, 1.0)
    assert saga_step_size(np.eye(3)) == 1.0
    assert saga_step_size(np.array([[1.0, 1.0], [3.0, 0.0]])) == pytest.approx(1 / 9)
    with pytest.raises(ParameterError):
        saga_step_size(np.zeros((2, 2)))
