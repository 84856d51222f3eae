import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from wmvipd.linalg import (
    BlockPartition,
    DenseMatrix,
    DimensionError,
    block_operator_norms,
    gram_norm,
    matvec,
    matvec_transpose,
    operator_norm,
)


def jacobi_max_eigenvalue(S, sweeps=100):
    """Cyclic Jacobi rotations on a symmetric matrix; independent of LAPACK."""
    S = S.copy()
    n = S.shape[0]
    for _ in range(sweeps):
        off = np.sum(S**2) - np.sum(np.diag(S) ** 2)
        if off < 1e-28 * max(1.0, np.sum(S**2)):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(S[p, q]) < 1e-300:
                    continue
                tau = (S[q, q] - S[p, p]) / (2 * S[p, q])
                t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau)) if tau != 0 else 1.0
                c = 1 / np.sqrt(1 + t * t)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                S = J.T @ S @ J
    return float(np.max(np.diag(S)))


entries = st.floats(min_value=-3, max_value=3, allow_nan=False, allow_infinity=False)


@settings(max_examples=40, deadline=None)
@given(arrays(float, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=entries))
def test_operator_norm_matches_jacobi(M):
    if np.sum(M * M) < 1e-6:
        return
    expected = np.sqrt(max(jacobi_max_eigenvalue(M.T @ M), 0.0))
    assert operator_norm(M) == pytest.approx(expected, rel=1e-5, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 7), st.integers(1, 7), st.integers(0, 2**32 - 1))
def test_adjoint_identity(m, n, seed):
    r = np.random.default_rng(seed)
    A = DenseMatrix(r.standard_normal((m, n)))
    x, y = r.standard_normal(n), r.standard_normal(m)
    assert matvec(A, x) @ y == pytest.approx(x @ matvec_transpose(A, y), rel=1e-12, abs=1e-12)


def test_known_norms():
    assert operator_norm(np.eye(4)) == pytest.approx(1.0, abs=1e-12)
    assert operator_norm(np.diag([3.0, -5.0, 1.0])) == pytest.approx(5.0, rel=1e-10)
    assert operator_norm([[1.0, 1.0]]) == pytest.approx(np.sqrt(2), rel=1e-12)
    assert gram_norm(np.diag([2.0, 1.0])) == pytest.approx(4.0, rel=1e-10)


def test_start_orthogonal_to_top_direction():
    # the all-ones start lies in the kernel of the dominant row
    A = np.array([[10.0, -10.0], [1.0, 1.0]])
    assert operator_norm(A) == pytest.approx(np.sqrt(200.0), rel=1e-8)


def test_zero_matrix_rejected():
    with pytest.raises(ValueError):
        operator_norm(np.zeros((2, 3)))


def test_dimension_checks():
    A = DenseMatrix(np.ones((2, 3)))
    with pytest.raises(DimensionError):
        matvec(A, np.ones(2))
    with pytest.raises(DimensionError):
        matvec_transpose(A, np.ones(3))
    with pytest.raises(DimensionError):
        DenseMatrix(np.ones(3))
    with pytest.raises(DimensionError):
        DenseMatrix.from_rows(2, 2, [1, 2, 3])


def test_dense_matrix_is_readonly_copy():
    src = np.ones((2, 2))
    A = DenseMatrix(src)
    src[0, 0] = 5
    assert A.values[0, 0] == 1
    with pytest.raises(ValueError):
        A.values[0, 0] = 2
    with pytest.raises(ValueError):
        DenseMatrix([[np.nan]])


def test_block_partition():
    bp = BlockPartition((1, 2, 1))
    assert bp.n_blocks == 3 and bp.dim == 4
    assert bp.offsets == (0, 1, 3, 4)
    assert bp.slice(1) == slice(1, 3)
    bp.check(4)
    with pytest.raises(DimensionError):
        bp.check(5)
    with pytest.raises(ValueError):
        BlockPartition(())
    with pytest.raises(ValueError):
        BlockPartition((1, 0))


def test_block_norms(rng):
    A = rng.standard_normal((5, 6))
    bp = BlockPartition((1, 2, 3))
    norms = block_operator_norms(A, bp)
    assert norms[0] == pytest.approx(np.linalg.norm(A[:, 0]), rel=1e-14)
    assert norms[1] == pytest.approx(np.linalg.svd(A[:, 1:3], compute_uv=False)[0], rel=1e-6)
    assert norms[2] == pytest.approx(np.linalg.svd(A[:, 3:], compute_uv=False)[0], rel=1e-6)
    # every block norm is at most the full norm
    assert np.all(norms <= operator_norm(A) * (1 + 1e-9))
