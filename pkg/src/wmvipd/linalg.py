"""Dense matrices, block partitions and operator norms."""

from dataclasses import dataclass

import numpy as np


class DimensionError(ValueError):
    pass


class PowerIterationError(RuntimeError):
    """Power iteration did not reach the requested tolerance.

    ``estimate`` holds the last singular-value estimate.
    """

    def __init__(self, message, estimate):
        super().__init__(message)
        self.estimate = estimate


@dataclass(frozen=True)
class DenseMatrix:
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.ndim != 2:
            raise DimensionError(f"expected a 2-D array, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("matrix entries must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_rows(cls, rows, cols, values):
        """Build from a flat row-major sequence."""
        values = np.asarray(values, dtype=float)
        if values.size != rows * cols:
            raise DimensionError(f"{values.size} values for a {rows}x{cols} matrix")
        return cls(values.reshape(rows, cols))

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n))

    @property
    def rows(self):
        return self.values.shape[0]

    @property
    def cols(self):
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape

    def columns(self, start, stop):
        return DenseMatrix(self.values[:, start:stop])


@dataclass(frozen=True)
class BlockPartition:
    block_sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.block_sizes)
        if not sizes:
            raise ValueError("a partition needs at least one block")
        if any(s < 1 for s in sizes):
            raise ValueError(f"block sizes must be >= 1, got {sizes}")
        object.__setattr__(self, "block_sizes", sizes)
        offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
        object.__setattr__(self, "_offsets", tuple(int(o) for o in offsets))

    @classmethod
    def singletons(cls, n):
        return cls((1,) * n)

    @property
    def n_blocks(self):
        return len(self.block_sizes)

    @property
    def dim(self):
        return self._offsets[-1]

    @property
    def offsets(self):
        return self._offsets

    def slice(self, i):
        return slice(self._offsets[i], self._offsets[i + 1])

    def check(self, dim):
        if self.dim != dim:
            raise DimensionError(f"partition covers {self.dim} coordinates, expected {dim}")


def _as_array(A):
    return A.values if isinstance(A, DenseMatrix) else np.asarray(A, dtype=float)


def matvec(A, v):
    M = _as_array(A)
    v = np.asarray(v, dtype=float)
    if v.shape != (M.shape[1],):
        raise DimensionError(f"vector of shape {v.shape} for a {M.shape} matrix")
    return M @ v


def matvec_transpose(A, v):
    M = _as_array(A)
    v = np.asarray(v, dtype=float)
    if v.shape != (M.shape[0],):
        raise DimensionError(f"vector of shape {v.shape} for the transpose of a {M.shape} matrix")
    return M.T @ v


def _power_iteration(M, v, tol, max_iter):
    # Rayleigh quotients of M^T M; returns (sigma^2, v, converged)
    lam = 0.0
    for _ in range(max_iter):
        w = M.T @ (M @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0, v, True
        new = float(v @ w)
        v = w / nw
        if abs(new - lam) <= tol * abs(new):
            return new, v, True
        lam = new
    return lam, v, False


def operator_norm(A, tol=1e-10, max_iter=10_000):
    """Largest singular value of ``A`` by power iteration on ``A^T A``.

    Starts from the normalized all-ones vector. If that start is (nearly)
    annihilated, or after convergence, a deterministic perturbation is used
    for a second pass so that a start orthogonal to the top singular space
    does not go unnoticed.
    """
    M = _as_array(A)
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = M.shape[1]
    fro2 = float(np.sum(M * M))
    if fro2 == 0.0:
        raise ValueError("operator_norm of a zero matrix")
    v = np.ones(n) / np.sqrt(n)
    perturb = np.cos(1.0 + np.arange(n) * 0.7548776662466927)
    perturb /= np.linalg.norm(perturb)
    if np.linalg.norm(M.T @ (M @ v)) <= 1e-12 * fro2:
        v = perturb.copy()

    lam, v, ok = _power_iteration(M, v, tol, max_iter)
    if not ok:
        raise PowerIterationError(
            f"power iteration did not converge in {max_iter} iterations", np.sqrt(max(lam, 0.0))
        )
    # stagnation guard: restart from a perturbed copy of the converged vector
    v2 = v + 1e-2 * perturb
    v2 /= np.linalg.norm(v2)
    lam2, _, ok2 = _power_iteration(M, v2, tol, max_iter)
    if not ok2:
        raise PowerIterationError(
            f"power iteration did not converge in {max_iter} iterations", np.sqrt(max(lam2, 0.0))
        )
    return float(np.sqrt(max(lam, lam2, 0.0)))


def block_operator_norms(A, partition, tol=1e-10, max_iter=10_000):
    """Operator norm of each column block ``A_l`` of ``A``."""
    M = _as_array(A)
    partition.check(M.shape[1])
    out = np.empty(partition.n_blocks)
    for i in range(partition.n_blocks):
        sub = M[:, partition.slice(i)]
        if sub.shape[1] == 1:
            out[i] = np.linalg.norm(sub[:, 0])
        elif not np.any(sub):
            out[i] = 0.0
        else:
            out[i] = operator_norm(sub, tol, max_iter)
    return out


def gram_norm(A, tol=1e-10, max_iter=10_000):
    """``||A^T A|| = ||A||^2``."""
    return operator_norm(A, tol, max_iter) ** 2
