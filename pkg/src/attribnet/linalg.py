"""Small dense linear algebra helpers.

Matrices and vectors are plain float64 numpy arrays. The helpers here validate
shapes and finiteness and provide a deterministic power iteration for the
dominant singular value.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITERS = 10_000


class DimensionError(ValueError):
    """Raised when operand shapes do not line up."""


class SingularValue(NamedTuple):
    value: float
    converged: bool
    iterations: int


def as_vector(v, name: str = "vector") -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-d, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-d, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def apply_transposed(M, v) -> np.ndarray:
    """Return ``M.T @ v``; ``v`` must have one entry per row of ``M``."""
    M = as_matrix(M)
    v = as_vector(v)
    if v.shape[0] != M.shape[0]:
        raise DimensionError(f"vector of dim {v.shape[0]} cannot multiply M^T with M of shape {M.shape}")
    return M.T @ v


def apply(M, v) -> np.ndarray:
    """Return ``M @ v``."""
    M = as_matrix(M)
    v = as_vector(v)
    if v.shape[0] != M.shape[1]:
        raise DimensionError(f"vector of dim {v.shape[0]} cannot multiply M with shape {M.shape}")
    return M @ v


def l2_norm(v) -> float:
    return float(np.linalg.norm(as_vector(v)))


def _start_vectors(n: int) -> list[np.ndarray]:
    ones = np.ones(n) / np.sqrt(n)
    # index-dependent offsets; guards against a start orthogonal to the dominant space
    idx = np.arange(1, n + 1, dtype=np.float64)
    offset = 1.0 + np.cos(idx * 0.7548776662466927) * idx / n
    return [ones, offset / np.linalg.norm(offset)]


def _power_iterate(gram: np.ndarray, x: np.ndarray, tol: float, max_iters: int) -> SingularValue:
    lam = float(x @ gram @ x)
    prev_step = np.inf
    for it in range(1, max_iters + 1):
        y = gram @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return SingularValue(0.0, True, it)
        x = y / ny
        lam_new = float(x @ gram @ x)
        step = abs(lam_new - lam)
        # geometric tail estimate: slow contraction leaves more than one step of error
        rate = step / prev_step if prev_step > 0 else 0.0
        tail = step * rate / (1.0 - rate) if rate < 1.0 else np.inf
        if max(step, tail) <= tol * abs(lam_new):
            return SingularValue(float(np.sqrt(max(lam_new, 0.0))), True, it)
        lam, prev_step = lam_new, step
    return SingularValue(float(np.sqrt(max(lam, 0.0))), False, max_iters)


def top_singular_value(M, tol: float = DEFAULT_TOL, max_iters: int = DEFAULT_MAX_ITERS) -> SingularValue:
    """Dominant singular value by power iteration on the smaller Gram matrix.

    Iteration starts from the normalized all-ones vector and, separately, from
    an index-perturbed copy of it; the larger of the two estimates is kept, so
    a start vector orthogonal to the dominant space cannot hide it. Each run
    stops once the relative change of the Rayleigh quotient, and its
    geometric extrapolation over the remaining steps, drop below ``tol``.

    Returns
    -------
    SingularValue
        ``converged`` is False when some run exhausted ``max_iters``; ``value``
        is then the last iterate.
    """
    M = as_matrix(M)
    if M.size == 0:
        raise DimensionError("matrix must be nonempty")
    if tol <= 0:
        raise ValueError("tol must be positive")
    gram = M @ M.T if M.shape[0] <= M.shape[1] else M.T @ M
    if not np.any(gram):
        return SingularValue(0.0, True, 0)
    runs = [_power_iterate(gram, x, tol, max_iters) for x in _start_vectors(gram.shape[0])]
    best = max(runs, key=lambda r: r.value)
    return SingularValue(best.value, all(r.converged for r in runs), sum(r.iterations for r in runs))
