"""Orthogonalization of kernel stacks and its gradient.

A free kernel stack K (n_k x L) is turned into a square orthogonal operator
W by taking the polar factor of K from a full SVD and completing it with
orthonormal rows (or columns) supplied by the same SVD. The backward pass
propagates gradients through the polar factor only; the completion part is
treated as constant.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import NumericalError, ShapeError

GUARD = 1e-12


def svd_full(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full SVD, matrix = U @ diag(S) @ Vt with square U and Vt.

    Both branches call LAPACK's dgesdd and return bit-identical factors;
    scipy's wrapper is picked for strongly rectangular inputs where it runs
    about twice as fast, numpy's for the small square ones where it wins.
    """
    matrix = np.asarray(matrix)
    try:
        if max(matrix.shape, default=0) > 64:
            return scipy.linalg.svd(matrix, full_matrices=True,
                                    lapack_driver="gesdd", check_finite=False)
        return np.linalg.svd(matrix, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc


def _as_stack(stack: np.ndarray) -> np.ndarray:
    stack = np.asarray(stack, dtype=np.float64)
    if stack.ndim != 2:
        raise ShapeError(f"kernel stack has {stack.ndim} dimensions, want 2")
    if not np.all(np.isfinite(stack)):
        raise NumericalError("kernel stack holds non-finite entries")
    return stack


def _compose(n: int, p: int, u: np.ndarray, vt: np.ndarray) -> np.ndarray:
    if p > n:
        w = vt.copy()
        w[:n] = u @ vt[:n]
    elif p < n:
        w = u.copy()
        w[:, :p] = u[:, :p] @ vt
    else:
        w = u @ vt
    return w


def unitarize(stack: np.ndarray) -> np.ndarray:
    """Map an (n_k, L) stack to a (D, D) orthogonal W, D = max(n_k, L).

    The polar factor U @ Vt of the stack fills the first n_k rows (when
    L >= n_k) or first L columns (when n_k > L); the remaining rows or
    columns come from the orthonormal completion the full SVD provides.
    """
    stack = _as_stack(stack)
    n, p = stack.shape
    u, _, vt = svd_full(stack)
    return _compose(n, p, u, vt)


def unitarize_with_factors(stack: np.ndarray
                           ) -> tuple[np.ndarray, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """unitarize plus the SVD factors, so a backward pass can reuse them."""
    stack = _as_stack(stack)
    n, p = stack.shape
    factors = svd_full(stack)
    return _compose(n, p, factors[0], factors[2]), factors


def unitarize_backward(stack: np.ndarray, grad_w: np.ndarray,
                       factors: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
                       ) -> np.ndarray:
    """Gradient of a scalar loss wrt the stack, given its gradient wrt W.

    Only the polar block of W depends on the stack: grad_w rows past n_k
    (or columns past L) are ignored. Degenerate singular-value pairs are
    handled with a guarded denominator, so the call never divides by zero.
    Pass the factors from unitarize_with_factors to skip the second SVD.
    """
    if factors is None:
        stack = _as_stack(stack)
        u, s, vt = svd_full(stack)
    else:
        stack = np.asarray(stack, dtype=np.float64)
        if stack.ndim != 2:
            raise ShapeError(f"kernel stack has {stack.ndim} dimensions, want 2")
        u, s, vt = factors
    n, p = stack.shape
    d = max(n, p)
    grad_w = np.asarray(grad_w, dtype=np.float64)
    if grad_w.shape != (d, d):
        raise ShapeError(f"grad_w shaped {grad_w.shape}, want {(d, d)}")
    r = min(n, p)
    u1 = u[:, :r]
    v1 = vt[:r].T

    # Gradient of the polar factor P = u1 @ v1.T under grad_w's polar block.
    g = grad_w[:n, :] if p >= n else grad_w[:, :p]
    grad_u1 = g @ v1
    grad_v1 = g.T @ u1

    diff = s[None, :] ** 2 - s[:, None] ** 2
    f = np.sign(diff) / (np.abs(diff) + GUARD)
    m_u = f * (u1.T @ grad_u1 - grad_u1.T @ u1)
    m_v = f * (v1.T @ grad_v1 - grad_v1.T @ v1)
    core = m_u * s[None, :] + s[:, None] * m_v
    grad = u1 @ core @ v1.T
    inv_s = 1.0 / (s + GUARD)
    if n > r:
        grad += (grad_u1 - u1 @ (u1.T @ grad_u1)) * inv_s[None, :] @ v1.T
    if p > r:
        grad += u1 * inv_s[None, :] @ (grad_v1 - v1 @ (v1.T @ grad_v1)).T
    return grad


def orthogonality_defect(w: np.ndarray) -> float:
    """max |W W^T - I|, the operator's distance from exact orthogonality."""
    w = np.asarray(w, dtype=np.float64)
    gram = w @ w.T
    gram[np.diag_indices_from(gram)] -= 1.0
    return float(np.max(np.abs(gram)))
