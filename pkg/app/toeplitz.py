"""
Toeplitz Linear Algebra - solves and quadratic forms with Gamma^(N)

On a regular grid the covariance matrix of the increments is symmetric
Toeplitz. Systems are solved by Levinson recursion in O(N^2); the dense
Cholesky factorization serves as fallback and as the test oracle.
"""
from typing import Optional, Tuple

import numpy as np
from loguru import logger
from scipy.linalg import LinAlgError, cho_factor, cho_solve, cholesky, matmul_toeplitz, solve_triangular

from app.config import settings
from app.covariance import increment_autocov
from app.errors import SingularCovarianceError
from app.models import CovarianceModel, SymToeplitz


def build_gamma(model: CovarianceModel, h: float, n: int) -> SymToeplitz:
    """Gamma^(N) for N increments of step h"""
    return SymToeplitz(first_row=increment_autocov(model, h, n).gamma)


def matvec(matrix: SymToeplitz, v: np.ndarray) -> np.ndarray:
    """T v through the FFT-based Toeplitz product"""
    v = np.asarray(v, dtype=float)
    return np.asarray(matmul_toeplitz(matrix.first_row, v), dtype=float).reshape(v.shape)


def quadratic_form(matrix: SymToeplitz, u: np.ndarray) -> float:
    """u' T u"""
    u = np.asarray(u, dtype=float)
    return float(u @ matvec(matrix, u))


def _levinson(
    row: np.ndarray,
    rhs: np.ndarray,
    guard: float,
) -> Tuple[Optional[np.ndarray], Optional[np.ndarray]]:
    """
    Levinson recursion for a symmetric Toeplitz system

    Args:
        row: First row of T
        rhs: Right-hand side b
        guard: Give up once a reflection coefficient reaches 1 - guard

    Returns:
        (x, prefix) with T x = b and prefix[k] = b[:k+1]' T_{k+1}^{-1} b[:k+1],
        or (None, None) when the recursion is too close to singular
    """
    n = row.size
    r0 = row[0]
    if r0 <= 0:
        return None, None

    r = row[1:] / r0
    b = rhs / r0
    x = np.zeros(n)
    prefix = np.empty(n)
    x[0] = b[0]
    prefix[0] = rhs[0] * x[0]
    if n == 1:
        return x, prefix

    alpha = -r[0]
    if abs(alpha) >= 1.0 - guard:
        return None, None
    y = np.zeros(n - 1)
    y[0] = alpha
    beta = 1.0

    for k in range(1, n):
        beta *= 1.0 - alpha * alpha
        if beta <= 0:
            return None, None
        mu = (b[k] - r[:k] @ x[k - 1::-1]) / beta
        x[:k] += mu * y[k - 1::-1]
        x[k] = mu
        prefix[k] = rhs[: k + 1] @ x[: k + 1]

        if k < n - 1:
            alpha = (-r[k] - r[:k] @ y[k - 1::-1]) / beta
            if abs(alpha) >= 1.0 - guard:
                return None, None
            y[:k] = y[:k] + alpha * y[k - 1::-1]
            y[k] = alpha

    return x, prefix


def _dense_cholesky(matrix: SymToeplitz) -> np.ndarray:
    try:
        return cholesky(matrix.to_dense(), lower=True)
    except LinAlgError as e:
        raise SingularCovarianceError(
            f"Covariance matrix of size {matrix.n} is not positive definite; "
            "the increments have a singular Gaussian distribution"
        ) from e


def dense_solve(matrix: SymToeplitz, rhs: np.ndarray) -> np.ndarray:
    """Dense Cholesky solve, the O(N^3) oracle"""
    rhs = np.asarray(rhs, dtype=float)
    try:
        factor = cho_factor(matrix.to_dense(), lower=True)
    except LinAlgError as e:
        raise SingularCovarianceError(
            f"Covariance matrix of size {matrix.n} is not positive definite; "
            "the increments have a singular Gaussian distribution"
        ) from e
    return cho_solve(factor, rhs)


def _check_dims(matrix: SymToeplitz, *vectors: np.ndarray) -> None:
    for v in vectors:
        if v.shape != (matrix.n,):
            raise ValueError(f"vector of shape {v.shape} does not match Toeplitz size {matrix.n}")


def solve_spd_toeplitz(matrix: SymToeplitz, rhs: np.ndarray) -> np.ndarray:
    """
    Solve T x = rhs for symmetric positive definite Toeplitz T

    Levinson first; dense Cholesky when a reflection coefficient gets within
    the guard of 1 or when the Levinson residual exceeds the tolerance.

    Args:
        matrix: SPD Toeplitz matrix
        rhs: Right-hand side

    Returns:
        Solution vector

    Raises:
        SingularCovarianceError: T is not positive definite
    """
    rhs = np.asarray(rhs, dtype=float)
    _check_dims(matrix, rhs)

    x, _ = _levinson(matrix.first_row, rhs, settings.reflection_guard)
    if x is None:
        logger.warning(f"Levinson recursion near-singular at N={matrix.n}, falling back to Cholesky")
        return dense_solve(matrix, rhs)

    residual = np.max(np.abs(matvec(matrix, x) - rhs))
    scale = np.max(np.abs(rhs))
    if residual > settings.solve_residual_rtol * scale:
        logger.warning(
            f"Levinson residual {residual:.3e} above tolerance at N={matrix.n}, falling back to Cholesky"
        )
        return dense_solve(matrix, rhs)
    return x


def solve_prefix_forms(matrix: SymToeplitz, b: np.ndarray) -> np.ndarray:
    """
    Quadratic forms b_k' T_k^{-1} b_k for every leading k x k section

    Args:
        matrix: SPD Toeplitz matrix of size N
        b: Vector of length N

    Returns:
        Array of N forms, nondecreasing in k
    """
    b = np.asarray(b, dtype=float)
    _check_dims(matrix, b)

    _, prefix = _levinson(matrix.first_row, b, settings.reflection_guard)
    if prefix is not None:
        return prefix

    logger.warning(f"Levinson recursion near-singular at N={matrix.n}, using Cholesky prefix forms")
    lower = _dense_cholesky(matrix)
    # Leading blocks of L are the Cholesky factors of the leading sections
    w = solve_triangular(lower, b, lower=True)
    return np.cumsum(w * w)


def inv_quadratic_form(matrix: SymToeplitz, u: np.ndarray, v: np.ndarray) -> float:
    """u' T^{-1} v by one solve and a dot product"""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    _check_dims(matrix, u, v)
    return float(u @ solve_spd_toeplitz(matrix, v))
