"""
Covariance structure of the supported noise processes

Increment autocovariances feed the discrete scheme, the kernel
K(t - s) = d^2 E[B_t B_s] / ds dt feeds the continuous scheme. Composite
models add their independent components.
"""
from typing import Union

import numpy as np
from scipy.special import binom

from app.errors import GridError
from app.models import CovarianceModel, IncrementAutocov

ArrayLike = Union[float, np.ndarray]

# Lags from which the second difference is evaluated by its binomial series
_SERIES_FROM_LAG = 1000
_SERIES_TERMS = 4


def _fgn_second_difference(lags: np.ndarray, hurst: float) -> np.ndarray:
    """((k+1)^{2H} - 2 k^{2H} + |k-1|^{2H}) / 2, the unit-step fGn autocovariance"""
    k = np.asarray(lags, dtype=float)
    p = 2.0 * hurst
    out = np.empty_like(k)

    small = k < _SERIES_FROM_LAG
    ks = k[small]
    out[small] = 0.5 * ((ks + 1.0) ** p - 2.0 * ks ** p + np.abs(ks - 1.0) ** p)

    # (1+x)^p + (1-x)^p - 2 = 2 sum_j C(p, 2j) x^{2j} with x = 1/k
    kl = k[~small]
    if kl.size:
        x2 = kl ** -2.0
        series = np.zeros_like(kl)
        for j in range(_SERIES_TERMS, 0, -1):
            series = series * x2 + binom(p, 2 * j)
        out[~small] = kl ** (p - 2.0) * series
    return out


def autocov_at(model: CovarianceModel, h: float, lags: ArrayLike) -> np.ndarray:
    """
    Increment autocovariance gamma(k) at arbitrary nonnegative integer lags

    Args:
        model: Noise model
        h: Grid step
        lags: Lags k >= 0

    Returns:
        Array of gamma(k), one entry per lag
    """
    if h <= 0:
        raise GridError(f"grid step must be positive, got {h}")
    k = np.atleast_1d(np.asarray(lags, dtype=float))
    if np.any(k < 0):
        raise ValueError("lags must be nonnegative")
    gamma = np.zeros_like(k)
    for hurst in model.components:
        gamma += h ** (2.0 * hurst) * _fgn_second_difference(k, hurst)
    return gamma


def increment_autocov(model: CovarianceModel, h: float, n: int) -> IncrementAutocov:
    """
    gamma(k) = R((k+1)h, h) - R(kh, h) for k = 0..n-1

    Args:
        model: Noise model
        h: Grid step
        n: Number of lags

    Returns:
        IncrementAutocov with n entries
    """
    if n < 1:
        raise GridError(f"need at least one lag, got n = {n}")
    return IncrementAutocov(step_h=h, gamma=autocov_at(model, h, np.arange(n)))


def covariance_function(model: CovarianceModel, t: ArrayLike, s: ArrayLike) -> np.ndarray:
    """R(t, s) = E[B_t B_s], summed over independent components"""
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    total = np.zeros(np.broadcast(t, s).shape)
    for hurst in model.components:
        p = 2.0 * hurst
        total += 0.5 * (np.abs(t) ** p + np.abs(s) ** p - np.abs(t - s) ** p)
    return total


def kernel_K(model: CovarianceModel, t: ArrayLike) -> ArrayLike:
    """
    Non-white part of the kernel: sum over fBm components of H(2H-1)|t|^{2H-2}

    The Wiener component contributes the identity summand of Gamma_T, not a
    density, so it is absent here.
    """
    model.require_continuous_admissible()
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr == 0):
        raise ValueError("kernel K is singular at t = 0; integrate it over cells instead")
    total = np.zeros_like(t_arr)
    for hurst in model.fbm_hursts:
        total += hurst * (2.0 * hurst - 1.0) * np.abs(t_arr) ** (2.0 * hurst - 2.0)
    return float(total) if total.ndim == 0 else total


def kernel_antiderivative(model: CovarianceModel, u: ArrayLike) -> np.ndarray:
    """Odd antiderivative of K: sum of H sign(u) |u|^{2H-1}"""
    u = np.asarray(u, dtype=float)
    total = np.zeros_like(u)
    for hurst in model.fbm_hursts:
        total += hurst * np.sign(u) * np.abs(u) ** (2.0 * hurst - 1.0)
    return total


def kernel_cell_integral(model: CovarianceModel, a: ArrayLike, b: ArrayLike) -> ArrayLike:
    """
    Exact integral of K over [a, b], including cells that straddle 0

    Args:
        model: Continuous-admissible noise model
        a: Lower limits
        b: Upper limits, b > a elementwise

    Returns:
        Integral per cell (scalar for scalar input)
    """
    model.require_continuous_admissible()
    a_arr = np.asarray(a, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    if np.any(a_arr >= b_arr):
        raise ValueError("cell integral needs a < b")
    value = kernel_antiderivative(model, b_arr) - kernel_antiderivative(model, a_arr)
    return float(value) if value.ndim == 0 else value


def kernel_l1_norm(model: CovarianceModel, horizon: float) -> float:
    """||K||_{L1[-T, T]} = 2 sum H T^{2H-1}, the bound on the operator norm of Gamma_T"""
    model.require_continuous_admissible()
    return float(sum(2.0 * hurst * horizon ** (2.0 * hurst - 1.0) for hurst in model.fbm_hursts))
