"""
Continuous-observation MLE - the weight function h_T and the estimator

h_T solves Gamma_T h_T = 1 on [0, T], where Gamma_T is the identity (white
part, if any) plus the integral operator with kernel K. Then

    theta_hat_T = int h_T dX / int h_T dt,   Var = 1 / int h_T dt.

Gamma_T is discretized by product integration on the midpoints of a uniform
partition: K is integrated exactly over every cell while f is piecewise
constant, so the kernel singularity at t = s is absorbed analytically. On a
uniform partition the resulting matrix is symmetric Toeplitz.
"""
from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.special import beta, betainc

from app.config import settings
from app.covariance import kernel_cell_integral, kernel_l1_norm
from app.errors import ConvergenceError, GridError, ModelSpecError, UnsupportedModelError
from app.models import (
    CovarianceModel,
    EstimateReport,
    ModelKind,
    SamplePath,
    Scheme,
    SymToeplitz,
    WeightFunction,
    WeightMethod,
)
from app.toeplitz import matvec, solve_spd_toeplitz


# ===================================
# Discretized Operator
# ===================================

def midpoint_nodes(horizon: float, n: int) -> np.ndarray:
    """Midpoints of the uniform partition of [0, T] into n cells"""
    return (np.arange(n) + 0.5) * (horizon / n)


def nystrom_operator(model: CovarianceModel, horizon: float, n: int) -> SymToeplitz:
    """
    Kernel part of the discretized Gamma_T

    Entry (i, j) is the integral of K(t_i - s) over cell j, which depends
    only on |i - j|.
    """
    model.require_continuous_admissible()
    if n < 2:
        raise ValueError(f"need at least two cells, got n = {n}")
    width = horizon / n
    lags = np.arange(n)
    row = kernel_cell_integral(model, (lags - 0.5) * width, (lags + 0.5) * width)
    return SymToeplitz(first_row=row)


def _apply(operator: SymToeplitz, white: bool, f: np.ndarray) -> np.ndarray:
    out = matvec(operator, f)
    return out + f if white else out


def gamma_apply(model: CovarianceModel, f: np.ndarray, horizon: float) -> np.ndarray:
    """
    (Gamma_T f)(t_i) at the midpoint nodes for piecewise-constant f

    Args:
        model: Continuous-admissible noise model
        f: Cell values of f (length n >= 2)
        horizon: T

    Returns:
        Nodal values of Gamma_T f
    """
    f = np.asarray(f, dtype=float)
    operator = nystrom_operator(model, horizon, f.size)
    return _apply(operator, model.has_white_component, f)


def weight_residual(model: CovarianceModel, ht: WeightFunction, boundary_cells: int = 0) -> float:
    """max |Gamma_T h - 1| over nodes, skipping boundary_cells cells at each end"""
    r = gamma_apply(model, ht.coefficients, ht.horizon) - 1.0
    if boundary_cells:
        r = r[boundary_cells: r.size - boundary_cells]
    if r.size == 0:
        raise ValueError(f"no interior nodes left after excluding {boundary_cells} cells per side")
    return float(np.max(np.abs(r)))


def _operator_norm(operator: SymToeplitz, model: CovarianceModel, horizon: float) -> float:
    """Largest eigenvalue by power iteration, clamped by ||K||_{L1[-T, T]}"""
    if not np.any(operator.first_row):
        return 0.0
    v = np.full(operator.n, 1.0 / np.sqrt(operator.n))
    estimate = 0.0
    for _ in range(settings.power_iterations):
        w = matvec(operator, v)
        estimate = float(v @ w)
        norm = np.linalg.norm(w)
        if norm == 0:
            return 0.0
        v = w / norm
    bound = kernel_l1_norm(model, horizon)
    logger.debug(f"Operator norm: power iteration {estimate:.6f}, L1 bound {bound:.6f}")
    return min(estimate, bound)


# ===================================
# Weight Function Solvers
# ===================================

def ht_closed_form_fbm(hurst: float, horizon: float, n: int) -> WeightFunction:
    """
    h_T(s) = C_H s^{1/2-H} (T-s)^{1/2-H} for fractional Brownian motion

    C_H = 1 / (H (2H-1) B(H-1/2, 3/2-H)). integral_h is the exact Beta value
    C_H T^{2-2H} B(3/2-H, 3/2-H); the midpoint sum is kept for diagnostics.

    Args:
        hurst: H in (1/2, 1)
        horizon: T
        n: Number of cells

    Returns:
        WeightFunction with nodal values and exact cell averages
    """
    if not 0.5 < hurst < 1.0:
        raise ModelSpecError(f"closed-form h_T needs H in (1/2, 1), got {hurst}")
    if n < 2:
        raise ValueError(f"need at least two cells, got n = {n}")

    model = CovarianceModel.fbm(hurst)
    width = horizon / n
    nodes = midpoint_nodes(horizon, n)
    exponent = 0.5 - hurst
    p = 1.5 - hurst
    c_h = 1.0 / (hurst * (2.0 * hurst - 1.0) * beta(hurst - 0.5, p))

    values = c_h * (nodes * (horizon - nodes)) ** exponent
    # Mean over each cell through the regularized incomplete Beta function
    cdf = betainc(p, p, np.linspace(0.0, 1.0, n + 1))
    scale = c_h * horizon ** (2.0 - 2.0 * hurst) * beta(p, p)
    cell_averages = scale * np.diff(cdf) / width

    provisional = WeightFunction(
        model=model,
        horizon=horizon,
        nodes=nodes,
        values=values,
        cell_width=width,
        integral_h=scale,
        midpoint_integral=float(values.sum() * width),
        cell_averages=cell_averages,
        residual=0.0,
        tol=1.0,
        method=WeightMethod.CLOSED_FORM,
    )
    residual = weight_residual(model, provisional, settings.boundary_cells(n))
    logger.debug(f"Closed-form h_T for H={hurst}, T={horizon}, n={n}: interior residual {residual:.3e}")
    return provisional.model_copy(
        update={"residual": residual, "tol": max(residual, np.finfo(float).eps)}
    )


def ht_neumann(
    model: CovarianceModel,
    horizon: float,
    n: int,
    tol: float,
    max_iter: int,
) -> WeightFunction:
    """
    Solve (I + Gamma^C) h = 1 by the shifted Neumann series

        h <- (1 + (c I - Gamma^C) h) / (1 + c),   c = ||Gamma^C|| / 2,

    i.e. Richardson iteration h <- h + (1 - Gamma_T h) / (1 + c).

    Args:
        model: Model with a white (Wiener) component
        horizon: T
        n: Number of cells
        tol: Stop when max |Gamma_T h - 1| <= tol
        max_iter: Iteration cap

    Returns:
        WeightFunction

    Raises:
        UnsupportedModelError: no white component
        ConvergenceError: tol not reached within max_iter
    """
    model.require_continuous_admissible()
    if not model.has_white_component:
        raise UnsupportedModelError(
            f"Neumann series needs a white component; '{model}' has none "
            "(use ht_closed_form_fbm for pure fBm)"
        )
    if n < 2:
        raise ValueError(f"need at least two cells, got n = {n}")

    operator = nystrom_operator(model, horizon, n)
    shift = 0.5 * _operator_norm(operator, model, horizon)
    logger.debug(f"Neumann series for '{model}', T={horizon}, n={n}: shift c={shift:.6f}")

    h = np.zeros(n)
    r = np.ones(n)
    residual = 1.0
    iterations = 0
    while residual > tol:
        if iterations >= max_iter:
            raise ConvergenceError(
                f"Neumann series for '{model}' (T={horizon}, n={n}) stopped after {iterations} "
                f"iterations with residual {residual:.3e} > {tol:.1e}",
                residual=residual,
                iterations=iterations,
            )
        h = h + r / (1.0 + shift)
        iterations += 1
        r = 1.0 - _apply(operator, True, h)
        residual = float(np.max(np.abs(r)))

    width = horizon / n
    integral = float(h.sum() * width)
    logger.info(
        f"✅ h_T for '{model}', T={horizon}: {iterations} iterations, "
        f"residual {residual:.2e}, integral {integral:.6f}"
    )
    return WeightFunction(
        model=model,
        horizon=horizon,
        nodes=midpoint_nodes(horizon, n),
        values=h,
        cell_width=width,
        integral_h=integral,
        midpoint_integral=integral,
        residual=residual,
        tol=tol,
        method=WeightMethod.NEUMANN,
        iterations=iterations,
    )


def ht_direct(model: CovarianceModel, horizon: float, n: int) -> WeightFunction:
    """Solve the Nyström system Gamma_T h = 1 directly (Levinson), the oracle for the other solvers"""
    operator = nystrom_operator(model, horizon, n)
    row = operator.first_row.copy()
    if model.has_white_component:
        row[0] += 1.0
    system = SymToeplitz(first_row=row)
    h = solve_spd_toeplitz(system, np.ones(n))
    residual = float(np.max(np.abs(matvec(system, h) - 1.0)))
    width = horizon / n
    integral = float(h.sum() * width)
    return WeightFunction(
        model=model,
        horizon=horizon,
        nodes=midpoint_nodes(horizon, n),
        values=h,
        cell_width=width,
        integral_h=integral,
        midpoint_integral=integral,
        residual=residual,
        tol=max(residual, np.finfo(float).eps),
        method=WeightMethod.DIRECT,
    )


def solve_weight_function(
    model: CovarianceModel,
    horizon: float,
    n: Optional[int] = None,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    use_cache: Optional[bool] = None,
) -> WeightFunction:
    """
    Pick the solver that covers the model

    White component -> Neumann series; pure fBm -> closed form;
    two fBm without white part -> UnsupportedModelError.
    """
    model.require_continuous_admissible()
    n = n or settings.default_cells(horizon)
    tol = tol if tol is not None else settings.neumann_tol
    max_iter = max_iter or settings.neumann_max_iter
    use_cache = settings.enable_cache if use_cache is None else use_cache

    if model.has_white_component:
        method = WeightMethod.NEUMANN
    elif model.kind == ModelKind.FBM:
        method = WeightMethod.CLOSED_FORM
    else:
        raise UnsupportedModelError(
            f"No weight-function solver for '{model}': two fBm components without a white part "
            "are covered neither by the closed form nor by the Neumann series"
        )

    cache = None
    if use_cache:
        from app.weight_cache import WeightCache
        cache = WeightCache()
        cached = cache.get(model, horizon, n, tol, method)
        if cached is not None:
            cache.close()
            return cached

    if method == WeightMethod.NEUMANN:
        ht = ht_neumann(model, horizon, n, tol, max_iter)
    else:
        ht = ht_closed_form_fbm(model.hurst1, horizon, n)

    if cache is not None:
        cache.put(ht, tol)
        cache.close()
    return ht


def continuous_variance_profile(
    model: CovarianceModel,
    horizons: Sequence[float],
    n: Optional[int] = None,
    use_cache: Optional[bool] = False,
) -> List[Tuple[float, float]]:
    """(T, Var theta_hat_T) for each horizon; decreasing in T"""
    return [
        (float(T), solve_weight_function(model, T, n=n, use_cache=use_cache).theoretical_variance)
        for T in horizons
    ]


# ===================================
# Estimator
# ===================================

class ContinuousEstimator:
    """Midpoint Riemann-Stieltjes weights of h_T on a fixed path grid"""

    def __init__(self, ht: WeightFunction, times: np.ndarray):
        """
        Args:
            ht: Solved weight function
            times: Path grid on [0, T] with the same T as ht
        """
        times = np.asarray(times, dtype=float)
        horizon = float(times[-1])
        if abs(horizon - ht.horizon) > 1e-9 * ht.horizon:
            raise GridError(f"path horizon {horizon} does not match weight-function horizon {ht.horizon}")

        self.ht = ht
        self.times = times
        steps = np.diff(times)
        midpoints = 0.5 * (times[1:] + times[:-1])
        # Linear between nodes, nearest node value beyond the outermost nodes
        self.weights = np.interp(midpoints, ht.nodes, ht.values)
        self.denominator = float(self.weights @ steps)
        if not self.denominator > 0:
            raise GridError(f"discretized integral of h_T is {self.denominator}, not positive")
        mean_step = horizon / steps.size
        self.regular = bool(np.max(np.abs(steps - mean_step)) <= settings.regular_grid_rtol * mean_step)
        self.step = mean_step if self.regular else None

    def estimate(self, increments: np.ndarray) -> float:
        return float(self.weights @ increments) / self.denominator

    def loglik(self, increments: np.ndarray, theta: float) -> float:
        return theta * float(self.weights @ increments) - 0.5 * theta * theta * self.denominator

    def report(self, theta_hat: float) -> EstimateReport:
        return EstimateReport(
            theta_hat=theta_hat,
            theoretical_variance=self.ht.theoretical_variance,
            scheme=Scheme.CONTINUOUS,
            model=self.ht.model,
            n_increments=self.times.size - 1,
            horizon=self.ht.horizon,
            step=self.step,
            n_cells=self.ht.n,
            regular_grid=self.regular,
        )


def _check_model(ht: WeightFunction, model: CovarianceModel) -> None:
    if ht.model != model:
        raise ModelSpecError(f"weight function was solved for '{ht.model}', not '{model}'")


def estimate_continuous(path: SamplePath, ht: WeightFunction, model: CovarianceModel) -> EstimateReport:
    """
    theta_hat_T = sum h(m_i) dX_i / sum h(m_i) dt_i over path cells with midpoints m_i

    Args:
        path: Observed path on [0, T]
        ht: Weight function for the same model and T
        model: Noise model

    Returns:
        EstimateReport with variance 1 / integral_h
    """
    _check_model(ht, model)
    estimator = ContinuousEstimator(ht, path.times)
    return estimator.report(estimator.estimate(path.increments))


def loglik_continuous(path: SamplePath, ht: WeightFunction, model: CovarianceModel, theta: float) -> float:
    """theta int h dX - theta^2/2 int h dt, with the estimator's discretization"""
    _check_model(ht, model)
    return ContinuousEstimator(ht, path.times).loglik(path.increments, theta)
