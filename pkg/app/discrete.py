"""
Discrete-observation MLE of the drift

For observations X_{t_1}, ..., X_{t_N} with increments dX and steps z,

    theta_hat = z' Gamma^{-1} dX / z' Gamma^{-1} z,   Var = 1 / z' Gamma^{-1} z.

Regular grids use the Toeplitz solver; arbitrary grids build Gamma entrywise
from the covariance function.
"""
from typing import List, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from app.config import settings
from app.covariance import covariance_function
from app.errors import GridError, SingularCovarianceError
from app.models import CovarianceModel, EstimateReport, SamplePath, Scheme
from app.toeplitz import build_gamma, solve_prefix_forms, solve_spd_toeplitz


def dense_gamma(model: CovarianceModel, times: np.ndarray) -> np.ndarray:
    """
    Covariance matrix of the increments on an arbitrary grid

    Args:
        model: Noise model
        times: Grid 0 = t_0 < ... < t_N

    Returns:
        N x N matrix Cov(B_{t_i} - B_{t_{i-1}}, B_{t_j} - B_{t_{j-1}})
    """
    times = np.asarray(times, dtype=float)
    right = times[1:]
    left = times[:-1]
    return (
        covariance_function(model, right[:, None], right[None, :])
        - covariance_function(model, right[:, None], left[None, :])
        - covariance_function(model, left[:, None], right[None, :])
        + covariance_function(model, left[:, None], left[None, :])
    )


class DiscreteEstimator:
    """Linear MLE weights w = Gamma^{-1} z for a fixed grid and model"""

    def __init__(self, model: CovarianceModel, times: np.ndarray, require_regular: bool = False):
        """
        Precompute the estimator weights

        Args:
            model: Noise model
            times: Observation grid starting at 0
            require_regular: Raise GridError instead of using the dense path on irregular grids
        """
        times = np.asarray(times, dtype=float)
        self.model = model
        self.n_increments = times.size - 1
        self.horizon = float(times[-1])
        if self.n_increments < 1:
            raise GridError("need at least one increment")

        steps = np.diff(times)
        mean_step = self.horizon / self.n_increments
        self.regular = bool(np.max(np.abs(steps - mean_step)) <= settings.regular_grid_rtol * mean_step)

        if self.regular:
            self.step = mean_step
            self.z = np.full(self.n_increments, mean_step)
            gamma = build_gamma(model, mean_step, self.n_increments)
            self.weights = solve_spd_toeplitz(gamma, self.z)
        else:
            if require_regular:
                raise GridError(
                    f"irregular grid: step deviation exceeds {settings.regular_grid_rtol:g} relative"
                )
            logger.debug(f"Irregular grid with N={self.n_increments}, using dense covariance")
            self.step = None
            self.z = steps
            try:
                factor = cho_factor(dense_gamma(model, times), lower=True)
            except LinAlgError as e:
                raise SingularCovarianceError(
                    f"Covariance of the {self.n_increments} increments under '{model}' is singular"
                ) from e
            self.weights = cho_solve(factor, self.z)

        self.information = float(self.z @ self.weights)
        if not self.information > 0:
            raise SingularCovarianceError(f"z' Gamma^-1 z = {self.information} is not positive")

    @property
    def theoretical_variance(self) -> float:
        return 1.0 / self.information

    def estimate(self, increments: np.ndarray) -> float:
        """theta_hat for one vector of observed increments"""
        return float(self.weights @ increments) / self.information

    def loglik(self, increments: np.ndarray, theta: float) -> float:
        """log L = theta z'G^{-1}dX - theta^2/2 z'G^{-1}z"""
        return theta * float(self.weights @ increments) - 0.5 * theta * theta * self.information

    def report(self, theta_hat: float) -> EstimateReport:
        return EstimateReport(
            theta_hat=theta_hat,
            theoretical_variance=self.theoretical_variance,
            scheme=Scheme.DISCRETE,
            model=self.model,
            n_increments=self.n_increments,
            horizon=self.horizon,
            step=self.step,
            regular_grid=self.regular,
        )


def estimate_discrete(
    path: SamplePath,
    model: CovarianceModel,
    require_regular: bool = False,
) -> EstimateReport:
    """
    Discrete-observation MLE of theta

    Args:
        path: Observed path
        model: Noise model
        require_regular: Reject irregular grids instead of using the dense covariance

    Returns:
        EstimateReport with theta_hat and 1 / z'Gamma^{-1}z
    """
    estimator = DiscreteEstimator(model, path.times, require_regular=require_regular)
    theta_hat = estimator.estimate(path.increments)
    logger.debug(f"Discrete MLE under '{model}' with N={estimator.n_increments}: {theta_hat:.6f}")
    return estimator.report(theta_hat)


def loglik_discrete(path: SamplePath, model: CovarianceModel, theta: float) -> float:
    """Log-likelihood ratio of theta against theta = 0 from discrete observations"""
    return DiscreteEstimator(model, path.times).loglik(path.increments, theta)


def estimate_discrete_prefixes(
    path: SamplePath,
    model: CovarianceModel,
    n_list: Sequence[int],
) -> List[float]:
    """theta_hat^(N) from the first N increments, for each N in n_list"""
    return [estimate_discrete(path.truncate(n), model).theta_hat for n in n_list]


def variance_decay_profile(model: CovarianceModel, h: float, n_max: int) -> List[Tuple[int, float]]:
    """
    Var theta_hat^(N) = 1 / z'(Gamma^(N))^{-1} z for N = 1..n_max

    All leading sections come out of a single Levinson pass.
    """
    if n_max < 2:
        raise ValueError(f"n_max must be at least 2, got {n_max}")
    forms = solve_prefix_forms(build_gamma(model, h, n_max), np.full(n_max, h))
    return [(n, 1.0 / q) for n, q in zip(range(1, n_max + 1), forms)]
