"""
Exception hierarchy shared by the estimation modules and the CLI
"""
from typing import Optional

import numpy as np


class DriftEstimationError(Exception):
    """Base class for all drift-estimation failures"""
    exit_code: int = 3


class ModelSpecError(DriftEstimationError, ValueError):
    """Invalid covariance model, model string or Hurst index"""
    exit_code = 2


class GridError(DriftEstimationError, ValueError):
    """Observation grid does not satisfy the requested scheme"""
    exit_code = 2


class SingularCovarianceError(DriftEstimationError, np.linalg.LinAlgError):
    """Covariance matrix of the increments is not positive definite"""
    exit_code = 3


class UnsupportedModelError(DriftEstimationError, ValueError):
    """No weight-function solver covers the given model"""
    exit_code = 3


class ConvergenceError(DriftEstimationError):
    """Iterative solver stopped before reaching its tolerance"""
    exit_code = 3

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class SimulationError(DriftEstimationError):
    """Circulant embedding produced a significantly negative eigenvalue"""
    exit_code = 3


class PathFileError(DriftEstimationError, OSError):
    """Sample-path file is missing or malformed"""
    exit_code = 4

    def __init__(self, message: str, path: Optional[str] = None):
        super().__init__(message)
        self.path = path
