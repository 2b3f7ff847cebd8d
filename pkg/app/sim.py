"""
Path Simulator - exact Gaussian sampling of X_t = theta*t + B_t on regular grids

Fractional Gaussian noise comes from circulant embedding of its
autocovariance; the dense Cholesky sampler is kept as an oracle for small n.
Randomness is drawn from Philox streams keyed by (seed, replication, component),
so every replication is reproducible on its own.
"""
from functools import lru_cache
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import ValidationError
from scipy.linalg import cholesky, toeplitz

from app.config import settings
from app.covariance import autocov_at
from app.errors import GridError, ModelSpecError, PathFileError, SimulationError
from app.models import CovarianceModel, SamplePath, SimConfig


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Independent Philox generator for (seed, *keys)"""
    sequence = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(sequence))


def _check_fgn_args(hurst: float, n: int, h: float) -> None:
    if not 0.0 < hurst < 1.0:
        raise ModelSpecError(f"Hurst index must lie in the open interval (0, 1), got {hurst}")
    if n < 1:
        raise GridError(f"need at least one increment, got n = {n}")
    if h <= 0:
        raise GridError(f"grid step must be positive, got {h}")


class CirculantSampler:
    """
    Circulant embedding of unit-step fGn of length n

    The first n autocovariances are embedded into a circulant of size 2L,
    L the smallest power of two >= n. Its eigenvalues are computed once and
    reused for every draw.
    """

    def __init__(self, hurst: float, n: int):
        _check_fgn_args(hurst, n, 1.0)
        self.hurst = hurst
        self.n = n
        half = 1 << max(n - 1, 0).bit_length()
        self.size = 2 * half

        gamma = autocov_at(CovarianceModel.fbm(hurst), 1.0, np.arange(half + 1))
        first_column = np.concatenate((gamma, gamma[-2:0:-1]))
        eigenvalues = np.fft.fft(first_column).real

        smallest = float(eigenvalues.min())
        if smallest < -settings.circulant_negative_tol * gamma[0]:
            raise SimulationError(
                f"circulant embedding for H={hurst}, n={n} has eigenvalue {smallest:.3e}; "
                "the autocovariance is not a valid fGn covariance"
            )
        self.sqrt_eigenvalues = np.sqrt(np.clip(eigenvalues, 0.0, None) / self.size)
        logger.debug(f"Circulant sampler H={hurst}, n={n}, embedding size {self.size}")

    def sample(self, rng: np.random.Generator, h: float = 1.0) -> np.ndarray:
        """One draw of n increments with step h"""
        noise = rng.standard_normal(self.size) + 1j * rng.standard_normal(self.size)
        synthesized = np.fft.fft(self.sqrt_eigenvalues * noise)
        return synthesized.real[: self.n] * h ** self.hurst


@lru_cache(maxsize=32)
def circulant_sampler(hurst: float, n: int) -> CirculantSampler:
    return CirculantSampler(hurst, n)


def _fgn_from(rng: np.random.Generator, hurst: float, n: int, h: float) -> np.ndarray:
    if hurst == 0.5:
        return np.sqrt(h) * rng.standard_normal(n)
    return circulant_sampler(hurst, n).sample(rng, h)


def simulate_fgn(hurst: float, n: int, h: float, seed: int) -> np.ndarray:
    """
    n increments of fBm with Hurst index H on a grid of step h

    Args:
        hurst: H in (0, 1); H = 1/2 gives i.i.d. N(0, h)
        n: Number of increments
        h: Grid step
        seed: Base seed

    Returns:
        Increment vector, deterministic in (H, n, h, seed)
    """
    _check_fgn_args(hurst, n, h)
    return _fgn_from(substream(seed), hurst, n, h)


def simulate_fgn_cholesky(hurst: float, n: int, h: float, seed: int) -> np.ndarray:
    """Dense Cholesky sampler of the same increments, the O(n^3) oracle"""
    _check_fgn_args(hurst, n, h)
    if n > settings.cholesky_oracle_max_n:
        raise ValueError(f"Cholesky oracle is limited to n <= {settings.cholesky_oracle_max_n}, got {n}")
    gamma = autocov_at(CovarianceModel.fbm(hurst), h, np.arange(n))
    lower = cholesky(toeplitz(gamma), lower=True)
    return lower @ substream(seed).standard_normal(n)


def simulate_path(cfg: SimConfig, replication: int = 0) -> SamplePath:
    """
    One path of X on the uniform grid t_k = k T / n_steps

    Args:
        cfg: Simulation configuration
        replication: Replication index; component i draws from substream (seed, replication, i)

    Returns:
        SamplePath with X_0 = 0
    """
    times = np.linspace(0.0, cfg.horizon, cfg.n_steps + 1)
    noise = np.zeros(cfg.n_steps)
    for i, hurst in enumerate(cfg.model.components):
        noise += _fgn_from(substream(cfg.seed, replication, i), hurst, cfg.n_steps, cfg.step)
    values = cfg.theta * times
    values[1:] += np.cumsum(noise)
    values[0] = 0.0
    return SamplePath(times=times, values=values)


# ===================================
# Path CSV
# ===================================

def write_path_csv(path: SamplePath, file: Union[str, Path]) -> Path:
    """Write header ``t,x`` and one row per grid point with 17 significant digits"""
    file = Path(file)
    frame = pd.DataFrame({"t": path.times, "x": path.values})
    try:
        file.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(file, index=False, float_format="%.17g")
    except OSError as e:
        raise PathFileError(f"Cannot write path file {file}: {e}", path=str(file)) from e
    logger.info(f"💾 Wrote {path.n_increments + 1} grid points to {file}")
    return file


def read_path_csv(file: Union[str, Path]) -> SamplePath:
    """
    Read a path written by write_path_csv

    Raises:
        PathFileError: missing, unreadable or not a ``t,x`` table
        GridError: readable table that is not a valid sample path
    """
    file = Path(file)
    if not file.is_file():
        raise PathFileError(f"Path file not found: {file}", path=str(file))
    try:
        frame = pd.read_csv(file, float_precision="round_trip")
    except (OSError, ValueError, pd.errors.ParserError) as e:
        raise PathFileError(f"Cannot read path file {file}: {e}", path=str(file)) from e

    if list(frame.columns) != ["t", "x"]:
        raise PathFileError(
            f"Path file {file} must have header 't,x', found {','.join(map(str, frame.columns))}",
            path=str(file),
        )
    try:
        times = frame["t"].to_numpy(dtype=float)
        values = frame["x"].to_numpy(dtype=float)
    except ValueError as e:
        raise PathFileError(f"Non-numeric entries in path file {file}", path=str(file)) from e

    try:
        return SamplePath(times=times, values=values)
    except ValidationError as e:
        messages = "; ".join(err["msg"] for err in e.errors())
        raise GridError(f"Path file {file} is not a valid sample path: {messages}") from None
