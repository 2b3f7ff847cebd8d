"""
Monte Carlo experiments - drift-estimation table and discrete consistency runs
"""
from concurrent.futures import ThreadPoolExecutor
from itertools import product
from pathlib import Path
from typing import Callable, List, Literal, Optional, Sequence, Union

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel

from app.config import settings
from app.continuous import ContinuousEstimator, solve_weight_function
from app.discrete import DiscreteEstimator
from app.errors import DriftEstimationError, ModelSpecError, PathFileError
from app.models import ConsistencyRow, CovarianceModel, ExperimentRow, Scheme, SimConfig
from app.sim import simulate_path


def row_seed(seed: int, row: int) -> int:
    """Base seed of experiment row `row`, decorrelated from the other rows"""
    return int(np.random.SeedSequence(seed, spawn_key=(row,)).generate_state(1, np.uint64)[0])


def _replicate(fn: Callable[[int], float], n_reps: int, max_workers: int) -> np.ndarray:
    """fn(0), ..., fn(n_reps - 1), gathered in replication order"""
    if max_workers <= 1:
        return np.array([fn(r) for r in range(n_reps)])
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return np.array(list(pool.map(fn, range(n_reps))))


def run_table1(
    H_list: Optional[Sequence[float]] = None,
    T_list: Optional[Sequence[float]] = None,
    theta: Optional[float] = None,
    n_reps: Optional[int] = None,
    n_steps_per_unit_T: Optional[int] = None,
    seed: Optional[int] = None,
    max_workers: Optional[int] = None,
    n_cells: Optional[int] = None,
    use_cache: Optional[bool] = None,
) -> List[ExperimentRow]:
    """
    Means and variances of the continuous MLE under fBm(H) + Wiener noise

    For every (H, T): solve h_T, simulate n_reps paths at drift theta and
    estimate each one. Unset arguments fall back to settings.

    Args:
        H_list: Hurst indices in (1/2, 1)
        T_list: Horizons
        theta: True drift
        n_reps: Replications per row (>= 2)
        n_steps_per_unit_T: Path steps per unit of T
        seed: Base seed
        max_workers: Threads for the replications
        n_cells: Weight-function cells (default from settings)
        use_cache: Consult the weight cache

    Returns:
        One ExperimentRow per (H, T), H outermost
    """
    H_list = list(H_list or settings.table1_hursts)
    T_list = list(T_list or settings.table1_horizons)
    theta = settings.table1_theta if theta is None else theta
    n_reps = settings.default_replications if n_reps is None else n_reps
    seed = settings.default_seed if seed is None else seed
    max_workers = max_workers or settings.max_workers

    if n_reps < 2:
        raise ValueError(f"need at least two replications for a sample variance, got {n_reps}")
    if n_steps_per_unit_T is not None and n_steps_per_unit_T < 1:
        raise ValueError(f"need at least one path step per unit of T, got {n_steps_per_unit_T}")
    for hurst in H_list:
        if not 0.5 < hurst < 1.0:
            raise ModelSpecError(f"table rows need H in (1/2, 1), got {hurst}")

    rows: List[ExperimentRow] = []
    for index, (hurst, horizon) in enumerate(product(H_list, T_list)):
        model = CovarianceModel.fbm_plus_wiener(hurst)
        ht = solve_weight_function(model, horizon, n=n_cells, use_cache=use_cache)

        cfg = SimConfig(
            model=model,
            theta=theta,
            horizon=horizon,
            n_steps=settings.default_path_steps(horizon, n_steps_per_unit_T),
            seed=row_seed(seed, index),
        )
        estimator = ContinuousEstimator(ht, np.linspace(0.0, horizon, cfg.n_steps + 1))
        estimates = _replicate(
            lambda r: estimator.estimate(simulate_path(cfg, r).increments),
            n_reps,
            max_workers,
        )

        row = ExperimentRow(
            hurst=hurst,
            horizon=horizon,
            scheme=Scheme.CONTINUOUS,
            n_replications=n_reps,
            sample_mean=float(estimates.mean()),
            sample_variance=float(estimates.var(ddof=1)),
            theoretical_variance=ht.theoretical_variance,
        )
        logger.info(
            f"📊 H={hurst}, T={horizon}: mean {row.sample_mean:.4f}, "
            f"variance {row.sample_variance:.4f} (theory {row.theoretical_variance:.4f})"
        )
        rows.append(row)
    return rows


def run_discrete_consistency(
    model: CovarianceModel,
    h: float,
    N_list: Sequence[int],
    theta: float,
    n_reps: int,
    seed: int,
    max_workers: Optional[int] = None,
) -> List[ConsistencyRow]:
    """
    Mean-square error of the discrete MLE along growing sample sizes

    Each replication simulates max(N_list) increments once; the estimate for
    N uses its first N increments.

    Args:
        model: Noise model
        h: Grid step
        N_list: Strictly increasing sample sizes
        theta: True drift
        n_reps: Replications
        seed: Base seed
        max_workers: Threads for the replications

    Returns:
        One ConsistencyRow per N
    """
    N_list = [int(n) for n in N_list]
    if not N_list or N_list[0] < 1 or any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ValueError(f"N_list must be strictly increasing positive sizes, got {N_list}")
    if n_reps < 1:
        raise ValueError(f"need at least one replication, got {n_reps}")
    max_workers = max_workers or settings.max_workers

    n_max = N_list[-1]
    cfg = SimConfig(model=model, theta=theta, horizon=n_max * h, n_steps=n_max, seed=seed)
    times = np.linspace(0.0, cfg.horizon, n_max + 1)
    estimators = [DiscreteEstimator(model, times[: n + 1]) for n in N_list]

    def estimate_all(replication: int) -> np.ndarray:
        increments = simulate_path(cfg, replication).increments
        return np.array([e.estimate(increments[: e.n_increments]) for e in estimators])

    estimates = _replicate(estimate_all, n_reps, max_workers).reshape(n_reps, len(N_list))

    rows: List[ConsistencyRow] = []
    for column, estimator in enumerate(estimators):
        column_estimates = estimates[:, column]
        rows.append(
            ConsistencyRow(
                n_increments=estimator.n_increments,
                step=h,
                n_replications=n_reps,
                sample_mean=float(column_estimates.mean()),
                sample_mse=float(np.mean((column_estimates - theta) ** 2)),
                theoretical_variance=estimator.theoretical_variance,
            )
        )
        logger.info(
            f"📊 '{model}' N={estimator.n_increments}: MSE {rows[-1].sample_mse:.4e} "
            f"(theory {rows[-1].theoretical_variance:.4e})"
        )

    for prev, cur in zip(rows, rows[1:]):
        if cur.theoretical_variance > prev.theoretical_variance * (1.0 + 1e-12):
            raise DriftEstimationError(
                f"theoretical variance increased from N={prev.n_increments} to N={cur.n_increments}: "
                f"{prev.theoretical_variance:.6e} -> {cur.theoretical_variance:.6e}"
            )
        if cur.sample_mse >= prev.sample_mse:
            logger.warning(
                f"⚠️ Sample MSE did not decrease from N={prev.n_increments} to N={cur.n_increments} "
                f"({prev.sample_mse:.4e} -> {cur.sample_mse:.4e})"
            )
    return rows


def write_report(
    rows: Sequence[BaseModel],
    path: Union[str, Path],
    fmt: Optional[Literal["csv", "json"]] = None,
) -> Path:
    """
    Write experiment rows as CSV or JSON, fields under their short names

    Args:
        rows: ExperimentRow or ConsistencyRow instances
        path: Output file
        fmt: "csv" or "json"; inferred from the suffix when omitted

    Returns:
        The written path
    """
    path = Path(path)
    fmt = fmt or ("json" if path.suffix.lower() == ".json" else "csv")
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown report format '{fmt}'")

    frame = pd.DataFrame([row.model_dump(mode="json", by_alias=True) for row in rows])
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if fmt == "csv":
            frame.to_csv(path, index=False)
        else:
            frame.to_json(path, orient="records", indent=2)
    except OSError as e:
        raise PathFileError(f"Cannot write report {path}: {e}", path=str(path)) from e

    logger.info(f"💾 Wrote {len(rows)} rows to {path}")
    return path
