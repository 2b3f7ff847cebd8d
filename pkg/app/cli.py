"""
Command-line interface for simulation, estimation and the Monte Carlo runs

Exit codes: 0 success, 2 invalid flags or inputs, 3 numerical or solver
failure, 4 file I/O failure.
"""
import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import ValidationError

from app.config import settings
from app.continuous import estimate_continuous, solve_weight_function
from app.discrete import estimate_discrete
from app.errors import DriftEstimationError, PathFileError
from app.experiment import run_discrete_consistency, run_table1, write_report
from app.models import CovarianceModel, EstimateReport, SimConfig
from app.sim import read_path_csv, simulate_path, write_path_csv


def configure_logging(level: Optional[str] = None) -> None:
    """Single stderr sink, plus a rotating file sink when LOG_TO_FILE is set"""
    logger.remove()
    logger.add(
        sys.stderr,
        level=(level or settings.log_level).upper(),
        format="<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | {message}",
        diagnose=settings.is_development,
    )
    if settings.log_to_file:
        settings.log_dir.mkdir(parents=True, exist_ok=True)
        logger.add(settings.log_dir / "drift_mle.log", level="DEBUG", rotation="10 MB", retention=5)


def _float_list(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from None


def _int_list(text: str) -> List[int]:
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from None


def _emit_json(payload: dict, out: Optional[Path]) -> None:
    text = json.dumps(payload, indent=2)
    if out is None:
        print(text)
        return
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text + "\n")
    except OSError as e:
        raise PathFileError(f"Cannot write {out}: {e}", path=str(out)) from e
    logger.info(f"💾 Wrote {out}")


# ===================================
# Commands
# ===================================

def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = SimConfig(
        model=CovarianceModel.parse(args.model),
        theta=args.theta,
        horizon=args.T,
        n_steps=args.steps,
        seed=args.seed,
    )
    write_path_csv(simulate_path(cfg), args.out)
    return 0


def cmd_estimate(args: argparse.Namespace) -> int:
    model = CovarianceModel.parse(args.model)
    path = read_path_csv(args.path)

    report: EstimateReport
    if args.scheme == "discrete":
        report = estimate_discrete(path, model, require_regular=args.require_regular)
    else:
        ht = solve_weight_function(
            model,
            path.horizon,
            n=args.cells,
            tol=args.tol,
            use_cache=not args.no_cache,
        )
        report = estimate_continuous(path, ht, model)

    _emit_json(report.model_dump(mode="json"), args.out)
    return 0


def cmd_solve_ht(args: argparse.Namespace) -> int:
    model = CovarianceModel.parse(args.model)
    ht = solve_weight_function(
        model,
        args.T,
        n=args.cells,
        tol=args.tol,
        max_iter=args.max_iter,
        use_cache=not args.no_cache,
    )

    if args.out is not None:
        frame = pd.DataFrame({"node": ht.nodes, "value": ht.values})
        try:
            args.out.parent.mkdir(parents=True, exist_ok=True)
            frame.to_csv(args.out, index=False, float_format="%.17g")
        except OSError as e:
            raise PathFileError(f"Cannot write {args.out}: {e}", path=str(args.out)) from e
        logger.info(f"💾 Wrote {ht.n} nodes to {args.out}")

    _emit_json(
        {
            "model": str(model),
            "T": ht.horizon,
            "n_cells": ht.n,
            "method": ht.method.value,
            "integral_h": ht.integral_h,
            "theoretical_variance": ht.theoretical_variance,
            "residual": ht.residual,
            "iterations": ht.iterations,
        },
        None,
    )
    return 0


def cmd_table1(args: argparse.Namespace) -> int:
    rows = run_table1(
        H_list=args.H_list,
        T_list=args.T_list,
        theta=args.theta,
        n_reps=args.reps,
        n_steps_per_unit_T=args.steps_per_unit,
        seed=args.seed,
        max_workers=args.threads,
        n_cells=args.cells,
        use_cache=not args.no_cache,
    )
    write_report(rows, args.out, args.format)
    return 0


def cmd_consistency(args: argparse.Namespace) -> int:
    rows = run_discrete_consistency(
        model=CovarianceModel.parse(args.model),
        h=args.h,
        N_list=args.N_list,
        theta=args.theta,
        n_reps=args.reps,
        seed=args.seed,
        max_workers=args.threads,
    )
    write_report(rows, args.out, args.format)
    return 0


# ===================================
# Parser
# ===================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drift-mle",
        description="Maximum likelihood estimation of the drift of X_t = theta*t + B_t",
    )
    parser.add_argument("--version", action="version", version=f"{settings.app_name} {settings.app_version}")
    parser.add_argument("--log-level", default=None, help=f"Log level (default {settings.log_level})")
    parser.add_argument("--threads", type=int, default=None, help=f"Worker threads (default {settings.max_workers})")
    sub = parser.add_subparsers(dest="command", required=True)
    out_dir = settings.output_dir

    simulate = sub.add_parser("simulate", help="Simulate one path and write it as CSV")
    simulate.add_argument("--model", required=True, help="wiener | fbm:H | fbm:H+wiener | fbm:H1+fbm:H2")
    simulate.add_argument("--theta", type=float, required=True)
    simulate.add_argument("--T", type=float, required=True)
    simulate.add_argument("--steps", type=int, required=True)
    simulate.add_argument("--seed", type=int, default=settings.default_seed)
    simulate.add_argument("--out", type=Path, default=out_dir / "path.csv")
    simulate.set_defaults(handler=cmd_simulate)

    estimate = sub.add_parser("estimate", help="Estimate theta from a path CSV")
    estimate.add_argument("--path", type=Path, required=True, help="CSV with header t,x")
    estimate.add_argument("--model", required=True)
    estimate.add_argument("--scheme", choices=["discrete", "continuous"], default="discrete")
    estimate.add_argument("--require-regular", action="store_true", help="Reject irregular grids")
    estimate.add_argument("--cells", type=int, default=None, help="Weight-function cells (continuous)")
    estimate.add_argument("--tol", type=float, default=None)
    estimate.add_argument("--no-cache", action="store_true")
    estimate.add_argument("--out", type=Path, default=None, help="JSON output (default stdout)")
    estimate.set_defaults(handler=cmd_estimate)

    solve = sub.add_parser("solve-ht", help="Solve the weight function h_T")
    solve.add_argument("--model", required=True)
    solve.add_argument("--T", type=float, required=True)
    solve.add_argument("--cells", type=int, default=None)
    solve.add_argument("--tol", type=float, default=None)
    solve.add_argument("--max-iter", type=int, default=None)
    solve.add_argument("--no-cache", action="store_true")
    solve.add_argument("--out", type=Path, default=None, help="CSV of node,value")
    solve.set_defaults(handler=cmd_solve_ht)

    table = sub.add_parser("table1", help="Means and variances of the continuous MLE over (H, T)")
    table.add_argument("--H-list", type=_float_list, default=list(settings.table1_hursts))
    table.add_argument("--T-list", type=_float_list, default=list(settings.table1_horizons))
    table.add_argument("--theta", type=float, default=settings.table1_theta)
    table.add_argument("--reps", type=int, default=settings.default_replications)
    table.add_argument("--steps-per-unit", type=int, default=settings.steps_per_unit_time)
    table.add_argument("--seed", type=int, default=settings.default_seed)
    table.add_argument("--cells", type=int, default=None)
    table.add_argument("--no-cache", action="store_true")
    table.add_argument("--format", choices=["csv", "json"], default=None)
    table.add_argument("--out", type=Path, default=out_dir / "table1.csv")
    table.set_defaults(handler=cmd_table1)

    consistency = sub.add_parser("consistency", help="Mean-square error of the discrete MLE along N")
    consistency.add_argument("--model", required=True)
    consistency.add_argument("--h", type=float, default=1.0)
    consistency.add_argument("--N-list", type=_int_list, required=True)
    consistency.add_argument("--theta", type=float, default=settings.table1_theta)
    consistency.add_argument("--reps", type=int, default=settings.default_replications)
    consistency.add_argument("--seed", type=int, default=settings.default_seed)
    consistency.add_argument("--format", choices=["csv", "json"], default=None)
    consistency.add_argument("--out", type=Path, default=out_dir / "consistency.csv")
    consistency.set_defaults(handler=cmd_consistency)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)

    try:
        return args.handler(args)
    except DriftEstimationError as e:
        logger.error(f"❌ {e}")
        return e.exit_code
    except ValidationError as e:
        messages = "; ".join(err["msg"] for err in e.errors())
        logger.error(f"❌ Invalid input: {messages}")
        return 2
    except np.linalg.LinAlgError as e:
        logger.error(f"❌ Linear algebra failure: {e}")
        return 3
    except ValueError as e:
        logger.error(f"❌ {e}")
        return 2
    except OSError as e:
        logger.error(f"❌ I/O error: {e}")
        return 4


if __name__ == "__main__":
    sys.exit(main())
