"""
Tests for the Monte Carlo experiments and report files
"""
import json

import numpy as np
import pytest
from scipy.linalg import solve
from scipy.stats import chi2

from app.continuous import solve_weight_function
from app.errors import ModelSpecError
from app.experiment import row_seed, run_discrete_consistency, run_table1, write_report
from app.models import CovarianceModel, Scheme
from app.toeplitz import build_gamma


def chi2_band(n_reps, level):
    return chi2.ppf((1 - level) / 2, n_reps) / n_reps, chi2.ppf((1 + level) / 2, n_reps) / n_reps


def test_brownian_consistency_rows():
    rows = run_discrete_consistency(
        CovarianceModel.wiener(), h=1.0, N_list=[10, 100, 1000], theta=2.0, n_reps=300, seed=1
    )
    assert [r.n_increments for r in rows] == [10, 100, 1000]
    assert [r.theoretical_variance for r in rows] == pytest.approx([0.1, 0.01, 0.001], rel=1e-9)
    low, high = chi2_band(300, 0.999)
    for row in rows:
        assert row.n_replications == 300
        assert low <= row.sample_mse / row.theoretical_variance <= high


def test_fbm_consistency_theoretical_variance_matches_dense_oracle():
    model = CovarianceModel.fbm(0.7)
    rows = run_discrete_consistency(model, h=0.5, N_list=[4, 16, 64], theta=1.0, n_reps=50, seed=2)
    variances = [r.theoretical_variance for r in rows]
    assert variances[0] > variances[1] > variances[2]
    for row in rows:
        n = row.n_increments
        z = np.full(n, 0.5)
        expected = 1.0 / (z @ solve(build_gamma(model, 0.5, n).to_dense(), z))
        assert row.theoretical_variance == pytest.approx(expected, rel=1e-9)


def test_consistency_rejects_bad_sizes():
    with pytest.raises(ValueError):
        run_discrete_consistency(CovarianceModel.wiener(), 1.0, [10, 10], 0.0, 10, 1)
    with pytest.raises(ValueError):
        run_discrete_consistency(CovarianceModel.wiener(), 1.0, [], 0.0, 10, 1)


def test_table1_small_run():
    rows = run_table1(
        H_list=[0.6], T_list=[1.0], theta=2.0, n_reps=200,
        n_steps_per_unit_T=100, seed=5, n_cells=2048,
    )
    assert len(rows) == 1
    row = rows[0]
    assert (row.hurst, row.horizon, row.scheme) == (0.6, 1.0, Scheme.CONTINUOUS)
    assert row.theoretical_variance == pytest.approx(1.9982, rel=2e-3)
    assert abs(row.sample_mean - 2.0) <= 4 * np.sqrt(row.theoretical_variance / 200)


def test_table1_zero_drift_and_row_order():
    rows = run_table1(
        H_list=[0.7, 0.9], T_list=[1.0, 2.0], theta=0.0, n_reps=100,
        n_steps_per_unit_T=50, seed=6, n_cells=512,
    )
    assert [(r.hurst, r.horizon) for r in rows] == [(0.7, 1.0), (0.7, 2.0), (0.9, 1.0), (0.9, 2.0)]
    for row in rows:
        assert abs(row.sample_mean) <= 4 * np.sqrt(row.theoretical_variance / 100)
        ht = solve_weight_function(CovarianceModel.fbm_plus_wiener(row.hurst), row.horizon, n=512)
        assert row.theoretical_variance == pytest.approx(1.0 / ht.integral_h, rel=1e-12)


def test_table1_validates_inputs():
    with pytest.raises(ModelSpecError):
        run_table1(H_list=[0.4], T_list=[1.0], n_reps=10, n_cells=64)
    with pytest.raises(ValueError):
        run_table1(H_list=[0.6], T_list=[1.0], n_reps=1, n_cells=64)
    with pytest.raises(ValueError):
        run_table1(H_list=[0.6], T_list=[1.0], n_reps=0, n_cells=64)
    with pytest.raises(ValueError):
        run_table1(H_list=[0.6], T_list=[1.0], n_reps=10, n_steps_per_unit_T=0, n_cells=64)


def test_results_do_not_depend_on_thread_count():
    kwargs = dict(H_list=[0.8], T_list=[1.0], theta=1.0, n_reps=40, n_steps_per_unit_T=50, seed=9, n_cells=256)
    assert run_table1(max_workers=1, **kwargs) == run_table1(max_workers=4, **kwargs)


def test_row_seeds_differ():
    assert row_seed(1, 0) != row_seed(1, 1)
    assert row_seed(1, 0) == row_seed(1, 0)
    assert 0 <= row_seed(1, 0) < 2 ** 64


def test_report_csv_is_deterministic(tmp_path):
    kwargs = dict(H_list=[0.6], T_list=[1.0], theta=2.0, n_reps=20, n_steps_per_unit_T=50, seed=3, n_cells=256)
    first = write_report(run_table1(**kwargs), tmp_path / "a.csv")
    second = write_report(run_table1(**kwargs), tmp_path / "b.csv")
    assert first.read_bytes() == second.read_bytes()
    assert first.read_text().splitlines()[0] == (
        "H,T,scheme,n_reps,sample_mean,sample_variance,theoretical_variance"
    )


def test_report_json_and_consistency_header(tmp_path):
    rows = run_discrete_consistency(CovarianceModel.wiener(), 1.0, [2, 4], 0.0, 10, 4)
    csv_file = write_report(rows, tmp_path / "c.csv")
    assert csv_file.read_text().splitlines()[0] == "N,h,n_reps,sample_mean,sample_mse,theoretical_variance"

    json_file = write_report(rows, tmp_path / "c.json")
    records = json.loads(json_file.read_text())
    assert [r["N"] for r in records] == [2, 4]
    assert records[0]["theoretical_variance"] == pytest.approx(0.5)


@pytest.mark.slow
@pytest.mark.parametrize(("hurst", "horizon"), [(0.6, 1.0), (0.7, 10.0)])
def test_table1_desk_scale_reproduction(hurst, horizon):
    rows = run_table1(
        H_list=[hurst], T_list=[horizon], theta=2.0, n_reps=1000,
        n_steps_per_unit_T=1000, seed=20240917,
    )
    row = rows[0]
    assert abs(row.sample_mean - 2.0) <= 4 * np.sqrt(row.theoretical_variance / 1000)
    low, high = chi2_band(999, 0.99)
    assert low <= row.sample_variance / row.theoretical_variance <= high
