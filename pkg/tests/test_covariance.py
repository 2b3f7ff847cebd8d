"""
Tests for increment autocovariances and the kernel K
"""
import numpy as np
import pytest
from scipy.integrate import dblquad, quad

from app.covariance import (
    autocov_at,
    covariance_function,
    increment_autocov,
    kernel_antiderivative,
    kernel_cell_integral,
    kernel_K,
    kernel_l1_norm,
)
from app.errors import GridError, ModelSpecError
from app.models import CovarianceModel


def direct_fgn(k, hurst, h=1.0):
    k = np.asarray(k, dtype=float)
    p = 2 * hurst
    return h ** p * 0.5 * ((k + 1) ** p - 2 * k ** p + np.abs(k - 1) ** p)


def test_fbm_lag_one_value():
    gamma = increment_autocov(CovarianceModel.fbm(0.75), 1.0, 3).gamma
    assert gamma[0] == pytest.approx(1.0)
    assert gamma[1] == pytest.approx(0.4142136, abs=1e-7)


def test_fbm_scaling_with_step():
    model = CovarianceModel.fbm(0.7)
    unit = increment_autocov(model, 1.0, 20).gamma
    scaled = increment_autocov(model, 0.01, 20).gamma
    np.testing.assert_allclose(scaled, 0.01 ** 1.4 * unit, rtol=1e-12)


def test_wiener_increments_are_white():
    gamma = increment_autocov(CovarianceModel.wiener(), 0.25, 10).gamma
    assert gamma[0] == pytest.approx(0.25)
    np.testing.assert_allclose(gamma[1:], 0.0, atol=1e-15)


def test_composite_is_sum_of_components():
    h, n = 0.3, 50
    mixed = increment_autocov(CovarianceModel.two_fbm(0.3, 0.8), h, n).gamma
    np.testing.assert_allclose(
        mixed, direct_fgn(np.arange(n), 0.3, h) + direct_fgn(np.arange(n), 0.8, h), rtol=1e-12
    )
    with_white = increment_autocov(CovarianceModel.fbm_plus_wiener(0.7), h, n).gamma
    expected = direct_fgn(np.arange(n), 0.7, h)
    expected[0] += h
    np.testing.assert_allclose(with_white, expected, rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("hurst", [0.2, 0.7, 0.9])
def test_series_branch_matches_direct_formula(hurst):
    lags = np.arange(995, 1006)
    np.testing.assert_allclose(
        autocov_at(CovarianceModel.fbm(hurst), 1.0, lags), direct_fgn(lags, hurst), rtol=1e-7
    )


def test_autocovariance_decays(model):
    lags = [10, 100, 10_000, 1_000_000, 10_000_000_000]
    gamma = np.abs(autocov_at(model, 1.0, lags))
    assert np.all(np.diff(gamma) <= 0)
    assert gamma[-1] < 0.01
    leading = sum(hurst * (2 * hurst - 1) * 1e10 ** (2 * hurst - 2) for hurst in model.fbm_hursts)
    assert gamma[-1] == pytest.approx(abs(leading), rel=1e-6, abs=1e-300)


def test_invalid_arguments():
    model = CovarianceModel.fbm(0.7)
    with pytest.raises(GridError):
        increment_autocov(model, 1.0, 0)
    with pytest.raises(GridError):
        increment_autocov(model, 0.0, 5)
    with pytest.raises(ValueError):
        autocov_at(model, 1.0, [-1])


def test_covariance_function_wiener_is_min():
    t = np.array([0.2, 1.0, 3.5])
    s = np.array([0.7, 0.4, 3.5])
    np.testing.assert_allclose(covariance_function(CovarianceModel.wiener(), t, s), np.minimum(t, s))


def test_covariance_function_broadcasts():
    t = np.linspace(0.1, 1.0, 4)
    out = covariance_function(CovarianceModel.fbm(0.7), t[:, None], t[None, :])
    assert out.shape == (4, 4)
    np.testing.assert_allclose(np.diag(out), t ** 1.4)


def test_kernel_values_and_errors():
    model = CovarianceModel.fbm_plus_wiener(0.75)
    assert kernel_K(model, 0.25) == pytest.approx(0.75 * 0.5 * 0.25 ** -0.5)
    assert kernel_K(model, -0.25) == pytest.approx(kernel_K(model, 0.25))
    with pytest.raises(ValueError):
        kernel_K(model, 0.0)
    with pytest.raises(ModelSpecError):
        kernel_K(CovarianceModel.fbm(0.3), 0.5)


def test_cell_integral_against_quadrature():
    model = CovarianceModel.two_fbm(0.6, 0.85)
    expected, _ = quad(lambda u: kernel_K(model, u), 0.2, 0.7)
    assert kernel_cell_integral(model, 0.2, 0.7) == pytest.approx(expected, rel=1e-9)


def test_cell_integral_straddling_zero():
    model = CovarianceModel.fbm(0.75)
    expected = 0.75 * (0.2 ** 0.5 + 0.1 ** 0.5)
    assert kernel_cell_integral(model, -0.1, 0.2) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ValueError):
        kernel_cell_integral(model, 0.2, 0.2)


def test_wiener_has_no_kernel_part():
    assert kernel_cell_integral(CovarianceModel.wiener(), -0.5, 0.5) == 0.0
    assert kernel_l1_norm(CovarianceModel.wiener(), 3.0) == 0.0


@pytest.mark.parametrize("lag", [2, 3, 4, 5, 6])
def test_kernel_double_integral_reproduces_autocovariance(lag):
    model = CovarianceModel.fbm(0.7)
    value, _ = dblquad(lambda s, t: kernel_K(model, t - s), lag, lag + 1, 0.0, 1.0)
    assert value == pytest.approx(autocov_at(model, 1.0, [lag])[0], rel=1e-6)


def test_l1_norm_is_twice_antiderivative():
    model = CovarianceModel.two_fbm(0.6, 0.9)
    assert kernel_l1_norm(model, 4.0) == pytest.approx(2 * float(kernel_antiderivative(model, 4.0)))
