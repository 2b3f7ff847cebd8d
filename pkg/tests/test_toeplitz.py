"""
Tests for the Levinson solver against dense linear algebra
"""
import numpy as np
import pytest
from scipy.linalg import cholesky, solve, toeplitz

from app.errors import SingularCovarianceError
from app.models import SymToeplitz
from app.toeplitz import (
    build_gamma,
    dense_solve,
    inv_quadratic_form,
    matvec,
    quadratic_form,
    solve_prefix_forms,
    solve_spd_toeplitz,
)


@pytest.mark.parametrize("n", [2, 3, 17, 64, 256])
def test_levinson_matches_dense_solve(model, n, rng):
    gamma = build_gamma(model, 1.0 / n, n)
    dense = toeplitz(gamma.first_row)
    for _ in range(20):
        b = rng.standard_normal(n)
        x = solve_spd_toeplitz(gamma, b)
        expected = solve(dense, b, assume_a="pos")
        assert np.linalg.norm(x - expected) <= 1e-9 * np.linalg.norm(expected)


@pytest.mark.parametrize("n", [128, 512])
def test_gamma_is_positive_definite(model, n):
    dense = toeplitz(build_gamma(model, 1.0 / n, n).first_row)
    lower = cholesky(dense, lower=True)
    assert np.all(np.diag(lower) > 0)
    assert np.linalg.eigvalsh(dense).min() > 0


def test_single_element_system():
    x = solve_spd_toeplitz(SymToeplitz(first_row=[4.0]), np.array([2.0]))
    np.testing.assert_allclose(x, [0.5])


def test_dense_solve_oracle(model, rng):
    gamma = build_gamma(model, 0.5, 30)
    b = rng.standard_normal(30)
    np.testing.assert_allclose(toeplitz(gamma.first_row) @ dense_solve(gamma, b), b, atol=1e-10)


def test_matvec_and_quadratic_form(model, rng):
    gamma = build_gamma(model, 0.1, 40)
    u = rng.standard_normal(40)
    dense = gamma.to_dense()
    np.testing.assert_allclose(matvec(gamma, u), dense @ u, rtol=1e-10, atol=1e-12)
    assert quadratic_form(gamma, u) == pytest.approx(u @ dense @ u, rel=1e-10)


def test_prefix_forms_match_leading_sections(model):
    n = 40
    gamma = build_gamma(model, 1.0, n)
    dense = gamma.to_dense()
    z = np.ones(n)
    forms = solve_prefix_forms(gamma, z)
    expected = [z[:k] @ solve(dense[:k, :k], z[:k]) for k in range(1, n + 1)]
    np.testing.assert_allclose(forms, expected, rtol=1e-9)
    assert np.all(np.diff(forms) >= -1e-12 * forms[-1])


def test_inv_quadratic_form(model, rng):
    gamma = build_gamma(model, 1.0, 25)
    u, v = rng.standard_normal(25), rng.standard_normal(25)
    expected = u @ solve(gamma.to_dense(), v)
    assert inv_quadratic_form(gamma, u, v) == pytest.approx(expected, rel=1e-9)


def test_cauchy_schwarz_bound(model, rng):
    gamma = build_gamma(model, 1.0, 50)
    for z in [np.ones(50), rng.standard_normal(50), np.abs(rng.standard_normal(50))]:
        lower = (z @ z) ** 2 / quadratic_form(gamma, z)
        assert inv_quadratic_form(gamma, z, z) >= lower * (1 - 1e-12)


def test_singular_matrix_raises():
    singular = SymToeplitz(first_row=[1.0, 1.0, 1.0])
    with pytest.raises(SingularCovarianceError):
        solve_spd_toeplitz(singular, np.ones(3))
    with pytest.raises(SingularCovarianceError):
        solve_prefix_forms(singular, np.ones(3))


def test_singular_error_is_linalg_error():
    with pytest.raises(np.linalg.LinAlgError):
        dense_solve(SymToeplitz(first_row=[0.0, 0.0]), np.ones(2))


def test_dimension_mismatch():
    gamma = SymToeplitz(first_row=[2.0, 0.5, 0.1])
    with pytest.raises(ValueError, match="does not match"):
        solve_spd_toeplitz(gamma, np.ones(4))


def test_empty_first_row_rejected():
    with pytest.raises(ValueError):
        SymToeplitz(first_row=[])
