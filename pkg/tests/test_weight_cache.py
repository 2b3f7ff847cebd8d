"""
Tests for the on-disk weight-function cache
"""
import numpy as np

from app.continuous import ht_closed_form_fbm
from app.models import CovarianceModel, WeightMethod
from app.weight_cache import WeightCache


def test_put_then_get_is_bit_identical(tmp_path):
    cache = WeightCache(tmp_path)
    ht = ht_closed_form_fbm(0.7, 2.0, 128)
    model = CovarianceModel.fbm(0.7)

    assert cache.get(model, 2.0, 128, 1e-10, WeightMethod.CLOSED_FORM) is None
    cache.put(ht, 1e-10)
    loaded = cache.get(model, 2.0, 128, 1e-10, WeightMethod.CLOSED_FORM)

    assert loaded is not None
    assert loaded.integral_h == ht.integral_h
    np.testing.assert_array_equal(loaded.values, ht.values)
    np.testing.assert_array_equal(loaded.cell_averages, ht.cell_averages)
    cache.close()


def test_keys_separate_solve_parameters(tmp_path):
    cache = WeightCache(tmp_path)
    model = CovarianceModel.fbm(0.7)
    key = cache._generate_cache_key(model, 1.0, 64, 1e-10, WeightMethod.CLOSED_FORM)
    assert key.startswith("ht:")
    assert key == cache._generate_cache_key(CovarianceModel.parse("fbm:0.7"), 1.0, 64, 1e-10, WeightMethod.CLOSED_FORM)
    assert key != cache._generate_cache_key(model, 1.0, 128, 1e-10, WeightMethod.CLOSED_FORM)
    assert key != cache._generate_cache_key(model, 2.0, 64, 1e-10, WeightMethod.CLOSED_FORM)
    assert key != cache._generate_cache_key(model, 1.0, 64, 1e-12, WeightMethod.CLOSED_FORM)
    cache.close()


def test_clear(tmp_path):
    cache = WeightCache(tmp_path)
    cache.put(ht_closed_form_fbm(0.8, 1.0, 32), 1e-10)
    assert cache.clear() == 1
    assert cache.get(CovarianceModel.fbm(0.8), 1.0, 32, 1e-10, WeightMethod.CLOSED_FORM) is None
    cache.close()
