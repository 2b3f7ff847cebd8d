"""
Weight Cache - on-disk store of solved weight functions
"""
import json
import hashlib
from pathlib import Path
from typing import Optional

from diskcache import Cache
from loguru import logger

from app.config import settings
from app.models import CovarianceModel, WeightFunction, WeightMethod


class WeightCache:
    """Persist solved h_T so repeated runs skip the Neumann iteration"""

    def __init__(self, directory: Optional[Path] = None):
        self.directory = Path(directory or settings.cache_dir)
        self.cache_enabled = True
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
            self.store = Cache(str(self.directory))
        except OSError as e:
            logger.warning(f"⚠️ Weight cache unavailable at {self.directory}: {e}. Caching disabled.")
            self.cache_enabled = False

    def _generate_cache_key(
        self,
        model: CovarianceModel,
        horizon: float,
        n: int,
        tol: float,
        method: WeightMethod,
    ) -> str:
        """Unique key from the solve parameters"""
        cache_data = {
            "model": str(model),
            "horizon": repr(float(horizon)),
            "n": int(n),
            "tol": repr(float(tol)),
            "method": method.value,
        }
        cache_string = json.dumps(cache_data, sort_keys=True)
        return f"ht:{hashlib.md5(cache_string.encode()).hexdigest()}"

    def get(
        self,
        model: CovarianceModel,
        horizon: float,
        n: int,
        tol: float,
        method: WeightMethod,
    ) -> Optional[WeightFunction]:
        if not self.cache_enabled:
            return None

        cache_key = self._generate_cache_key(model, horizon, n, tol, method)
        try:
            cached = self.store.get(cache_key)
        except Exception as e:
            logger.error(f"Cache retrieval error: {e}")
            return None

        if isinstance(cached, WeightFunction):
            logger.info(f"📦 Cache HIT: {cache_key} ('{model}', T={horizon}, n={n})")
            return cached
        logger.debug(f"Cache MISS: {cache_key}")
        return None

    def put(self, ht: WeightFunction, tol: float) -> None:
        if not self.cache_enabled:
            return

        cache_key = self._generate_cache_key(ht.model, ht.horizon, ht.n, tol, ht.method)
        try:
            self.store.set(cache_key, ht)
            logger.info(f"💾 Cached h_T for '{ht.model}', T={ht.horizon}, n={ht.n}")
        except Exception as e:
            logger.error(f"Cache save error: {e}")

    def clear(self) -> int:
        """Drop every cached weight function, returning how many were removed"""
        if not self.cache_enabled:
            return 0
        return int(self.store.clear())

    def close(self) -> None:
        if self.cache_enabled:
            self.store.close()
