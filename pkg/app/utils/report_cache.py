"""
Cache of finished run reports.

A report is a deterministic function of (scenario hash, seed), so entries
never go stale; the TTL only bounds memory. Optionally backed by Redis
so several server processes share results.
"""
import json
import logging
import time
from abc import ABC, abstractmethod
from collections import OrderedDict
from typing import Any, Dict, Optional, Tuple

from app.core.config import settings
from app.models.report import RunReport

logger = logging.getLogger(__name__)


class CacheBackend(ABC):
    """Abstract base class for cache backends."""

    @abstractmethod
    def get(self, key: str) -> Optional[Any]:
        """Get a value from the cache."""

    @abstractmethod
    def set(self, key: str, value: Any, ttl_seconds: int) -> None:
        """Set a value in the cache with TTL."""

    @abstractmethod
    def delete(self, key: str) -> None:
        """Delete a value from the cache."""

    @abstractmethod
    def clear(self) -> None:
        """Clear all values from the cache."""

    @abstractmethod
    def size(self) -> int:
        """Get the number of items in the cache."""


class MemoryCacheBackend(CacheBackend):
    """In-memory cache backend using OrderedDict for LRU eviction."""

    def __init__(self, max_size: int = 500):
        self._cache: "OrderedDict[str, Tuple[Any, float]]" = OrderedDict()
        self.max_size = max_size

    def get(self, key: str) -> Optional[Any]:
        if key not in self._cache:
            return None
        value, expiry = self._cache[key]
        if time.time() > expiry:
            del self._cache[key]
            return None
        self._cache.move_to_end(key)
        return value

    def set(self, key: str, value: Any, ttl_seconds: int) -> None:
        if key in self._cache:
            del self._cache[key]
        while len(self._cache) >= self.max_size:
            self._cache.popitem(last=False)
        self._cache[key] = (value, time.time() + ttl_seconds)

    def delete(self, key: str) -> None:
        self._cache.pop(key, None)

    def clear(self) -> None:
        self._cache.clear()

    def size(self) -> int:
        return len(self._cache)

    def cleanup_expired(self) -> int:
        now = time.time()
        expired = [key for key, (_, expiry) in self._cache.items() if now > expiry]
        for key in expired:
            del self._cache[key]
        return len(expired)


class RedisCacheBackend(CacheBackend):
    """Redis cache backend storing reports as JSON under a key prefix."""

    def __init__(self, redis_url: str, prefix: str = "droopsim:"):
        try:
            import redis
            self._redis = redis.from_url(redis_url, decode_responses=True)
            self._prefix = prefix
            self._redis.ping()
            logger.info(f"Connected to Redis at {redis_url}")
        except Exception as e:
            logger.error(f"Failed to connect to Redis: {e}")
            raise

    def _make_key(self, key: str) -> str:
        return f"{self._prefix}{key}"

    def _keys(self):
        cursor = 0
        while True:
            cursor, keys = self._redis.scan(cursor, match=f"{self._prefix}*", count=100)
            yield keys
            if cursor == 0:
                break

    def get(self, key: str) -> Optional[Any]:
        try:
            value = self._redis.get(self._make_key(key))
            return None if value is None else json.loads(value)
        except Exception as e:
            logger.error(f"Redis get error: {e}")
            return None

    def set(self, key: str, value: Any, ttl_seconds: int) -> None:
        try:
            self._redis.setex(self._make_key(key), ttl_seconds, json.dumps(value))
        except Exception as e:
            logger.error(f"Redis set error: {e}")

    def delete(self, key: str) -> None:
        try:
            self._redis.delete(self._make_key(key))
        except Exception as e:
            logger.error(f"Redis delete error: {e}")

    def clear(self) -> None:
        try:
            for keys in self._keys():
                if keys:
                    self._redis.delete(*keys)
        except Exception as e:
            logger.error(f"Redis clear error: {e}")

    def size(self) -> int:
        try:
            return sum(len(keys) for keys in self._keys())
        except Exception as e:
            logger.error(f"Redis size error: {e}")
            return 0


class ReportCache:
    """
    Run reports keyed by scenario hash and seed.

    Supports both in-memory (LRU) and Redis backends.
    """

    def __init__(self):
        self.enabled = settings.CACHE_ENABLED
        self.ttl_seconds = settings.CACHE_TTL_SECONDS
        self.max_size = settings.CACHE_MAX_SIZE
        self.backend_type = settings.CACHE_BACKEND
        self.hits = 0
        self.misses = 0

        if not self.enabled:
            self._backend: Optional[CacheBackend] = None
        elif self.backend_type == "redis":
            try:
                self._backend = RedisCacheBackend(settings.REDIS_URL)
            except Exception:
                logger.warning("Failed to initialize Redis, falling back to memory cache")
                self._backend = MemoryCacheBackend(self.max_size)
                self.backend_type = "memory"
        else:
            self._backend = MemoryCacheBackend(self.max_size)

    @staticmethod
    def make_key(scenario_hash: str, seed: int) -> str:
        return f"report:{scenario_hash}:{seed}"

    def get(self, scenario_hash: str, seed: int) -> Optional[RunReport]:
        """
        Cached report of a run, if any.

        Args:
            scenario_hash: Hash of the validated scenario
            seed: Seed the run used

        Returns:
            The report, or None when caching is off or nothing is stored
        """
        if self._backend is None:
            return None
        data = self._backend.get(self.make_key(scenario_hash, seed))
        if data is None:
            self.misses += 1
            return None
        self.hits += 1
        return RunReport.model_validate(data)

    def set(self, report: RunReport) -> None:
        if self._backend is None:
            return
        key = self.make_key(report.scenario_hash, report.seed)
        self._backend.set(key, report.model_dump(mode="json"), self.ttl_seconds)

    def clear(self) -> None:
        if self._backend is not None:
            self._backend.clear()

    def size(self) -> int:
        return 0 if self._backend is None else self._backend.size()

    def cleanup_expired(self) -> int:
        """Remove expired entries; Redis expires keys itself, so this is 0 there."""
        if isinstance(self._backend, MemoryCacheBackend):
            return self._backend.cleanup_expired()
        return 0

    def stats(self) -> Dict[str, Any]:
        return {
            "enabled": self.enabled,
            "backend": self.backend_type if self.enabled else None,
            "size": self.size(),
            "max_size": self.max_size,
            "ttl_seconds": self.ttl_seconds,
            "hits": self.hits,
            "misses": self.misses,
        }


_report_cache: Optional[ReportCache] = None


def get_cache() -> ReportCache:
    """Get the global report cache instance."""
    global _report_cache
    if _report_cache is None:
        _report_cache = ReportCache()
    return _report_cache
