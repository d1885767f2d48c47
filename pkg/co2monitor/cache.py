"""Cache of calibrated boundary constants."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

from .calibration import INDEFINITE_PROXY, BoundarySpec, calibrate, with_constant
from .exceptions import ConfigurationError

logger = logging.getLogger(__name__)

_FIELDS = ("T", "alpha", "f", "B", "seed", "c")


@dataclass(frozen=True)
class CacheKey:
    """Inputs that fully determine a calibrated constant."""

    horizon: float
    alpha: float
    f_kind: str
    replications: int
    seed: int

    @classmethod
    def for_spec(cls, spec: BoundarySpec) -> CacheKey:
        return cls(spec.horizon, spec.alpha, spec.f_kind, spec.replications, spec.seed)


def _format_horizon(horizon: float) -> str:
    return "inf" if horizon == math.inf else str(int(horizon))


def format_line(key: CacheKey, c: float) -> str:
    """Render one cache line ``T=...,alpha=...,f=...,B=...,seed=...,c=...``."""
    return (
        f"T={_format_horizon(key.horizon)},alpha={key.alpha!r},f={key.f_kind},"
        f"B={key.replications},seed={key.seed},c={c:.17g}"
    )


def parse_line(line: str) -> tuple[CacheKey, float]:
    """Parse one cache line.

    Raises:
        ConfigurationError: If the line is not in the cache format

    """
    try:
        parts = dict(item.split("=", 1) for item in line.strip().split(","))
        if tuple(parts) != _FIELDS:
            raise ValueError(f"expected fields {','.join(_FIELDS)}")
        horizon = math.inf if parts["T"] == "inf" else float(int(parts["T"]))
        key = CacheKey(
            horizon=horizon,
            alpha=float(parts["alpha"]),
            f_kind=parts["f"],
            replications=int(parts["B"]),
            seed=int(parts["seed"]),
        )
        return key, float(parts["c"])
    except ValueError as e:
        raise ConfigurationError(f"bad cache line {line.strip()!r}: {e}") from e


class ConstantCache:
    """Text-file cache of calibrated constants keyed by (T, alpha, f, B, seed)."""

    def __init__(self, cache_file: Path | None = None):
        """Initialize the constant cache.

        Args:
            cache_file: Path to cache file. If None, uses default location.

        """
        self.cache_file = cache_file or self._get_default_cache_file()
        self._entries: dict[CacheKey, float] = {}
        self._load()

    @staticmethod
    def _get_default_cache_file() -> Path:
        return Path.home() / ".cache" / "co2monitor" / "constants.txt"

    def _load(self) -> None:
        if not self.cache_file.exists():
            return

        for number, line in enumerate(self.cache_file.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            try:
                key, c = parse_line(line)
            except ConfigurationError as e:
                # A damaged line is dropped; the constant is recalibrated on demand.
                logger.warning("%s:%d ignored: %s", self.cache_file, number, e)
                continue
            self._entries[key] = c

    def get(self, key: CacheKey) -> float | None:
        """Return the cached constant for ``key`` if present."""
        return self._entries.get(key)

    def put(self, spec: BoundarySpec) -> None:
        """Store a calibrated spec and persist the cache."""
        if spec.c is None:
            raise ConfigurationError("cannot cache an uncalibrated boundary")
        self._entries[CacheKey.for_spec(spec)] = spec.c
        self.save()

    def save(self) -> None:
        """Write all entries to disk."""
        self.cache_file.parent.mkdir(parents=True, exist_ok=True)
        lines = [format_line(key, c) for key, c in self._entries.items()]
        self.cache_file.write_text("\n".join(lines) + "\n", encoding="utf-8")

    def clear(self) -> None:
        """Remove all entries."""
        self._entries.clear()
        self.save()

    def __len__(self) -> int:
        return len(self._entries)


def calibrate_cached(
    horizon: float,
    alpha: float,
    f_kind: str,
    replications: int,
    seed: int,
    cache: ConstantCache | None = None,
    threads: int = 1,
    indefinite_proxy: int = INDEFINITE_PROXY,
) -> BoundarySpec:
    """Calibrate a boundary, reusing a cached constant when one exists."""
    key = CacheKey(horizon, alpha, f_kind, replications, seed)
    if cache is not None:
        c = cache.get(key)
        if c is not None:
            logger.debug("cache hit for %s", key)
            spec = BoundarySpec(
                horizon=horizon,
                alpha=alpha,
                f_kind=f_kind,
                replications=replications,
                seed=seed,
                simulated_horizon=indefinite_proxy if horizon == math.inf else int(horizon),
            )
            return with_constant(spec, c)

    spec = calibrate(horizon, alpha, f_kind, replications, seed, threads, indefinite_proxy)
    if cache is not None:
        cache.put(spec)
    return spec
