"""Counter-based deterministic random source.

Generator "splitmix64-boxmuller/v1": the i-th raw draw of stream s under
seed q is splitmix64(k + i) with key k = splitmix64(splitmix64(q) + s).
Uniforms take the top 53 bits; normals come from Box-Muller applied to
consecutive uniform pairs. Same (seed, stream, index) always yields the
same value, independent of call granularity, so instances serialize
byte-identically across runs and platforms.
"""

from __future__ import annotations

import numpy as np

GENERATOR_NAME = "splitmix64-boxmuller/v1"

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _mix(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z + _GOLDEN) & _MASK
        z = ((z ^ (z >> np.uint64(30))) * _MIX1) & _MASK
        z = ((z ^ (z >> np.uint64(27))) * _MIX2) & _MASK
        return z ^ (z >> np.uint64(31))


def _splitmix64(value: int) -> int:
    return int(_mix(np.uint64(value & 0xFFFFFFFFFFFFFFFF)))


class CounterRng:
    """Stateless-counter RNG; each call consumes a contiguous index range."""

    name = GENERATOR_NAME

    def __init__(self, seed: int, stream: int = 0):
        self.key = np.uint64(_splitmix64(_splitmix64(seed) + stream))
        self.counter = 0

    def _raw(self, count: int) -> np.ndarray:
        idx = np.arange(self.counter, self.counter + count, dtype=np.uint64)
        self.counter += count
        with np.errstate(over="ignore"):
            return _mix((self.key + idx) & _MASK)

    def uniform(self, count: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        u = (self._raw(count) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return low + (high - low) * u

    def normal(self, count: int) -> np.ndarray:
        pairs = (count + 1) // 2
        raw = self._raw(2 * pairs)
        # shift into (0, 1] so log() is safe
        u1 = ((raw[:pairs] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
        u2 = (raw[pairs:] >> np.uint64(11)).astype(np.float64) * 2.0**-53
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        z = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])
        return z[:count]
