"""Counter-based random streams.

Every kernel instance draws from its own SplitMix64 stream whose state is
derived from ``(seed, purpose, element id...)``. Draws therefore do not depend
on the order in which kernel instances execute.
"""
from __future__ import annotations

import math
import zlib
from typing import Sequence, TypeVar

import numpy as np

T = TypeVar("T")

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV_2_53 = 1.0 / (1 << 53)


def mix64(z: int) -> int:
    """SplitMix64 output finalizer."""
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def purpose_tag(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def derive_key(seed: int, purpose: str, *ids: int) -> int:
    key = mix64((seed + GOLDEN) & MASK64)
    key = mix64(((key ^ purpose_tag(purpose)) + GOLDEN) & MASK64)
    for i in ids:
        key = mix64(((key ^ (i & MASK64)) + GOLDEN) & MASK64)
    return key


class Stream:
    """SplitMix64 generator keyed by ``(seed, purpose, *ids)``."""

    __slots__ = ("_state",)

    def __init__(self, seed: int, purpose: str, *ids: int) -> None:
        self._state = derive_key(seed, purpose, *ids)

    def next_u64(self) -> int:
        self._state = (self._state + GOLDEN) & MASK64
        return mix64(self._state)

    def random(self) -> float:
        """Uniform float in [0, 1)."""
        return (self.next_u64() >> 11) * _INV_2_53

    def randrange(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randrange() needs a positive bound")
        return (self.next_u64() * n) >> 64

    def choice(self, seq: Sequence[T]) -> T:
        return seq[self.randrange(len(seq))]

    def sample(self, seq: Sequence[T], k: int) -> list[T]:
        items = list(seq)
        if not 0 <= k <= len(items):
            raise ValueError("sample size out of range")
        for i in range(k):
            j = i + self.randrange(len(items) - i)
            items[i], items[j] = items[j], items[i]
        return items[:k]

    def exponential(self, rate: float) -> float:
        return -math.log1p(-self.random()) / rate


def first_uniforms(seed: int, purpose: str, ids: np.ndarray) -> np.ndarray:
    """Vectorized ``Stream(seed, purpose, *row).random()`` for every id row.

    ``ids`` is 1-d (one id per stream) or 2-d (one row of ids per stream).
    """
    return (first_u64(seed, purpose, ids) >> np.uint64(11)).astype(np.float64) * _INV_2_53


def first_u64(seed: int, purpose: str, ids: np.ndarray) -> np.ndarray:
    arr = np.asarray(ids, dtype=np.int64)
    cols = arr.T if arr.ndim > 1 else arr[None, :]
    with np.errstate(over="ignore"):
        key = np.full(cols.shape[1], derive_key(seed, purpose), dtype=np.uint64)
        for col in cols:
            key = _mix64_np((key ^ col.astype(np.uint64)) + np.uint64(GOLDEN))
        return _mix64_np(key + np.uint64(GOLDEN))


def _mix64_np(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
        return z ^ (z >> np.uint64(31))
