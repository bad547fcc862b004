"""Deterministic random streams with splittable substreams.

Pinned algorithm: numpy's Philox 4x64 counter-based bit generator, keyed
with ``key = (seed, stream)``. numpy guarantees the Philox bit stream is
stable across platforms and releases, and ``Generator.uniform`` /
``Generator.normal`` (ziggurat) sit on top of it. Identical (seed, stream)
therefore reproduces identical values everywhere.

Substreams are statistically independent for distinct ``stream`` indices,
which is what lets trace-level generation run in any order (or in parallel)
without changing results: trace ``i`` always draws from substream ``i``.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox

from .errors import InvalidParamError, InvalidRangeError

__all__ = ["Rng"]


class Rng:
    """Seeded random source; a pure function of (seed, stream)."""

    def __init__(self, seed: int, stream: int = 0):
        if not 0 <= int(seed) < 2**64:
            raise InvalidParamError("seed must fit in an unsigned 64-bit integer")
        if not 0 <= int(stream) < 2**64:
            raise InvalidParamError("stream must fit in an unsigned 64-bit integer")
        self.seed = int(seed)
        self.stream = int(stream)
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        self._gen = Generator(Philox(key=key))

    def substream(self, index: int) -> "Rng":
        """Independent stream for task/trace ``index`` under the same seed."""
        return Rng(self.seed, index)

    def uniform(self, n: int, lo: float = -1.0, hi: float = 1.0) -> np.ndarray:
        """n samples uniform on [lo, hi).

        Raises InvalidRangeError unless lo < hi.
        """
        if not lo < hi:
            raise InvalidRangeError(f"empty interval [{lo}, {hi})")
        return self._gen.uniform(lo, hi, size=int(n))

    def gaussian(self, n: int, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
        """n samples from N(mean, std^2); std = 0 yields the constant mean.

        Raises InvalidParamError for negative std.
        """
        if std < 0:
            raise InvalidParamError(f"std must be >= 0, got {std}")
        if std == 0:
            return np.full(int(n), float(mean))
        return self._gen.normal(loc=mean, scale=std, size=int(n))

    def integers(self, n: int, lo: int, hi: int) -> np.ndarray:
        """n integers uniform on [lo, hi)."""
        if not lo < hi:
            raise InvalidRangeError(f"empty interval [{lo}, {hi})")
        return self._gen.integers(lo, hi, size=int(n))

    def permutation(self, n: int) -> np.ndarray:
        """A random permutation of range(n)."""
        return self._gen.permutation(int(n))

    def __repr__(self) -> str:  # pragma: no cover
        return f"Rng(seed={self.seed}, stream={self.stream})"
