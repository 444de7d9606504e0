"""Seeded random streams for reproducible simulation."""

from __future__ import annotations

import numpy as np


class SeededRNG:
    """Counter-based (Philox) generator keyed by ``(seed, *stream)``.

    Workers derive independent streams with :meth:`fork`, so a run is fully
    determined by the master seed and the worker index.
    """

    def __init__(self, seed: int, stream: tuple[int, ...] = ()) -> None:
        self._seed = int(seed)
        self._stream = tuple(int(s) for s in stream)
        sequence = np.random.SeedSequence([self._seed, *self._stream])
        self._rng = np.random.Generator(np.random.Philox(sequence))

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def stream(self) -> tuple[int, ...]:
        return self._stream

    @property
    def generator(self) -> np.random.Generator:
        return self._rng

    def fork(self, index: int) -> SeededRNG:
        """Create a child stream for worker ``index``."""
        return SeededRNG(self._seed, (*self._stream, index))

    def random(self, size=None):
        return self._rng.random(size)

    def uniform(self, low: float, high: float, size=None):
        return self._rng.uniform(low, high, size)

    def normal(self, scale=1.0, size=None):
        return self._rng.normal(0.0, scale, size)

    def beta(self, a, b, size=None):
        return self._rng.beta(a, b, size)

    def __repr__(self) -> str:
        return f"SeededRNG(seed={self._seed}, stream={self._stream})"
