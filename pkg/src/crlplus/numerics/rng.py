"""Seeded, splittable random streams.

A ``SeededRng`` is a value: a (seed, stream) pair naming one counter-based
Philox stream. Identical pairs replay identical draw sequences on every
platform, and distinct streams are statistically independent, which is what
lets every dropout mask, batch draw, and weight init in the pipeline be
replayed exactly from a single run seed.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(x: int) -> int:
    # Finalizer from the splitmix64 generator; bijective on 64-bit ints.
    x = (x + _GOLDEN) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


class SeededRng:
    """Immutable handle for one deterministic random stream.

    ``derive`` mints independent substreams by mixing integers into the
    stream id, so callers can address streams structurally (per iteration,
    per step, per dropout site) without threading mutable generator state.
    """

    __slots__ = ("seed", "stream")

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream = int(stream) & _MASK64

    def derive(self, *indices: int) -> "SeededRng":
        """Child stream addressed by a tuple of integers."""
        s = self.stream
        for ix in indices:
            s = _splitmix64(s ^ ((int(ix) & _MASK64) * _GOLDEN & _MASK64))
        return SeededRng(self.seed, s)

    def generator(self) -> np.random.Generator:
        """Fresh numpy generator; draws depend only on (seed, stream)."""
        return np.random.Generator(np.random.Philox(key=self.seed | (self.stream << 64)))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SeededRng)
            and self.seed == other.seed
            and self.stream == other.stream
        )

    def __hash__(self) -> int:
        return hash((self.seed, self.stream))

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, stream={self.stream})"
