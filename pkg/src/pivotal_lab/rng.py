"""Counter-based random streams for reproducible (and parallel) sampling.

Every estimator in this package addresses randomness through a
:class:`RandomStream`, a (seed, stream index) pair. Stream indices are cheap:
sample s of an experiment uses stream ``base + s``, so results are identical
no matter how samples are split across workers, and any single sample can be
replayed in isolation.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import UsageError

_U64 = (1 << 64) - 1


@lru_cache(maxsize=None)
def _philox_key(seed: int) -> tuple[int, int]:
    # SeedSequence mixes small integer seeds into well-spread key words.
    words = np.random.SeedSequence(seed).generate_state(2, np.uint64)
    return int(words[0]), int(words[1])


@dataclass(frozen=True)
class RandomStream:
    """One independent random sequence, addressed by (seed, stream).

    Backed by Philox4x64. The key is derived from ``seed`` alone; the 256-bit
    counter starts at ``stream << 128``, so distinct stream indices own
    disjoint counter ranges and can never collide under the same seed.
    """

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= self.seed <= _U64:
            raise UsageError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not 0 <= self.stream < (1 << 128):
            raise UsageError(f"stream index out of range: {self.stream}")

    def bit_generator(self) -> np.random.Philox:
        key = np.array(_philox_key(self.seed), dtype=np.uint64)
        counter = np.array(
            [0, 0, self.stream & _U64, (self.stream >> 64) & _U64], dtype=np.uint64
        )
        return np.random.Philox(key=key, counter=counter)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(self.bit_generator())

    def offset(self, delta: int) -> "RandomStream":
        return RandomStream(self.seed, self.stream + delta)


def as_generator(rng) -> np.random.Generator:
    """Accept either a RandomStream or an already-built numpy Generator."""
    if isinstance(rng, RandomStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise UsageError(f"expected RandomStream or numpy Generator, got {type(rng)!r}")
