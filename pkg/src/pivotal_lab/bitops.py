"""Bit-packing helpers shared by the exact and sampling engines.

Configurations are packed little-endian: bit i of the integer code is
coordinate i, set <=> +1.
"""
from __future__ import annotations

import numpy as np


def popcount(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a)


def int_to_bits(code: int, n: int) -> np.ndarray:
    """Unpack an integer code into a uint8 0/1 array of length n."""
    nbytes = (n + 7) // 8
    raw = np.frombuffer(code.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n]


def bits_to_int(bits: np.ndarray) -> int:
    raw = np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little")
    return int.from_bytes(raw.tobytes(), "little")


def random_bits(gen: np.random.Generator, n: int, p: float = 0.5) -> np.ndarray:
    """n independent 0/1 draws, P[1] = p, as uint8.

    The p = 1/2 path consumes raw 64-bit words instead of floats; the two
    paths draw different amounts of entropy, so replaying a stream requires
    the same p.
    """
    if p == 0.5:
        words = gen.bit_generator.random_raw((n + 63) // 64)
        return np.unpackbits(words.view(np.uint8), bitorder="little")[:n]
    return (gen.random(n) < p).view(np.uint8)


def random_code(gen: np.random.Generator, n: int, p: float = 0.5) -> int:
    """A random configuration code on n <= 64 coordinates."""
    if p == 0.5:
        return int(gen.bit_generator.random_raw()) & ((1 << n) - 1)
    return bits_to_int(gen.random(n) < p)
